#pragma once

#include <cstddef>
#include <vector>

#include "zskg/rng.hpp"

namespace zskg {

/// Dense row-major matrix of 64-bit reals. Rows are classes or samples,
/// columns are feature dimensions.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    static Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
        Matrix m(rows, cols);
        for (double& v : m.data_) v = rng.next_gaussian() * scale;
        return m;
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> row(std::size_t i) const {
        return std::vector<double>(row_ptr(i), row_ptr(i) + cols_);
    }
    void set_row(std::size_t i, const std::vector<double>& values);

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double value) { data_.assign(data_.size(), value); }

    bool all_finite() const;

    /// Throws numeric error naming `what` if any entry is NaN or infinite.
    void require_finite(const char* what) const;

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product; throws shape error naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);

/// Concatenates two matrices with equal row counts side by side.
Matrix hconcat(const Matrix& a, const Matrix& b);

/// Stacks two matrices with equal column counts on top of each other.
Matrix vstack(const Matrix& a, const Matrix& b);

std::vector<double> column_sums(const Matrix& m);
std::vector<double> row_means(const Matrix& m);

double l2_norm(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> l2_normalized(const std::vector<double>& v);

} // namespace zskg
