#include "zskg/losses.hpp"

#include <cmath>
#include <string>

#include "zskg/errors.hpp"

namespace zskg {

namespace {

void require_temperature(double t) {
    if (!(t > 0.0)) {
        throw domain_error("temperature must be > 0, got " + std::to_string(t));
    }
}

void require_targets(const Matrix& logits, const std::vector<std::size_t>& targets) {
    if (targets.size() != logits.rows()) {
        throw index_error("cross_entropy: " + std::to_string(targets.size()) +
                          " targets for " + std::to_string(logits.rows()) + " rows");
    }
    for (std::size_t t : targets) {
        if (t >= logits.cols()) {
            throw index_error("cross_entropy: target " + std::to_string(t) +
                              " out of range for " + std::to_string(logits.cols()) + " classes");
        }
    }
}

} // namespace

Matrix softmax_rows(const Matrix& m, double temperature) {
    require_temperature(temperature);
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = -HUGE_VAL;
        for (std::size_t j = 0; j < m.cols(); ++j) mx = std::max(mx, m(i, j) / temperature);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double e = std::exp(m(i, j) / temperature - mx);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    out.require_finite("softmax_rows");
    return out;
}

Matrix log_softmax_rows(const Matrix& m, double temperature) {
    require_temperature(temperature);
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = -HUGE_VAL;
        for (std::size_t j = 0; j < m.cols(); ++j) mx = std::max(mx, m(i, j) / temperature);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) sum += std::exp(m(i, j) / temperature - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / temperature - lse;
    }
    out.require_finite("log_softmax_rows");
    return out;
}

double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets) {
    require_targets(logits, targets);
    const Matrix logp = log_softmax_rows(logits);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) total -= logp(i, targets[i]);
    return total / static_cast<double>(logits.rows());
}

Matrix cross_entropy_grad(const Matrix& logits, const std::vector<std::size_t>& targets) {
    require_targets(logits, targets);
    Matrix g = softmax_rows(logits);
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        g(i, targets[i]) -= 1.0;
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) *= inv_n;
    }
    return g;
}

Matrix softmax_rows_backward(const Matrix& softmax_out, const Matrix& grad_out,
                             double temperature) {
    require_temperature(temperature);
    if (!softmax_out.same_shape(grad_out)) {
        throw shape_error("softmax_rows_backward: shapes differ");
    }
    Matrix grad_in(softmax_out.rows(), softmax_out.cols());
    for (std::size_t i = 0; i < softmax_out.rows(); ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < softmax_out.cols(); ++j)
            inner += grad_out(i, j) * softmax_out(i, j);
        for (std::size_t j = 0; j < softmax_out.cols(); ++j)
            grad_in(i, j) = softmax_out(i, j) * (grad_out(i, j) - inner) / temperature;
    }
    return grad_in;
}

Matrix kl_divergence_grad_log_p(const Matrix& q) {
    Matrix g = q;
    const double scale = -1.0 / static_cast<double>(q.rows());
    for (double& v : g.data()) v *= scale;
    return g;
}

double kl_divergence(const Matrix& log_p, const Matrix& q) {
    if (!log_p.same_shape(q)) {
        throw shape_error("kl_divergence: shapes differ");
    }
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < q.cols(); ++j) {
            if (q(i, j) < 0.0) {
                throw domain_error("kl_divergence: negative probability in q row " + std::to_string(i));
            }
            sum += q(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw domain_error("kl_divergence: q row " + std::to_string(i) + " sums to " +
                               std::to_string(sum) + ", expected 1");
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < q.cols(); ++j) {
            const double qi = q(i, j);
            if (qi == 0.0) continue; // 0 * log 0 := 0
            total += qi * (std::log(qi) - log_p(i, j));
        }
    }
    return total / static_cast<double>(q.rows());
}

} // namespace zskg
