#pragma once

#include <vector>

#include "zskg/matrix.hpp"

namespace zskg {

/// Row-wise softmax of (input / temperature); each output row sums to 1.
Matrix softmax_rows(const Matrix& m, double temperature = 1.0);

/// Numerically stable row-wise log-softmax of (input / temperature).
Matrix log_softmax_rows(const Matrix& m, double temperature = 1.0);

/// Mean over rows of -log softmax(logits)[target].
double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& targets);

/// d cross_entropy / d logits: (softmax - onehot) / rows.
Matrix cross_entropy_grad(const Matrix& logits, const std::vector<std::size_t>& targets);

/// Backward pass through softmax_rows: given y = softmax_rows(x, t) and
/// dL/dy, returns dL/dx.
Matrix softmax_rows_backward(const Matrix& softmax_out, const Matrix& grad_out,
                             double temperature = 1.0);

/// Mean over rows of sum_j q * (log q - log p), with 0*log 0 := 0.
/// log_p rows must be valid log-probabilities; q rows must sum to 1.
double kl_divergence(const Matrix& log_p, const Matrix& q);

/// d kl_divergence / d log_p, which is -q / rows.
Matrix kl_divergence_grad_log_p(const Matrix& q);

} // namespace zskg
