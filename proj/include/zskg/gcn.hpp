#pragma once

#include "zskg/graph.hpp"
#include "zskg/matrix.hpp"
#include "zskg/nn.hpp"

namespace zskg {

/// Two propagation layers. With `shared` set, theta1 is used for both layers
/// (it must be square) and accumulates gradients from both.
struct GcnParams {
    LayerParams theta1; // input -> hidden
    LayerParams theta2; // hidden -> output
    bool shared = false;

    GcnParams() = default;
    GcnParams(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim)
        : theta1(in_dim, hidden_dim), theta2(hidden_dim, out_dim) {}

    void validate() const;
    void zero_grad() {
        theta1.zero_grad();
        theta2.zero_grad();
    }
};

constexpr double kGcnLeakySlope = 0.2;

/// F_bar = A_hat * leaky_relu(A_hat * (F theta1 + b1)) theta2 + b2 with the
/// hidden activation LeakyReLU(slope) and an identity map on the output.
/// Dropout is applied to each layer input in training mode.
Matrix gcn_propagate(const Matrix& f, const AdjacencyOperator& adj, const GcnParams& params,
                     const DropoutMask& dropout, Rng* rng = nullptr,
                     double leaky_slope = kGcnLeakySlope);

/// Training-capable propagation with cached intermediates.
class GcnPropagator {
public:
    explicit GcnPropagator(double dropout_rate = 0.5, double leaky_slope = kGcnLeakySlope)
        : dropout_rate_(dropout_rate), leaky_slope_(leaky_slope) {}

    Matrix forward(const Matrix& f, const AdjacencyOperator& adj, GcnParams& params,
                   Mode mode, Rng* rng = nullptr);

    /// Accumulates theta gradients, returns the gradient w.r.t. the input features.
    Matrix backward(const Matrix& grad_out);

private:
    double dropout_rate_;
    double leaky_slope_;
    GcnParams* params_ = nullptr;
    const AdjacencyOperator* adj_ = nullptr;
    Matrix in0_, in1_;     // layer inputs after dropout
    Matrix mask0_, mask1_; // dropout masks (empty in inference)
    Matrix hidden_pre_;    // A_hat * affine1, before the leaky activation
    bool has_forward_ = false;
};

} // namespace zskg
