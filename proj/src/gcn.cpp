#include "zskg/gcn.hpp"

#include <string>

#include "zskg/errors.hpp"

namespace zskg {

void GcnParams::validate() const {
    if (shared) {
        if (theta1.w.rows() != theta1.w.cols()) {
            throw shape_error("gcn: shared theta must be square, got " +
                              std::to_string(theta1.w.rows()) + "x" + std::to_string(theta1.w.cols()));
        }
        return;
    }
    if (theta1.w.cols() != theta2.w.rows()) {
        throw shape_error("gcn: theta1 output " + std::to_string(theta1.w.cols()) +
                          " does not chain into theta2 input " + std::to_string(theta2.w.rows()));
    }
}

namespace {

Matrix affine(const Matrix& x, const LayerParams& p) {
    Matrix z = matmul(x, p.w);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += p.b[j];
    return z;
}

void leaky_relu_inplace(Matrix& m, double slope) {
    for (double& v : m.data()) {
        if (v <= 0.0) v *= slope;
    }
}

void check_rows(const Matrix& f, const AdjacencyOperator& adj) {
    if (f.rows() != adj.size()) {
        throw shape_error("gcn: " + std::to_string(f.rows()) + " feature rows for " +
                          std::to_string(adj.size()) + " graph nodes");
    }
}

} // namespace

Matrix gcn_propagate(const Matrix& f, const AdjacencyOperator& adj, const GcnParams& params,
                     const DropoutMask& dropout, Rng* rng, double leaky_slope) {
    params.validate();
    check_rows(f, adj);
    const LayerParams& t2 = params.shared ? params.theta1 : params.theta2;

    Matrix in0 = f;
    if (dropout.mode == Mode::training) {
        if (!rng) throw state_error("gcn_propagate: training-mode dropout needs an rng");
        in0 = dropout.apply(in0, *rng);
    }
    Matrix hidden = adj.apply(affine(in0, params.theta1));
    leaky_relu_inplace(hidden, leaky_slope);

    Matrix in1 = hidden;
    if (dropout.mode == Mode::training) {
        in1 = dropout.apply(in1, *rng);
    }
    Matrix out = adj.apply(affine(in1, t2));
    out.require_finite("gcn_propagate");
    return out;
}

Matrix GcnPropagator::forward(const Matrix& f, const AdjacencyOperator& adj, GcnParams& params,
                              Mode mode, Rng* rng) {
    params.validate();
    check_rows(f, adj);
    params_ = &params;
    adj_ = &adj;
    const LayerParams& t2 = params.shared ? params.theta1 : params.theta2;

    if (dropout_rate_ < 0.0 || dropout_rate_ >= 1.0) {
        throw domain_error("gcn: dropout rate must be in [0,1), got " + std::to_string(dropout_rate_));
    }
    const DropoutMask drop{1.0 - dropout_rate_, Mode::training};
    mask0_ = Matrix();
    mask1_ = Matrix();

    in0_ = f;
    if (mode == Mode::training && dropout_rate_ > 0.0) {
        if (!rng) throw state_error("gcn forward: training-mode dropout needs an rng");
        in0_ = drop.apply(f, *rng, &mask0_);
    }
    hidden_pre_ = adj.apply(affine(in0_, params.theta1));
    Matrix activated = hidden_pre_;
    leaky_relu_inplace(activated, leaky_slope_);

    in1_ = activated;
    if (mode == Mode::training && dropout_rate_ > 0.0) {
        in1_ = drop.apply(activated, *rng, &mask1_);
    }
    Matrix out = adj.apply(affine(in1_, t2));
    out.require_finite("gcn forward");
    has_forward_ = true;
    return out;
}

Matrix GcnPropagator::backward(const Matrix& grad_out) {
    if (!has_forward_) throw state_error("gcn: backward called before forward");
    GcnParams& p = *params_;
    LayerParams& t2 = p.shared ? p.theta1 : p.theta2;

    // out = A_hat * (in1 * t2 + b2)
    Matrix dz2 = adj_->apply_transpose(grad_out);
    Matrix gw2 = matmul(transpose(in1_), dz2);
    for (std::size_t i = 0; i < t2.gw.size(); ++i) t2.gw.data()[i] += gw2.data()[i];
    std::vector<double> gb2 = column_sums(dz2);
    for (std::size_t j = 0; j < t2.gb.size(); ++j) t2.gb[j] += gb2[j];
    Matrix d_act = matmul(dz2, transpose(t2.w));

    if (!mask1_.empty()) d_act = hadamard(d_act, mask1_);
    for (std::size_t i = 0; i < d_act.size(); ++i) {
        if (hidden_pre_.data()[i] <= 0.0) d_act.data()[i] *= leaky_slope_;
    }

    // hidden_pre = A_hat * (in0 * t1 + b1)
    Matrix dz1 = adj_->apply_transpose(d_act);
    Matrix gw1 = matmul(transpose(in0_), dz1);
    for (std::size_t i = 0; i < p.theta1.gw.size(); ++i) p.theta1.gw.data()[i] += gw1.data()[i];
    std::vector<double> gb1 = column_sums(dz1);
    for (std::size_t j = 0; j < p.theta1.gb.size(); ++j) p.theta1.gb[j] += gb1[j];
    Matrix d_in = matmul(dz1, transpose(p.theta1.w));
    if (!mask0_.empty()) d_in = hadamard(d_in, mask0_);
    return d_in;
}

} // namespace zskg
