#include "zskg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zskg/errors.hpp"

namespace zskg {

void init_gaussian(LayerParams& p, Rng& rng, double scale) {
    for (double& v : p.w.data()) v = rng.next_gaussian() * scale;
    std::fill(p.b.begin(), p.b.end(), 0.0);
    p.zero_grad();
}

Matrix DropoutMask::apply(const Matrix& x, Rng& rng, Matrix* mask_out) const {
    if (keep <= 0.0 || keep > 1.0) {
        throw domain_error("dropout: keep probability must be in (0,1], got " + std::to_string(keep));
    }
    if (mode == Mode::inference) {
        if (mask_out) *mask_out = Matrix();
        return x;
    }
    Matrix mask(x.rows(), x.cols());
    const double inv_keep = 1.0 / keep;
    for (double& m : mask.data()) m = (rng.next_double() < keep) ? inv_keep : 0.0;
    if (mask_out) *mask_out = mask;
    return hadamard(x, mask);
}

namespace {

Matrix affine(const Matrix& x, const LayerParams& p) {
    if (x.cols() != p.w.rows()) {
        throw shape_error("dense: input has " + std::to_string(x.cols()) +
                          " columns, layer expects " + std::to_string(p.w.rows()));
    }
    Matrix z = matmul(x, p.w);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += p.b[j];
    return z;
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

} // namespace

Matrix dense_forward(const Matrix& x, const LayerParams& p, Activation act,
                     const DropoutMask* dropout, Rng* rng) {
    Matrix z = affine(x, p);
    if (dropout && dropout->mode == Mode::training) {
        if (!rng) throw state_error("dense_forward: training-mode dropout needs an rng");
        z = dropout->apply(z, *rng);
    }
    if (act == Activation::relu) relu_inplace(z);
    z.require_finite("dense_forward");
    return z;
}

Matrix DenseLayer::forward(const Matrix& x, Mode mode, Rng* rng) {
    x_ = x;
    Matrix z = affine(x, p_);
    if (keep_ < 1.0 && mode == Mode::training) {
        if (!rng) throw state_error("dense layer: training-mode dropout needs an rng");
        DropoutMask drop{keep_, Mode::training};
        z = drop.apply(z, *rng, &mask_);
    } else {
        mask_ = Matrix();
    }
    preact_ = z;
    if (act_ == Activation::relu) relu_inplace(z);
    z.require_finite("dense forward");
    has_forward_ = true;
    return z;
}

Matrix DenseLayer::backward(const Matrix& grad_out) {
    if (!has_forward_) throw state_error("dense layer: backward called before forward");
    if (grad_out.rows() != preact_.rows() || grad_out.cols() != preact_.cols()) {
        throw shape_error("dense backward: gradient shape mismatch");
    }
    Matrix g = grad_out;
    if (act_ == Activation::relu) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (preact_.data()[i] <= 0.0) g.data()[i] = 0.0;
        }
    }
    if (!mask_.empty()) g = hadamard(g, mask_);
    // g is now the gradient at the affine output
    Matrix gw = matmul(transpose(x_), g);
    for (std::size_t i = 0; i < p_.gw.size(); ++i) p_.gw.data()[i] += gw.data()[i];
    std::vector<double> gb = column_sums(g);
    for (std::size_t j = 0; j < p_.gb.size(); ++j) p_.gb[j] += gb[j];
    return matmul(g, transpose(p_.w));
}

Matrix ConvPoolLayer::forward(const Matrix& x) {
    if (x.cols() != kInputLen) {
        throw shape_error("conv_pool_flatten: rows must have " + std::to_string(kInputLen) +
                          " entries, got " + std::to_string(x.cols()));
    }
    const std::size_t batch = x.rows();
    x_ = x;
    conv_preact_ = Matrix(batch, kConvSide * kConvSide);
    argmax_.assign(batch * kOutputLen, 0);
    Matrix out(batch, kOutputLen);

    for (std::size_t r = 0; r < batch; ++r) {
        const double* img = x.row_ptr(r);
        double* conv = conv_preact_.row_ptr(r);
        for (std::size_t ci = 0; ci < kConvSide; ++ci) {
            for (std::size_t cj = 0; cj < kConvSide; ++cj) {
                double s = p_.b[0];
                for (std::size_t ki = 0; ki < kKernelSide; ++ki)
                    for (std::size_t kj = 0; kj < kKernelSide; ++kj)
                        s += img[(ci + ki) * kImageSide + (cj + kj)] * p_.w(ki, kj);
                conv[ci * kConvSide + cj] = s;
            }
        }
        for (std::size_t pi = 0; pi < kPoolSide; ++pi) {
            for (std::size_t pj = 0; pj < kPoolSide; ++pj) {
                double best = -1.0; // ReLU output is >= 0, so any cell wins
                std::size_t best_idx = (2 * pi) * kConvSide + (2 * pj);
                for (std::size_t di = 0; di < 2; ++di) {
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t idx = (2 * pi + di) * kConvSide + (2 * pj + dj);
                        const double v = std::max(conv[idx], 0.0);
                        if (v > best) {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                out(r, pi * kPoolSide + pj) = best;
                argmax_[r * kOutputLen + pi * kPoolSide + pj] = best_idx;
            }
        }
    }
    out.require_finite("conv_pool_flatten");
    has_forward_ = true;
    return out;
}

Matrix ConvPoolLayer::backward(const Matrix& grad_out) {
    if (!has_forward_) throw state_error("conv layer: backward called before forward");
    if (grad_out.rows() != x_.rows() || grad_out.cols() != kOutputLen) {
        throw shape_error("conv backward: gradient shape mismatch");
    }
    const std::size_t batch = x_.rows();
    Matrix grad_in(batch, kInputLen);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* img = x_.row_ptr(r);
        const double* conv = conv_preact_.row_ptr(r);
        double* gin = grad_in.row_ptr(r);
        for (std::size_t cell = 0; cell < kOutputLen; ++cell) {
            const double g = grad_out(r, cell);
            if (g == 0.0) continue;
            const std::size_t idx = argmax_[r * kOutputLen + cell];
            if (conv[idx] <= 0.0) continue; // ReLU gate
            const std::size_t ci = idx / kConvSide;
            const std::size_t cj = idx % kConvSide;
            for (std::size_t ki = 0; ki < kKernelSide; ++ki) {
                for (std::size_t kj = 0; kj < kKernelSide; ++kj) {
                    p_.gw(ki, kj) += g * img[(ci + ki) * kImageSide + (cj + kj)];
                    gin[(ci + ki) * kImageSide + (cj + kj)] += g * p_.w(ki, kj);
                }
            }
            p_.gb[0] += g;
        }
    }
    return grad_in;
}

Matrix conv_pool_flatten(const Matrix& x, const LayerParams& p) {
    if (p.w.rows() != ConvPoolLayer::kKernelSide || p.w.cols() != ConvPoolLayer::kKernelSide ||
        p.b.size() != 1) {
        throw shape_error("conv_pool_flatten: kernel must be 3x3 with a single bias");
    }
    ConvPoolLayer layer;
    layer.params().w = p.w;
    layer.params().b = p.b;
    return layer.forward(x);
}

AdamState::AdamState(const std::vector<LayerParams*>& params, AdamConfig cfg) : cfg_(cfg) {
    mw_.reserve(params.size());
    for (const LayerParams* p : params) {
        mw_.emplace_back(p->w.rows(), p->w.cols());
        vw_.emplace_back(p->w.rows(), p->w.cols());
        mb_.emplace_back(p->b.size(), 0.0);
        vb_.emplace_back(p->b.size(), 0.0);
    }
}

void AdamState::step(const std::vector<LayerParams*>& params) {
    if (params.size() != mw_.size()) {
        throw state_error("adam: expected " + std::to_string(mw_.size()) +
                          " parameter tensors, got " + std::to_string(params.size()));
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (std::size_t t = 0; t < params.size(); ++t) {
        LayerParams& p = *params[t];
        if (!p.w.same_shape(mw_[t]) || p.b.size() != mb_[t].size()) {
            throw state_error("adam: parameter tensor " + std::to_string(t) +
                              " shape does not match optimizer state");
        }
        auto update = [&](double* value, double* grad, double* m, double* v, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                double g = grad[i];
                if (cfg_.weight_decay != 0.0) {
                    if (cfg_.decoupled_weight_decay) {
                        value[i] -= cfg_.lr * cfg_.weight_decay * value[i];
                    } else {
                        g += cfg_.weight_decay * value[i];
                    }
                }
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
                if (!std::isfinite(value[i])) {
                    throw error("adam: non-finite parameter after update");
                }
            }
        };
        update(p.w.data().data(), p.gw.data().data(), mw_[t].data().data(), vw_[t].data().data(), p.w.size());
        update(p.b.data(), p.gb.data(), mb_[t].data(), vb_[t].data(), p.b.size());
    }
}

} // namespace zskg
