#pragma once

#include <cstdint>
#include <vector>

#include "zskg/matrix.hpp"
#include "zskg/rng.hpp"

namespace zskg {

enum class Mode { training, inference };
enum class Activation { none, relu };

/// Weights plus matching gradient buffers. Weight layout is input x output,
/// so a batch maps as y = x * w + b.
struct LayerParams {
    Matrix w;
    std::vector<double> b;
    Matrix gw;
    std::vector<double> gb;

    LayerParams() = default;
    LayerParams(std::size_t in_dim, std::size_t out_dim)
        : w(in_dim, out_dim), b(out_dim, 0.0), gw(in_dim, out_dim), gb(out_dim, 0.0) {}

    void zero_grad() {
        gw.fill(0.0);
        gb.assign(gb.size(), 0.0);
    }

    std::size_t count() const { return w.size() + b.size(); }

    bool same_shape(const LayerParams& other) const {
        return w.same_shape(other.w) && b.size() == other.b.size();
    }
};

void init_gaussian(LayerParams& p, Rng& rng, double scale);

/// Inverted dropout: kept entries are scaled by 1/keep at training time so
/// inference is a plain forward pass.
struct DropoutMask {
    double keep = 1.0; // in (0,1]
    Mode mode = Mode::inference;

    /// Applies the mask drawn from `rng`; identity in inference mode.
    /// When `mask_out` is given, stores the multiplier actually applied.
    Matrix apply(const Matrix& x, Rng& rng, Matrix* mask_out = nullptr) const;
};

/// Affine map, optional dropout (after affine, before activation), optional ReLU.
/// Stateless; see DenseLayer for the training path with gradient support.
Matrix dense_forward(const Matrix& x, const LayerParams& p, Activation act,
                     const DropoutMask* dropout = nullptr, Rng* rng = nullptr);

class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act, double dropout_keep = 1.0)
        : p_(in_dim, out_dim), act_(act), keep_(dropout_keep) {}

    Matrix forward(const Matrix& x, Mode mode, Rng* rng = nullptr);

    /// Fills this layer's gradient buffers and returns the gradient w.r.t. the
    /// forward input. Throws state error if no forward pass was recorded.
    Matrix backward(const Matrix& grad_out);

    LayerParams& params() { return p_; }
    const LayerParams& params() const { return p_; }
    std::size_t in_dim() const { return p_.w.rows(); }
    std::size_t out_dim() const { return p_.w.cols(); }
    double dropout_keep() const { return keep_; }

private:
    LayerParams p_;
    Activation act_;
    double keep_;
    Matrix x_;
    Matrix preact_; // post-dropout, pre-activation
    Matrix mask_;   // empty when no dropout was applied
    bool has_forward_ = false;
};

/// Front of the visual feature extractor: one 28x28 single-channel image per
/// row, 3x3 valid convolution with one kernel, ReLU, 2x2 max pool with stride
/// 2, flatten. Output rows have 13*13 = 169 entries.
class ConvPoolLayer {
public:
    static constexpr std::size_t kImageSide = 28;
    static constexpr std::size_t kKernelSide = 3;
    static constexpr std::size_t kConvSide = kImageSide - kKernelSide + 1; // 26
    static constexpr std::size_t kPoolSide = kConvSide / 2;                // 13
    static constexpr std::size_t kInputLen = kImageSide * kImageSide;      // 784
    static constexpr std::size_t kOutputLen = kPoolSide * kPoolSide;       // 169

    ConvPoolLayer() : p_(kKernelSide, kKernelSide) { p_.b.assign(1, 0.0); p_.gb.assign(1, 0.0); }

    Matrix forward(const Matrix& x);
    Matrix backward(const Matrix& grad_out);

    LayerParams& params() { return p_; }
    const LayerParams& params() const { return p_; }

private:
    LayerParams p_; // w is the 3x3 kernel, b has a single entry
    Matrix x_;
    Matrix conv_preact_;          // batch x 676, pre-ReLU
    std::vector<std::size_t> argmax_; // batch * 169 flat indices into the conv grid
    bool has_forward_ = false;
};

/// Stateless convenience wrapper over ConvPoolLayer::forward.
Matrix conv_pool_flatten(const Matrix& x, const LayerParams& p);

struct AdamConfig {
    double lr = 1e-3;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool decoupled_weight_decay = true; // false: classic L2 added to the gradient
};

/// Adam with bias correction. Weight decay is decoupled by default: applied as
/// p <- p - lr*wd*p before the moment update.
class AdamState {
public:
    AdamState(const std::vector<LayerParams*>& params, AdamConfig cfg);

    void step(const std::vector<LayerParams*>& params);

    std::int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<Matrix> mw_, vw_;
    std::vector<std::vector<double>> mb_, vb_;
};

inline void adam_step(const std::vector<LayerParams*>& params, AdamState& state) {
    state.step(params);
}

} // namespace zskg
