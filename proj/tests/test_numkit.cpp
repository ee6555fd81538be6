#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "zskg/errors.hpp"
#include "zskg/losses.hpp"
#include "zskg/matrix.hpp"
#include "zskg/nn.hpp"
#include "zskg/rng.hpp"

using namespace zskg;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    return Matrix::gaussian(r, c, rng, scale);
}

std::vector<std::size_t> random_targets(std::size_t n, std::size_t classes, Rng& rng) {
    std::vector<std::size_t> t(n);
    for (auto& v : t) v = rng.next_below(classes);
    return t;
}

} // namespace

TEST_CASE("matmul identity and zero cases") {
    Rng rng(1);
    Matrix m = random_matrix(3, 5, rng);
    Matrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    CHECK(matmul(eye, m) == m);

    Matrix zero(4, 3);
    Matrix out = matmul(zero, random_matrix(3, 2, rng));
    for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("matmul matches triple-loop reference") {
    Rng rng(2);
    Matrix a = random_matrix(5, 4, rng);
    Matrix b = random_matrix(4, 3, rng);
    Matrix got = matmul(a, b);
    Matrix want = oracle::matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.next_below(6);
        const std::size_t k = 1 + rng.next_below(6);
        const std::size_t p = 1 + rng.next_below(6);
        Matrix x = random_matrix(n, k, rng);
        Matrix y = random_matrix(k, p, rng);
        Matrix g = matmul(x, y);
        Matrix w = oracle::matmul(x, y);
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(std::abs(g.data()[i] - w.data()[i]) < 1e-12);
    }
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
    Matrix a(2, 3), b(4, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), "matmul: cannot multiply 2x3 by 4x2", shape_error);
}

TEST_CASE("softmax of a constant row is uniform for any temperature") {
    Matrix m(1, 3, 4.2);
    for (double t : {0.5, 1.0, 3.0, 100.0}) {
        Matrix s = softmax_rows(m, t);
        for (std::size_t j = 0; j < 3; ++j) CHECK(s(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax closed form and high-temperature limit") {
    Matrix m(1, 2);
    m(0, 0) = 0.0;
    m(0, 1) = std::log(2.0);
    Matrix s = softmax_rows(m, 1.0);
    CHECK(std::abs(s(0, 0) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(s(0, 1) - 2.0 / 3.0) < 1e-15);

    Matrix hot(1, 2);
    hot(0, 1) = 10.0;
    Matrix sh = softmax_rows(hot, 10000.0);
    CHECK(std::abs(sh(0, 0) - 0.5) < 1e-3);
    CHECK(std::abs(sh(0, 1) - 0.5) < 1e-3);
}

TEST_CASE("softmax rejects non-positive temperature") {
    Matrix m(1, 2, 1.0);
    CHECK_THROWS_AS(softmax_rows(m, 0.0), domain_error);
    CHECK_THROWS_AS(softmax_rows(m, -1.0), domain_error);
}

TEST_CASE("softmax rows sum to 1 and keep the argmax at any temperature") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix m = random_matrix(2, 2 + rng.next_below(8), rng, 3.0);
        for (double t : {0.5, 1.0, 3.0, 10.0}) {
            Matrix s = softmax_rows(m, t);
            for (std::size_t i = 0; i < s.rows(); ++i) {
                double sum = 0.0;
                std::size_t am_in = 0, am_out = 0;
                for (std::size_t j = 0; j < s.cols(); ++j) {
                    sum += s(i, j);
                    if (m(i, j) > m(i, am_in)) am_in = j;
                    if (s(i, j) > s(i, am_out)) am_out = j;
                }
                CHECK(std::abs(sum - 1.0) < 1e-9);
                CHECK(am_in == am_out);
            }
        }
    }
}

TEST_CASE("cross entropy closed forms") {
    Matrix uniform(3, 4, 0.7);
    CHECK(cross_entropy(uniform, {0, 1, 3}) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    Matrix saturated(2, 5);
    saturated(0, 2) = 1000.0;
    saturated(1, 0) = 1000.0;
    CHECK(cross_entropy(saturated, {2, 0}) < 1e-6);
}

TEST_CASE("cross entropy matches direct summation on random logits") {
    Rng rng(4);
    Matrix logits = random_matrix(8, 5, rng, 2.0);
    auto targets = random_targets(8, 5, rng);
    CHECK(std::abs(cross_entropy(logits, targets) - oracle::cross_entropy(logits, targets)) < 1e-10);
}

TEST_CASE("cross entropy is non-negative and shift invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix logits = random_matrix(4, 6, rng, 3.0);
        auto targets = random_targets(4, 6, rng);
        const double base = cross_entropy(logits, targets);
        CHECK(base >= 0.0);
        Matrix shifted = logits;
        const double c = rng.next_gaussian() * 5.0;
        for (std::size_t i = 0; i < shifted.rows(); ++i)
            for (std::size_t j = 0; j < shifted.cols(); ++j) shifted(i, j) += c;
        CHECK(std::abs(cross_entropy(shifted, targets) - base) < 1e-10);
    }
}

TEST_CASE("cross entropy rejects out-of-range targets") {
    Matrix logits(2, 3);
    CHECK_THROWS_AS(cross_entropy(logits, {0, 3}), index_error);
    CHECK_THROWS_AS(cross_entropy(logits, {0}), index_error);
}

TEST_CASE("kl divergence of identical distributions is zero") {
    Rng rng(6);
    Matrix logits = random_matrix(3, 4, rng);
    Matrix q = softmax_rows(logits);
    Matrix log_q(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.size(); ++i) log_q.data()[i] = std::log(q.data()[i]);
    CHECK(kl_divergence(log_q, q) <= 1e-12);
}

TEST_CASE("kl divergence closed form with a zero-probability entry") {
    Matrix q(1, 2);
    q(0, 0) = 1.0;
    q(0, 1) = 0.0;
    Matrix log_p(1, 2, std::log(0.5));
    CHECK(kl_divergence(log_p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("kl divergence is non-negative on random pairs") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cols = 2 + rng.next_below(6);
        Matrix p = softmax_rows(random_matrix(3, cols, rng, 2.0));
        Matrix q = softmax_rows(random_matrix(3, cols, rng, 2.0));
        Matrix log_p(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.size(); ++i) log_p.data()[i] = std::log(p.data()[i]);
        const double kl = kl_divergence(log_p, q);
        CHECK(kl >= 0.0);
        CHECK(std::abs(kl - oracle::kl(log_p, q)) < 1e-12);
    }
}

TEST_CASE("kl divergence rejects q rows that do not sum to 1") {
    Matrix log_p(1, 2, std::log(0.5));
    Matrix q(1, 2, 0.6);
    CHECK_THROWS_AS(kl_divergence(log_p, q), domain_error);
}

TEST_CASE("conv pool flatten zero kernel and hand-computed constant case") {
    LayerParams k(3, 3);
    k.b.assign(1, 0.0);
    Matrix x(2, 784, 1.0);
    Matrix zero_out = conv_pool_flatten(x, k);
    CHECK(zero_out.cols() == 169);
    for (double v : zero_out.data()) CHECK(v == 0.0);

    k.w.fill(1.0);
    Matrix nine_out = conv_pool_flatten(x, k);
    for (double v : nine_out.data()) CHECK(v == doctest::Approx(9.0).epsilon(1e-15));
}

TEST_CASE("conv pool flatten matches the nested-loop reference") {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix x = random_matrix(2, 784, rng);
        LayerParams k(3, 3);
        k.b.assign(1, rng.next_gaussian() * 0.1);
        for (double& v : k.w.data()) v = rng.next_gaussian() * 0.5;
        Matrix got = conv_pool_flatten(x, k);
        Matrix want = oracle::conv_pool(x, k.w, k.b[0]);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);
    }
}

TEST_CASE("conv pool flatten rejects wrong row length") {
    LayerParams k(3, 3);
    k.b.assign(1, 0.0);
    Matrix x(1, 100);
    CHECK_THROWS_AS(conv_pool_flatten(x, k), shape_error);
}

TEST_CASE("dense forward zero weights, inference dropout identity, affine oracle") {
    Rng rng(9);
    LayerParams p(4, 3);
    p.b = {1.0, -2.0, 0.5};
    Matrix x = random_matrix(5, 4, rng);
    Matrix out = dense_forward(x, p, Activation::none);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) CHECK(out(i, j) == p.b[j]);

    for (double& v : p.w.data()) v = rng.next_gaussian();
    DropoutMask inference_mask{0.5, Mode::inference};
    Matrix with_mask = dense_forward(x, p, Activation::relu, &inference_mask, &rng);
    Matrix without = dense_forward(x, p, Activation::relu);
    CHECK(with_mask == without);

    Matrix plain = dense_forward(x, p, Activation::none);
    Matrix want = oracle::affine(x, p.w, p.b);
    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(std::abs(plain.data()[i] - want.data()[i]) < 1e-12);
}

TEST_CASE("dense layer backward needs a forward pass first") {
    DenseLayer layer(3, 2, Activation::relu);
    CHECK_THROWS_AS(layer.backward(Matrix(1, 2)), state_error);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    Rng rng(10);
    DenseLayer layer(4, 3, Activation::relu);
    init_gaussian(layer.params(), rng, 0.5);
    Matrix x = random_matrix(2, 4, rng);
    layer.forward(x, Mode::inference);
    layer.params().zero_grad();
    layer.backward(Matrix(2, 3));
    for (double v : layer.params().gw.data()) CHECK(v == 0.0);
    for (double v : layer.params().gb) CHECK(v == 0.0);
}

TEST_CASE("dense layer gradients match finite differences") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        DenseLayer layer(5, 4, trial % 2 ? Activation::relu : Activation::none);
        init_gaussian(layer.params(), rng, 0.8);
        for (double& b : layer.params().b) b = rng.next_gaussian() * 0.3;
        Matrix x = random_matrix(3, 5, rng);
        Matrix probe = random_matrix(3, 4, rng);

        auto loss = [&]() {
            Matrix out = dense_forward(x, layer.params(),
                                       trial % 2 ? Activation::relu : Activation::none);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * probe.data()[i];
            return s;
        };

        layer.forward(x, Mode::inference);
        layer.params().zero_grad();
        Matrix gx = layer.backward(probe);

        CHECK(oracle::max_fd_rel_err(loss, layer.params().w.data().data(),
                                     layer.params().gw.data().data(),
                                     layer.params().w.size()) < 1e-4);
        CHECK(oracle::max_fd_rel_err(loss, layer.params().b.data(), layer.params().gb.data(),
                                     layer.params().b.size()) < 1e-4);
        // input gradients through the same probe
        auto loss_x = [&]() {
            Matrix out = dense_forward(x, layer.params(),
                                       trial % 2 ? Activation::relu : Activation::none);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * probe.data()[i];
            return s;
        };
        CHECK(oracle::max_fd_rel_err(loss_x, x.data().data(), gx.data().data(), x.size()) < 1e-4);
    }
}

TEST_CASE("seeded forward/backward runs are bit-identical") {
    auto run = [] {
        Rng rng(12);
        DenseLayer layer(6, 3, Activation::relu, 0.5);
        init_gaussian(layer.params(), rng, 0.5);
        Matrix x = Matrix::gaussian(4, 6, rng);
        Rng drop_rng(99);
        layer.forward(x, Mode::training, &drop_rng);
        layer.params().zero_grad();
        layer.backward(Matrix(4, 3, 1.0));
        return layer.params().gw;
    };
    CHECK(run() == run());
}

TEST_CASE("inverted dropout scales kept entries and is identity at inference") {
    Rng rng(13);
    Matrix x(4, 8, 2.0);
    DropoutMask train{0.5, Mode::training};
    Matrix masked = train.apply(x, rng);
    for (double v : masked.data()) CHECK((v == 0.0 || v == doctest::Approx(4.0)));

    DropoutMask infer{0.5, Mode::inference};
    CHECK(infer.apply(x, rng) == x);

    DropoutMask bad{0.0, Mode::training};
    CHECK_THROWS_AS(bad.apply(x, rng), domain_error);
}

TEST_CASE("inverted dropout preserves expectation within 1 percent") {
    Rng rng(14);
    Matrix x(1, 16, 1.0);
    DropoutMask train{0.5, Mode::training};
    double total = 0.0;
    const int runs = 100000;
    for (int i = 0; i < runs; ++i) {
        Matrix m = train.apply(x, rng);
        for (double v : m.data()) total += v;
    }
    const double mean = total / (runs * 16.0);
    CHECK(std::abs(mean - 1.0) < 0.01);
}

TEST_CASE("adam leaves parameters alone with zero gradient and no decay") {
    LayerParams p(3, 2);
    Rng rng(15);
    init_gaussian(p, rng, 1.0);
    const Matrix before = p.w;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamState state({&p}, cfg);
    p.zero_grad();
    state.step({&p});
    CHECK(p.w == before);
    CHECK(state.step_count() == 1);
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
    LayerParams p(1, 1);
    p.w(0, 0) = 0.7;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamState state({&p}, cfg);
    const double g = -2.5;
    p.gw(0, 0) = g;
    state.step({&p});
    // bias-corrected first step: delta = -lr * g / (|g| + eps)
    const double expected = 0.7 - cfg.lr * g / (std::abs(g) + cfg.epsilon);
    CHECK(p.w(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam ten-step trajectory matches a scalar reference") {
    LayerParams p(1, 1);
    p.w(0, 0) = 5.0;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamState state({&p}, cfg);

    double ref = 5.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 10; ++t) {
        const double grad = ref - 3.0; // d/dp of 0.5 (p-3)^2 at the reference point
        p.gw(0, 0) = p.w(0, 0) - 3.0;
        state.step({&p});

        m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad;
        const double mh = m / (1 - std::pow(cfg.beta1, t));
        const double vh = v / (1 - std::pow(cfg.beta2, t));
        ref -= cfg.lr * mh / (std::sqrt(vh) + cfg.epsilon);
        CHECK(std::abs(p.w(0, 0) - ref) < 1e-10);
    }
}

TEST_CASE("adam decoupled weight decay shrinks parameters before the moment update") {
    LayerParams p(1, 1);
    p.w(0, 0) = 2.0;
    AdamConfig cfg; // lr 1e-3, wd 5e-4, decoupled
    AdamState state({&p}, cfg);
    p.gw(0, 0) = 1.0;
    state.step({&p});
    const double shrunk = 2.0 * (1.0 - cfg.lr * cfg.weight_decay);
    const double expected = shrunk - cfg.lr * 1.0 / (1.0 + cfg.epsilon);
    CHECK(p.w(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam rejects parameter lists that do not match its state") {
    LayerParams p(2, 2), q(3, 3);
    AdamState state({&p}, AdamConfig{});
    CHECK_THROWS_AS(state.step({&q}), state_error);
    CHECK_THROWS_AS(state.step({&p, &q}), state_error);
}

TEST_CASE("layer params zero_grad clears every gradient entry") {
    LayerParams p(4, 4);
    p.gw.fill(3.0);
    p.gb.assign(4, -1.0);
    p.zero_grad();
    for (double v : p.gw.data()) CHECK(v == 0.0);
    for (double v : p.gb) CHECK(v == 0.0);
}

TEST_CASE("softmax backward and kl log-p gradient match finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = trial % 2 ? 1.0 : 2.5;
        Matrix x = random_matrix(3, 5, rng, 2.0);
        Matrix probe = random_matrix(3, 5, rng);
        Matrix grad = softmax_rows_backward(softmax_rows(x, t), probe, t);
        auto loss = [&]() {
            Matrix y = softmax_rows(x, t);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * probe.data()[i];
            return s;
        };
        CHECK(oracle::max_fd_rel_err(loss, x.data().data(), grad.data().data(), x.size()) < 1e-4);
    }

    Matrix q = softmax_rows(random_matrix(4, 3, rng));
    Matrix log_p = log_softmax_rows(random_matrix(4, 3, rng));
    Matrix grad = kl_divergence_grad_log_p(q);
    auto loss = [&]() { return kl_divergence(log_p, q); };
    CHECK(oracle::max_fd_rel_err(loss, log_p.data().data(), grad.data().data(), log_p.size()) <
          1e-4);
}

TEST_CASE("conv pool gradients match finite differences") {
    Rng rng(16);
    ConvPoolLayer layer;
    for (double& v : layer.params().w.data()) v = rng.next_gaussian() * 0.3;
    layer.params().b[0] = 0.05;
    Matrix x = random_matrix(1, 784, rng);
    Matrix probe = random_matrix(1, 169, rng);

    auto loss = [&]() {
        Matrix out = conv_pool_flatten(x, layer.params());
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * probe.data()[i];
        return s;
    };

    layer.forward(x);
    layer.params().zero_grad();
    Matrix gx = layer.backward(probe);

    CHECK(oracle::max_fd_rel_err(loss, layer.params().w.data().data(),
                                 layer.params().gw.data().data(), 9) < 1e-4);
    CHECK(oracle::max_fd_rel_err(loss, layer.params().b.data(), layer.params().gb.data(), 1) < 1e-4);
    CHECK(oracle::max_fd_rel_err(loss, x.data().data(), gx.data().data(), x.size()) < 1e-4);
}
