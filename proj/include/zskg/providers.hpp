#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zskg/matrix.hpp"
#include "zskg/nn.hpp"

namespace zskg {

enum class ProviderKind { mock, remote };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::mock;
    std::size_t text_dim = 64;
    std::size_t visual_dim = 64;
    std::uint64_t seed = 0;
    std::string endpoint;          // remote only, e.g. http://127.0.0.1:8080
    int timeout_ms = 5000;
    std::string model = "zskg-embed";
    double synth_noise_sigma = 0.05;

    void validate() const;
};

/// Per-class feature vectors. Text embeddings are one per class; visual
/// features are a row set (training samples for seen classes, synthesized
/// rows for unseen classes).
class FeatureStore {
public:
    FeatureStore() = default;
    FeatureStore(std::size_t text_dim, std::size_t visual_dim)
        : text_dim_(text_dim), visual_dim_(visual_dim) {}

    std::size_t text_dim() const { return text_dim_; }
    std::size_t visual_dim() const { return visual_dim_; }

    void set_text(int class_id, const std::vector<double>& embedding);
    void add_visual(int class_id, const std::vector<double>& row);
    void add_visual_rows(int class_id, const Matrix& rows);
    void clear_visual(int class_id);

    bool has_text(int class_id) const;
    bool has_visual(int class_id) const;
    const std::vector<double>& text(int class_id) const;    // throws if absent
    const Matrix& visual(int class_id) const;               // throws if absent
    std::vector<int> class_ids() const;

    bool operator==(const FeatureStore& other) const = default;

private:
    struct Entry {
        std::optional<std::vector<double>> text;
        Matrix visual;
        bool operator==(const Entry&) const = default;
    };
    std::size_t text_dim_ = 0;
    std::size_t visual_dim_ = 0;
    std::map<int, Entry> entries_;
};

/// Deterministic unit-norm embedding of a text label. The mock kind draws a
/// gaussian vector from a stream seeded by hash(seed, label) and normalizes.
/// The remote kind posts to <endpoint>/embed and L2-normalizes the response.
std::vector<double> embed_text(const std::string& label, const ProviderConfig& cfg);

/// One POST for a whole label batch (the wire protocol takes an array).
std::vector<std::vector<double>> embed_text_batch(const std::vector<std::string>& labels,
                                                  const ProviderConfig& cfg);

/// The fixed text-to-visual linear map shared by the mock provider and the
/// synthetic dataset generator. Entries are N(0,1)/sqrt(text_dim), drawn from
/// the stream derive_seed(seed, "feature-map").
Matrix mock_feature_map(std::uint64_t seed, std::size_t text_dim, std::size_t visual_dim);

/// n pseudo-visual rows for one class: G*text_emb + gaussian noise. The
/// remote kind is image generation plus feature extraction, which this
/// toolkit does not implement; it reports an unsupported-capability error.
Matrix synthesize_unseen_visual_features(const std::vector<double>& text_emb, std::size_t n,
                                         const ProviderConfig& cfg);

/// The visual feature extractor for 28x28 image grids: conv/pool/flatten,
/// then two dense layers (ReLU, then linear to the visual dimension).
class CnnExtractor {
public:
    CnnExtractor(std::size_t hidden_dim, std::size_t out_dim)
        : fc1_(ConvPoolLayer::kOutputLen, hidden_dim, Activation::relu),
          fc2_(hidden_dim, out_dim, Activation::none) {}

    void init(Rng& rng, double scale = 0.1);
    Matrix forward(const Matrix& image_rows, Mode mode = Mode::inference);

    ConvPoolLayer& conv() { return conv_; }
    DenseLayer& fc1() { return fc1_; }
    DenseLayer& fc2() { return fc2_; }

private:
    ConvPoolLayer conv_;
    DenseLayer fc1_;
    DenseLayer fc2_;
};

Matrix extract_visual_features(const Matrix& image_rows, CnnExtractor& cnn);

} // namespace zskg
