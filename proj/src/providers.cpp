#include "zskg/providers.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "zskg/errors.hpp"
#include "zskg/rng.hpp"

namespace zskg {

void ProviderConfig::validate() const {
    if (text_dim < 2 || visual_dim < 2) {
        throw domain_error("provider: embedding dimensions must be >= 2");
    }
    if (kind == ProviderKind::remote && endpoint.empty()) {
        throw domain_error("provider: remote kind requires an endpoint URL");
    }
    if (synth_noise_sigma < 0.0) {
        throw domain_error("provider: synthesis noise sigma must be >= 0");
    }
}

void FeatureStore::set_text(int class_id, const std::vector<double>& embedding) {
    if (embedding.size() != text_dim_) {
        throw shape_error("feature store: text embedding for class " + std::to_string(class_id) +
                          " has dimension " + std::to_string(embedding.size()) + ", expected " +
                          std::to_string(text_dim_));
    }
    entries_[class_id].text = embedding;
}

void FeatureStore::add_visual(int class_id, const std::vector<double>& row) {
    if (row.size() != visual_dim_) {
        throw shape_error("feature store: visual row for class " + std::to_string(class_id) +
                          " has dimension " + std::to_string(row.size()) + ", expected " +
                          std::to_string(visual_dim_));
    }
    Entry& e = entries_[class_id];
    if (e.visual.empty()) e.visual = Matrix(0, visual_dim_);
    Matrix next(e.visual.rows() + 1, visual_dim_);
    for (std::size_t i = 0; i < e.visual.rows(); ++i)
        for (std::size_t j = 0; j < visual_dim_; ++j) next(i, j) = e.visual(i, j);
    next.set_row(e.visual.rows(), row);
    e.visual = next;
}

void FeatureStore::add_visual_rows(int class_id, const Matrix& rows) {
    if (rows.cols() != visual_dim_) {
        throw shape_error("feature store: visual rows for class " + std::to_string(class_id) +
                          " have dimension " + std::to_string(rows.cols()) + ", expected " +
                          std::to_string(visual_dim_));
    }
    Entry& e = entries_[class_id];
    if (e.visual.empty()) {
        e.visual = rows;
        return;
    }
    e.visual = vstack(e.visual, rows);
}

void FeatureStore::clear_visual(int class_id) {
    auto it = entries_.find(class_id);
    if (it != entries_.end()) it->second.visual = Matrix();
}

bool FeatureStore::has_text(int class_id) const {
    auto it = entries_.find(class_id);
    return it != entries_.end() && it->second.text.has_value();
}

bool FeatureStore::has_visual(int class_id) const {
    auto it = entries_.find(class_id);
    return it != entries_.end() && it->second.visual.rows() > 0;
}

const std::vector<double>& FeatureStore::text(int class_id) const {
    auto it = entries_.find(class_id);
    if (it == entries_.end() || !it->second.text) {
        throw state_error("feature store: no text embedding for class " + std::to_string(class_id));
    }
    return *it->second.text;
}

const Matrix& FeatureStore::visual(int class_id) const {
    auto it = entries_.find(class_id);
    if (it == entries_.end() || it->second.visual.rows() == 0) {
        throw state_error("feature store: no visual features for class " + std::to_string(class_id));
    }
    return it->second.visual;
}

std::vector<int> FeatureStore::class_ids() const {
    std::vector<int> ids;
    ids.reserve(entries_.size());
    for (const auto& [id, entry] : entries_) ids.push_back(id);
    return ids;
}

namespace {

std::vector<double> mock_embedding(const std::string& label, const ProviderConfig& cfg) {
    Rng rng(splitmix64(derive_seed(cfg.seed, "embed-text") ^ fnv1a64(label)));
    std::vector<double> v(cfg.text_dim);
    for (double& x : v) x = rng.next_gaussian();
    return l2_normalized(v);
}

struct ParsedEndpoint {
    std::string base;   // scheme://host:port
    std::string prefix; // optional path prefix
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    const std::size_t path_start =
        endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string require_api_key() {
    const char* key = std::getenv("ZSKG_API_KEY");
    if (!key || !*key) {
        throw provider_error("remote provider: ZSKG_API_KEY is not set", 0);
    }
    return key;
}

std::vector<std::vector<double>> remote_embed(const std::vector<std::string>& labels,
                                              const ProviderConfig& cfg) {
    const std::string key = require_api_key();
    const ParsedEndpoint ep = parse_endpoint(cfg.endpoint);

    nlohmann::json body;
    body["model"] = cfg.model;
    body["input"] = labels;
    const std::string payload = body.dump();

    httplib::Client client(ep.base);
    client.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    httplib::Headers headers = {{"Authorization", "Bearer " + key}};

    httplib::Result res;
    int attempts = 0;
    for (; attempts < 2; ++attempts) { // one retry, on connection failure only
        res = client.Post(ep.prefix + "/embed", headers, payload, "application/json");
        if (res) break;
    }
    if (!res) {
        throw provider_error("remote provider: connection to " + cfg.endpoint + " failed after " +
                                 std::to_string(attempts) + " attempts (" +
                                 httplib::to_string(res.error()) + ")",
                             0);
    }
    if (res->status != 200) {
        throw provider_error("remote provider: " + cfg.endpoint + "/embed returned status " +
                                 std::to_string(res->status),
                             res->status);
    }

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw provider_error(std::string("remote provider: malformed response body: ") + e.what(), 200);
    }
    if (!parsed.contains("embeddings") || !parsed["embeddings"].is_array() ||
        parsed["embeddings"].size() != labels.size()) {
        throw provider_error("remote provider: response must carry one embedding per input", 200);
    }
    std::vector<std::vector<double>> out;
    out.reserve(labels.size());
    for (const auto& entry : parsed["embeddings"]) {
        std::vector<double> v = entry.get<std::vector<double>>();
        if (v.size() != cfg.text_dim) {
            throw provider_error("remote provider: embedding dimension " + std::to_string(v.size()) +
                                     " does not match configured " + std::to_string(cfg.text_dim),
                                 200);
        }
        out.push_back(l2_normalized(v));
    }
    return out;
}

} // namespace

std::vector<double> embed_text(const std::string& label, const ProviderConfig& cfg) {
    return embed_text_batch({label}, cfg).front();
}

std::vector<std::vector<double>> embed_text_batch(const std::vector<std::string>& labels,
                                                  const ProviderConfig& cfg) {
    cfg.validate();
    for (const std::string& label : labels) {
        if (label.empty()) throw domain_error("embed_text: label must be non-empty");
    }
    if (cfg.kind == ProviderKind::mock) {
        std::vector<std::vector<double>> out;
        out.reserve(labels.size());
        for (const std::string& label : labels) out.push_back(mock_embedding(label, cfg));
        return out;
    }
    return remote_embed(labels, cfg);
}

Matrix mock_feature_map(std::uint64_t seed, std::size_t text_dim, std::size_t visual_dim) {
    Rng rng(derive_seed(seed, "feature-map"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(text_dim));
    return Matrix::gaussian(text_dim, visual_dim, rng, scale);
}

Matrix synthesize_unseen_visual_features(const std::vector<double>& text_emb, std::size_t n,
                                         const ProviderConfig& cfg) {
    cfg.validate();
    if (text_emb.size() != cfg.text_dim) {
        throw shape_error("synthesize: text embedding dimension " + std::to_string(text_emb.size()) +
                          " does not match configured " + std::to_string(cfg.text_dim));
    }
    if (cfg.kind == ProviderKind::remote) {
        throw unsupported_error(
            "remote provider: image generation followed by feature extraction is not implemented");
    }
    const Matrix g = mock_feature_map(cfg.seed, cfg.text_dim, cfg.visual_dim);
    Matrix emb(1, cfg.text_dim);
    emb.set_row(0, text_emb);
    const Matrix base = matmul(emb, g);

    Rng noise(splitmix64(derive_seed(cfg.seed, "synth-noise") ^ hash_doubles(text_emb)));
    Matrix rows(n, cfg.visual_dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cfg.visual_dim; ++j)
            rows(i, j) = base(0, j) + cfg.synth_noise_sigma * noise.next_gaussian();
    rows.require_finite("synthesize_unseen_visual_features");
    return rows;
}

void CnnExtractor::init(Rng& rng, double scale) {
    for (double& v : conv_.params().w.data()) v = rng.next_gaussian() * scale;
    conv_.params().b[0] = 0.0;
    init_gaussian(fc1_.params(), rng, scale);
    init_gaussian(fc2_.params(), rng, scale);
}

Matrix CnnExtractor::forward(const Matrix& image_rows, Mode mode) {
    Matrix x = conv_.forward(image_rows);
    x = fc1_.forward(x, mode);
    return fc2_.forward(x, mode);
}

Matrix extract_visual_features(const Matrix& image_rows, CnnExtractor& cnn) {
    return cnn.forward(image_rows, Mode::inference);
}

} // namespace zskg
