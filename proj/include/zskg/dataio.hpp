#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "zskg/evalkit.hpp"
#include "zskg/graph.hpp"
#include "zskg/pipeline.hpp"
#include "zskg/providers.hpp"

namespace zskg {

struct SyntheticSpec {
    std::size_t seen_classes = 8;
    std::size_t unseen_classes = 4;
    std::size_t samples_per_class = 100;
    std::size_t text_dim = 64;
    std::size_t visual_dim = 64;
    double noise_sigma = 0.05;
    enum class Topology { tree, ring, random };
    Topology topology = Topology::tree;
    double edge_prob = 0.3; // random topology only
    std::uint64_t seed = 42;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);
};

std::string topology_name(SyntheticSpec::Topology t);
SyntheticSpec::Topology topology_from_name(const std::string& name);

struct Sample {
    int truth = 0;
    std::vector<double> vec;

    bool operator==(const Sample&) const = default;
};

struct Manifest {
    std::size_t text_dim = 0;
    std::size_t visual_dim = 0;
    std::uint64_t seed = 0;
    nlohmann::json generator = nlohmann::json::object();

    bool operator==(const Manifest&) const = default;
};

/// On disk: manifest.json, graph.json, features.ndjson, samples.ndjson.
struct DatasetBundle {
    ClassGraph graph;
    FeatureStore store;      // text per class; visual rows for seen classes
    std::vector<Sample> samples; // unseen-class test rows
    Manifest manifest;

    bool operator==(const DatasetBundle& other) const;
};

/// Seeded synthetic benchmark: unit-norm text embeddings per class, visual
/// rows G*text + gaussian noise with the provider mock's feature map G, and a
/// topology where (for tree and ring) every unseen node sits within 3 hops of
/// a seen node. Seen-class rows land in the store, unseen-class rows become
/// the test samples.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

void save_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_bundle(const std::string& dir);

/// Canonical form: sorted keys, no whitespace, doubles as %.17g. Identical
/// values produce identical bytes.
std::string canonical_json(const nlohmann::json& j);
void write_canonical_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

void write_report(const EvalReport& report, const std::string& path);
EvalReport read_report(const std::string& path);

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Model directory: model.json with every parameter matrix plus the resolved
/// config and class metadata.
void save_pipeline(const TrainedPipeline& tp, const std::string& dir);
TrainedPipeline load_pipeline(const std::string& dir);

} // namespace zskg
