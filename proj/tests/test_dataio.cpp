#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "zskg/dataio.hpp"
#include "zskg/errors.hpp"
#include "zskg/providers.hpp"

using namespace zskg;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.seen_classes = 5;
    spec.unseen_classes = 3;
    spec.samples_per_class = 8;
    spec.text_dim = 16;
    spec.visual_dim = 16;
    spec.noise_sigma = 0.05;
    spec.seed = 42;
    return spec;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("zskg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream ifs(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(ifs)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec = small_spec();
    spec.validate();
    spec.seen_classes = 0;
    CHECK_THROWS_AS(spec.validate(), domain_error);
    spec = small_spec();
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(spec.validate(), domain_error);
    spec = small_spec();
    spec.topology = SyntheticSpec::Topology::random;
    spec.edge_prob = 1.5;
    CHECK_THROWS_AS(spec.validate(), domain_error);
}

TEST_CASE("zero noise collapses every sample onto its class anchor") {
    SyntheticSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    DatasetBundle bundle = generate_synthetic(spec);

    const Matrix g = mock_feature_map(spec.seed, spec.text_dim, spec.visual_dim);
    for (std::size_t i : bundle.graph.seen_indices()) {
        const int id = bundle.graph.node(i).id;
        Matrix e(1, spec.text_dim);
        e.set_row(0, bundle.store.text(id));
        const std::vector<double> anchor = matmul(e, g).row(0);
        const Matrix& rows = bundle.store.visual(id);
        CHECK(rows.rows() == spec.samples_per_class);
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            for (std::size_t j = 0; j < rows.cols(); ++j)
                CHECK(rows(r, j) == doctest::Approx(anchor[j]).epsilon(1e-15));
        }
    }
}

TEST_CASE("generation is a pure function of its parameters") {
    const SyntheticSpec spec = small_spec();
    CHECK(generate_synthetic(spec) == generate_synthetic(spec));

    SyntheticSpec other = spec;
    other.seed = 43;
    CHECK_FALSE(generate_synthetic(spec) == generate_synthetic(other));
}

TEST_CASE("tree and ring topologies keep unseen nodes within three hops") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SyntheticSpec spec = small_spec();
        spec.seed = seed;
        spec.unseen_classes = 6;
        DatasetBundle tree = generate_synthetic(spec);
        HopPartition tree_part = hop_partition(tree.graph);
        CHECK(tree_part.three_hop == tree_part.all);

        spec.topology = SyntheticSpec::Topology::ring;
        DatasetBundle ring = generate_synthetic(spec);
        HopPartition ring_part = hop_partition(ring.graph);
        CHECK(ring_part.three_hop == ring_part.all);
    }
}

TEST_CASE("infeasible ring assignment is a generation error") {
    SyntheticSpec spec = small_spec();
    spec.topology = SyntheticSpec::Topology::ring;
    spec.seen_classes = 1;
    spec.unseen_classes = 20;
    CHECK_THROWS_AS(generate_synthetic(spec), data_error);
}

TEST_CASE("nearest-anchor classification confirms bayes headroom at sigma 0.05") {
    SyntheticSpec spec;
    spec.seen_classes = 8;
    spec.unseen_classes = 4;
    spec.samples_per_class = 50;
    spec.text_dim = 64;
    spec.visual_dim = 64;
    spec.noise_sigma = 0.05;
    spec.seed = 42;
    DatasetBundle bundle = generate_synthetic(spec);

    const Matrix g = mock_feature_map(spec.seed, spec.text_dim, spec.visual_dim);
    std::vector<int> ids;
    std::vector<std::vector<double>> anchors;
    for (const ClassNode& node : bundle.graph.nodes()) {
        Matrix e(1, spec.text_dim);
        e.set_row(0, bundle.store.text(node.id));
        ids.push_back(node.id);
        anchors.push_back(matmul(e, g).row(0));
    }
    std::size_t hit = 0;
    for (const Sample& s : bundle.samples) {
        int best = ids[0];
        double best_cos = -2.0;
        for (std::size_t c = 0; c < ids.size(); ++c) {
            const double sim = cosine_similarity(s.vec, anchors[c]);
            if (sim > best_cos) {
                best_cos = sim;
                best = ids[c];
            }
        }
        if (best == s.truth) ++hit;
    }
    CHECK(static_cast<double>(hit) / bundle.samples.size() >= 0.95);
}

TEST_CASE("bundle save and load round trip") {
    TempDir dir;
    DatasetBundle bundle = generate_synthetic(small_spec());
    save_bundle(bundle, dir.str());
    DatasetBundle loaded = load_bundle(dir.str());
    CHECK(loaded == bundle);

    // identical bundles produce identical bytes
    TempDir dir2;
    save_bundle(loaded, dir2.str());
    for (const char* name : {"manifest.json", "graph.json", "features.ndjson", "samples.ndjson"}) {
        CHECK(slurp(dir.path / name) == slurp(dir2.path / name));
    }
}

TEST_CASE("truncated features file is a parse error with no partial bundle") {
    TempDir dir;
    save_bundle(generate_synthetic(small_spec()), dir.str());
    std::string body = slurp(dir.path / "features.ndjson");
    body.resize(body.size() / 2); // cut mid-line
    std::ofstream(dir.path / "features.ndjson", std::ios::binary | std::ios::trunc) << body;
    CHECK_THROWS_AS(load_bundle(dir.str()), parse_error);
}

TEST_CASE("manifest dimension mismatch is a validation error") {
    TempDir dir;
    save_bundle(generate_synthetic(small_spec()), dir.str());
    nlohmann::json manifest = read_json_file((dir.path / "manifest.json").string());
    manifest["text_dim"] = 12; // vectors on disk have 16 entries
    write_canonical_json(manifest, (dir.path / "manifest.json").string());
    CHECK_THROWS_AS(load_bundle(dir.str()), data_error);
}

TEST_CASE("sample truth must exist in the graph") {
    TempDir dir;
    DatasetBundle bundle = generate_synthetic(small_spec());
    save_bundle(bundle, dir.str());
    std::ofstream(dir.path / "samples.ndjson", std::ios::binary | std::ios::app)
        << R"({"kind":"visual","truth":99,"vector":)" << nlohmann::json(bundle.samples[0].vec).dump()
        << "}\n";
    CHECK_THROWS_AS(load_bundle(dir.str()), index_error);
}

TEST_CASE("canonical json output is sorted, compact and stable") {
    nlohmann::json j;
    j["beta"] = 0.5;
    j["alpha"] = 1.0;
    j["list"] = {1, 2.25, true, nullptr, "x"};
    CHECK(canonical_json(j) == R"({"alpha":1,"beta":0.5,"list":[1,2.25,true,null,"x"]})");

    nlohmann::json bad;
    bad["v"] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(canonical_json(bad), data_error);
}

TEST_CASE("reports round trip and identical reports serialize to identical bytes") {
    EvalReport report;
    report.seed = 42;
    report.config = {{"alpha", 0.5}, {"rounds", 3000}};
    PartitionAccuracy part;
    part.sample_count = 100;
    part.accuracy = {{1, 0.61}, {2, 0.78}, {5, 0.97}, {10, 1.0}, {20, 1.0}};
    report.partitions["all"] = part;
    report.ablation = {{"full", 0.61}, {"no_distill", 0.57}, {"no_visible", 0.55}};
    SweepCurve curve;
    curve.parameter = "temperature";
    curve.points = {{2.0, 0.5}, {2.5, 0.61}};
    report.sweep = curve;

    TempDir dir;
    const std::string path = (dir.path / "report.json").string();
    write_report(report, path);
    EvalReport loaded = read_report(path);
    CHECK(loaded == report);

    const std::string path2 = (dir.path / "report2.json").string();
    write_report(loaded, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("invalid accuracies are rejected on write") {
    EvalReport report;
    PartitionAccuracy part;
    part.sample_count = 10;
    part.accuracy = {{1, 1.5}};
    report.partitions["all"] = part;
    TempDir dir;
    CHECK_THROWS_AS(write_report(report, (dir.path / "r.json").string()), data_error);

    report.partitions["all"].accuracy = {{1, 0.9}, {2, 0.4}}; // decreasing in k
    CHECK_THROWS_AS(write_report(report, (dir.path / "r.json").string()), data_error);
}

TEST_CASE("pipeline config json round trip") {
    PipelineConfig cfg;
    cfg.distill.alpha = 0.25;
    cfg.distill.rounds = 123;
    cfg.toggles.gcn = false;
    cfg.provider.kind = ProviderKind::remote;
    cfg.provider.endpoint = "http://example:9";
    cfg.n_synth = 7;
    PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(cfg));
    CHECK(back.distill.alpha == cfg.distill.alpha);
    CHECK(back.distill.rounds == cfg.distill.rounds);
    CHECK(back.toggles.gcn == cfg.toggles.gcn);
    CHECK(back.provider.kind == cfg.provider.kind);
    CHECK(back.provider.endpoint == cfg.provider.endpoint);
    CHECK(back.n_synth == cfg.n_synth);
}
