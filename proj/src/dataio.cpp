#include "zskg/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zskg/errors.hpp"
#include "zskg/rng.hpp"

namespace fs = std::filesystem;

namespace zskg {

void SyntheticSpec::validate() const {
    if (seen_classes < 1 || unseen_classes < 1 || samples_per_class < 1) {
        throw domain_error("synthetic spec: class and sample counts must be >= 1");
    }
    if (text_dim < 2 || visual_dim < 2) {
        throw domain_error("synthetic spec: feature dimensions must be >= 2");
    }
    if (noise_sigma < 0.0) {
        throw domain_error("synthetic spec: noise sigma must be >= 0");
    }
    if (topology == Topology::random && (edge_prob < 0.0 || edge_prob > 1.0)) {
        throw domain_error("synthetic spec: edge probability must be in [0,1]");
    }
}

std::string topology_name(SyntheticSpec::Topology t) {
    switch (t) {
        case SyntheticSpec::Topology::tree: return "tree";
        case SyntheticSpec::Topology::ring: return "ring";
        case SyntheticSpec::Topology::random: return "random";
    }
    throw domain_error("synthetic spec: unknown topology");
}

SyntheticSpec::Topology topology_from_name(const std::string& name) {
    if (name == "tree") return SyntheticSpec::Topology::tree;
    if (name == "ring") return SyntheticSpec::Topology::ring;
    if (name == "random") return SyntheticSpec::Topology::random;
    throw domain_error("synthetic spec: unknown topology '" + name + "'");
}

nlohmann::json SyntheticSpec::to_json() const {
    nlohmann::json j;
    j["seen_classes"] = seen_classes;
    j["unseen_classes"] = unseen_classes;
    j["samples_per_class"] = samples_per_class;
    j["text_dim"] = text_dim;
    j["visual_dim"] = visual_dim;
    j["noise_sigma"] = noise_sigma;
    j["topology"] = topology_name(topology);
    j["edge_prob"] = edge_prob;
    j["seed"] = seed;
    return j;
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    try {
        spec.seen_classes = j.value("seen_classes", spec.seen_classes);
        spec.unseen_classes = j.value("unseen_classes", spec.unseen_classes);
        spec.samples_per_class = j.value("samples_per_class", spec.samples_per_class);
        spec.text_dim = j.value("text_dim", spec.text_dim);
        spec.visual_dim = j.value("visual_dim", spec.visual_dim);
        spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
        spec.topology = topology_from_name(j.value("topology", std::string("tree")));
        spec.edge_prob = j.value("edge_prob", spec.edge_prob);
        spec.seed = j.value("seed", spec.seed);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("synthetic spec: malformed json: ") + e.what());
    }
    spec.validate();
    return spec;
}

bool DatasetBundle::operator==(const DatasetBundle& other) const {
    return graph == other.graph && store == other.store && samples == other.samples &&
           manifest == other.manifest;
}

namespace {

std::vector<bool> assign_seen_flags(const SyntheticSpec& spec) {
    const std::size_t n = spec.seen_classes + spec.unseen_classes;
    std::vector<bool> seen(n, false);
    if (spec.topology == SyntheticSpec::Topology::ring) {
        // spread the seen nodes evenly so every unseen node stays near one
        const std::size_t gap_cap = (n + spec.seen_classes - 1) / spec.seen_classes;
        if (gap_cap > 7) {
            throw data_error("generation: ring with " + std::to_string(n) + " nodes and " +
                             std::to_string(spec.seen_classes) +
                             " seen classes cannot keep every unseen node within 3 hops");
        }
        for (std::size_t k = 0; k < spec.seen_classes; ++k) seen[k * n / spec.seen_classes] = true;
    } else {
        for (std::size_t i = 0; i < spec.seen_classes; ++i) seen[i] = true;
    }
    return seen;
}

std::vector<std::pair<std::size_t, std::size_t>> build_edges(const SyntheticSpec& spec,
                                                             const std::vector<bool>& seen,
                                                             Rng& rng) {
    const std::size_t n = seen.size();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    switch (spec.topology) {
        case SyntheticSpec::Topology::tree: {
            // seen nodes come first; unseen nodes only attach where the
            // distance to the seen set stays within 3
            std::vector<std::size_t> dist(n, 0);
            for (std::size_t i = 1; i < n; ++i) {
                std::size_t parent;
                if (seen[i]) {
                    parent = rng.next_below(i);
                } else {
                    std::vector<std::size_t> eligible;
                    for (std::size_t j = 0; j < i; ++j)
                        if (dist[j] <= 2) eligible.push_back(j);
                    parent = eligible[rng.next_below(eligible.size())];
                }
                dist[i] = seen[i] ? 0 : dist[parent] + 1;
                edges.emplace_back(parent, i);
            }
            break;
        }
        case SyntheticSpec::Topology::ring: {
            if (n == 2) {
                edges.emplace_back(0, 1);
            } else {
                for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
            }
            break;
        }
        case SyntheticSpec::Topology::random: {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (rng.next_double() < spec.edge_prob) edges.emplace_back(i, j);
            break;
        }
    }
    return edges;
}

} // namespace

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.seen_classes + spec.unseen_classes;
    const std::vector<bool> seen = assign_seen_flags(spec);

    Rng graph_rng(derive_seed(spec.seed, "graph"));
    std::vector<ClassNode> nodes;
    nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back({static_cast<int>(i), "class_" + std::to_string(i), seen[i]});
    ClassGraph graph(nodes, build_edges(spec, seen, graph_rng));

    FeatureStore store(spec.text_dim, spec.visual_dim);
    Rng text_rng(derive_seed(spec.seed, "class-text"));
    Matrix text(n, spec.text_dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> emb(spec.text_dim);
        for (double& v : emb) v = text_rng.next_gaussian();
        emb = l2_normalized(emb);
        text.set_row(i, emb);
        store.set_text(static_cast<int>(i), emb);
    }

    const Matrix g_map = mock_feature_map(spec.seed, spec.text_dim, spec.visual_dim);
    const Matrix anchors = matmul(text, g_map); // one visual anchor per class

    Rng seen_rng(derive_seed(spec.seed, "seen-visual"));
    Rng unseen_rng(derive_seed(spec.seed, "unseen-samples"));
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Rng& stream = seen[i] ? seen_rng : unseen_rng;
        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            std::vector<double> row = anchors.row(i);
            for (double& v : row) v += spec.noise_sigma * stream.next_gaussian();
            if (seen[i]) {
                store.add_visual(static_cast<int>(i), row);
            } else {
                samples.push_back({static_cast<int>(i), std::move(row)});
            }
        }
    }

    Manifest manifest;
    manifest.text_dim = spec.text_dim;
    manifest.visual_dim = spec.visual_dim;
    manifest.seed = spec.seed;
    manifest.generator = spec.to_json();
    return {std::move(graph), std::move(store), std::move(samples), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// canonical json
// ---------------------------------------------------------------------------

namespace {

void emit_canonical(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            out += "null";
            break;
        case nlohmann::json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            break;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            break;
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                throw data_error("canonical json: non-finite number");
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            break;
        }
        case nlohmann::json::value_t::string:
            out += nlohmann::json(j.get<std::string>()).dump();
            break;
        case nlohmann::json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : j) {
                if (!first) out += ',';
                first = false;
                emit_canonical(item, out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) { // std::map order: sorted
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(key).dump();
                out += ':';
                emit_canonical(value, out);
            }
            out += '}';
            break;
        }
        default:
            throw data_error("canonical json: unsupported value type");
    }
}

} // namespace

std::string canonical_json(const nlohmann::json& j) {
    std::string out;
    emit_canonical(j, out);
    return out;
}

void write_canonical_json(const nlohmann::json& j, const std::string& path) {
    const std::string body = canonical_json(j) + "\n";
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs) throw io_error("cannot open " + path + " for writing");
    ofs << body;
    if (!ofs) throw io_error("write failed for " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream ifs(path, std::ios::binary);
    if (!ifs) throw io_error("cannot open " + path);
    try {
        return nlohmann::json::parse(ifs);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// bundle io
// ---------------------------------------------------------------------------

namespace {

nlohmann::json vector_to_json(const std::vector<double>& v) {
    return nlohmann::json(v);
}

std::vector<double> vector_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw parse_error(where + ": vector must be an array");
    try {
        return j.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(where + ": " + e.what());
    }
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs) throw io_error("cannot open " + path + " for writing");
    for (const std::string& line : lines) ofs << line << '\n';
    if (!ofs) throw io_error("write failed for " + path);
}

std::vector<nlohmann::json> read_ndjson(const std::string& path) {
    std::ifstream ifs(path, std::ios::binary);
    if (!ifs) throw io_error("cannot open " + path);
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ifs, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

} // namespace

void save_bundle(const DatasetBundle& bundle, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());

    nlohmann::json manifest;
    manifest["text_dim"] = bundle.manifest.text_dim;
    manifest["visual_dim"] = bundle.manifest.visual_dim;
    manifest["seed"] = bundle.manifest.seed;
    manifest["generator"] = bundle.manifest.generator;
    write_canonical_json(manifest, dir + "/manifest.json");

    nlohmann::json graph;
    graph["nodes"] = nlohmann::json::array();
    for (const ClassNode& node : bundle.graph.nodes()) {
        graph["nodes"].push_back({{"id", node.id}, {"label", node.label}, {"seen", node.seen}});
    }
    graph["edges"] = nlohmann::json::array();
    for (auto [a, b] : bundle.graph.edges()) graph["edges"].push_back({a, b});
    write_canonical_json(graph, dir + "/graph.json");

    std::vector<std::string> feature_lines;
    for (int id : bundle.store.class_ids()) {
        if (bundle.store.has_text(id)) {
            nlohmann::json rec;
            rec["class_id"] = id;
            rec["kind"] = "text";
            rec["vector"] = vector_to_json(bundle.store.text(id));
            feature_lines.push_back(canonical_json(rec));
        }
        if (bundle.store.has_visual(id)) {
            const Matrix& rows = bundle.store.visual(id);
            for (std::size_t r = 0; r < rows.rows(); ++r) {
                nlohmann::json rec;
                rec["class_id"] = id;
                rec["kind"] = "visual";
                rec["vector"] = vector_to_json(rows.row(r));
                feature_lines.push_back(canonical_json(rec));
            }
        }
    }
    write_lines(dir + "/features.ndjson", feature_lines);

    std::vector<std::string> sample_lines;
    for (const Sample& s : bundle.samples) {
        nlohmann::json rec;
        rec["kind"] = "visual";
        rec["truth"] = s.truth;
        rec["vector"] = vector_to_json(s.vec);
        sample_lines.push_back(canonical_json(rec));
    }
    write_lines(dir + "/samples.ndjson", sample_lines);
}

DatasetBundle load_bundle(const std::string& dir) {
    const nlohmann::json mj = read_json_file(dir + "/manifest.json");
    Manifest manifest;
    try {
        manifest.text_dim = mj.at("text_dim").get<std::size_t>();
        manifest.visual_dim = mj.at("visual_dim").get<std::size_t>();
        manifest.seed = mj.at("seed").get<std::uint64_t>();
        manifest.generator = mj.value("generator", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(dir + "/manifest.json: " + e.what());
    }
    if (manifest.text_dim < 2 || manifest.visual_dim < 2) {
        throw data_error(dir + "/manifest.json: dimensions must be >= 2");
    }

    const nlohmann::json gj = read_json_file(dir + "/graph.json");
    std::vector<ClassNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    try {
        for (const auto& nj : gj.at("nodes")) {
            nodes.push_back({nj.at("id").get<int>(), nj.at("label").get<std::string>(),
                             nj.at("seen").get<bool>()});
        }
        for (const auto& ej : gj.at("edges")) {
            edges.emplace_back(ej.at(0).get<std::size_t>(), ej.at(1).get<std::size_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(dir + "/graph.json: " + e.what());
    }
    ClassGraph graph(std::move(nodes), std::move(edges)); // validates structure

    FeatureStore store(manifest.text_dim, manifest.visual_dim);
    const std::string features_path = dir + "/features.ndjson";
    std::size_t lineno = 0;
    for (const nlohmann::json& rec : read_ndjson(features_path)) {
        ++lineno;
        const std::string where = features_path + " record " + std::to_string(lineno);
        int class_id;
        std::string kind;
        try {
            class_id = rec.at("class_id").get<int>();
            kind = rec.at("kind").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(where + ": " + e.what());
        }
        const std::vector<double> vec = vector_from_json(rec.at("vector"), where + " field vector");
        graph.index_of_id(class_id); // must exist
        try {
            if (kind == "text") {
                store.set_text(class_id, vec);
            } else if (kind == "visual") {
                store.add_visual(class_id, vec);
            } else {
                throw parse_error(where + ": field kind must be 'text' or 'visual'");
            }
        } catch (const shape_error& e) {
            throw data_error(where + ": " + e.what());
        }
    }

    std::vector<Sample> samples;
    const std::string samples_path = dir + "/samples.ndjson";
    lineno = 0;
    for (const nlohmann::json& rec : read_ndjson(samples_path)) {
        ++lineno;
        const std::string where = samples_path + " record " + std::to_string(lineno);
        Sample s;
        try {
            s.truth = rec.at("truth").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(where + ": " + e.what());
        }
        s.vec = vector_from_json(rec.at("vector"), where + " field vector");
        if (s.vec.size() != manifest.visual_dim) {
            throw data_error(where + ": vector length " + std::to_string(s.vec.size()) +
                             " does not match manifest visual_dim " +
                             std::to_string(manifest.visual_dim));
        }
        graph.index_of_id(s.truth); // truth class must exist in the graph
        samples.push_back(std::move(s));
    }

    return {std::move(graph), std::move(store), std::move(samples), std::move(manifest)};
}

void write_report(const EvalReport& report, const std::string& path) {
    report.validate();
    write_canonical_json(report.to_json(), path);
}

EvalReport read_report(const std::string& path) {
    return EvalReport::from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// pipeline config and model io
// ---------------------------------------------------------------------------

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["alpha"] = cfg.distill.alpha;
    j["temperature"] = cfg.distill.temperature;
    j["lr"] = cfg.distill.lr;
    j["weight_decay"] = cfg.distill.weight_decay;
    j["rounds"] = cfg.distill.rounds;
    j["seed"] = cfg.distill.seed;
    j["batch_size"] = cfg.distill.batch_size;
    j["kl_scale_t2"] = cfg.distill.kl_scale_t2;
    j["coupled_weight_decay"] = cfg.distill.coupled_weight_decay;
    j["teacher_hidden"] = cfg.teacher_hidden;
    j["gcn_hidden"] = cfg.gcn_hidden;
    j["gcn_out"] = cfg.gcn_out;
    j["dropout"] = cfg.dropout_rate;
    j["n_synth"] = cfg.n_synth;
    j["augment_seen_with_visual_mean"] = cfg.augment_seen_with_visual_mean;
    j["toggles"] = {{"visible", cfg.toggles.visible},
                    {"distillation", cfg.toggles.distillation},
                    {"gcn", cfg.toggles.gcn}};
    j["provider"] = {{"kind", cfg.provider.kind == ProviderKind::mock ? "mock" : "http"},
                     {"text_dim", cfg.provider.text_dim},
                     {"visual_dim", cfg.provider.visual_dim},
                     {"seed", cfg.provider.seed},
                     {"endpoint", cfg.provider.endpoint},
                     {"timeout_ms", cfg.provider.timeout_ms},
                     {"model", cfg.provider.model},
                     {"synth_noise_sigma", cfg.provider.synth_noise_sigma}};
    return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    try {
        cfg.distill.alpha = j.value("alpha", cfg.distill.alpha);
        cfg.distill.temperature = j.value("temperature", cfg.distill.temperature);
        cfg.distill.lr = j.value("lr", cfg.distill.lr);
        cfg.distill.weight_decay = j.value("weight_decay", cfg.distill.weight_decay);
        cfg.distill.rounds = j.value("rounds", cfg.distill.rounds);
        cfg.distill.seed = j.value("seed", cfg.distill.seed);
        cfg.distill.batch_size = j.value("batch_size", cfg.distill.batch_size);
        cfg.distill.kl_scale_t2 = j.value("kl_scale_t2", cfg.distill.kl_scale_t2);
        cfg.distill.coupled_weight_decay =
            j.value("coupled_weight_decay", cfg.distill.coupled_weight_decay);
        cfg.teacher_hidden = j.value("teacher_hidden", cfg.teacher_hidden);
        cfg.gcn_hidden = j.value("gcn_hidden", cfg.gcn_hidden);
        cfg.gcn_out = j.value("gcn_out", cfg.gcn_out);
        cfg.dropout_rate = j.value("dropout", cfg.dropout_rate);
        cfg.n_synth = j.value("n_synth", cfg.n_synth);
        cfg.augment_seen_with_visual_mean =
            j.value("augment_seen_with_visual_mean", cfg.augment_seen_with_visual_mean);
        if (j.contains("toggles")) {
            const auto& t = j.at("toggles");
            cfg.toggles.visible = t.value("visible", true);
            cfg.toggles.distillation = t.value("distillation", true);
            cfg.toggles.gcn = t.value("gcn", true);
        }
        if (j.contains("provider")) {
            const auto& p = j.at("provider");
            cfg.provider.kind =
                p.value("kind", std::string("mock")) == "http" ? ProviderKind::remote
                                                               : ProviderKind::mock;
            cfg.provider.text_dim = p.value("text_dim", cfg.provider.text_dim);
            cfg.provider.visual_dim = p.value("visual_dim", cfg.provider.visual_dim);
            cfg.provider.seed = p.value("seed", cfg.provider.seed);
            cfg.provider.endpoint = p.value("endpoint", cfg.provider.endpoint);
            cfg.provider.timeout_ms = p.value("timeout_ms", cfg.provider.timeout_ms);
            cfg.provider.model = p.value("model", cfg.provider.model);
            cfg.provider.synth_noise_sigma =
                p.value("synth_noise_sigma", cfg.provider.synth_noise_sigma);
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("pipeline config: malformed json: ") + e.what());
    }
    return cfg;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
    try {
        const std::size_t rows = j.at("rows").get<std::size_t>();
        const std::size_t cols = j.at("cols").get<std::size_t>();
        Matrix m(rows, cols);
        const auto& data = j.at("data");
        if (data.size() != rows) throw parse_error(where + ": row count mismatch");
        for (std::size_t i = 0; i < rows; ++i) {
            const std::vector<double> row = data.at(i).get<std::vector<double>>();
            if (row.size() != cols) throw parse_error(where + ": column count mismatch");
            m.set_row(i, row);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(where + ": " + e.what());
    }
}

nlohmann::json layer_to_json(const LayerParams& p) {
    return {{"w", matrix_to_json(p.w)}, {"b", p.b}};
}

void layer_from_json(const nlohmann::json& j, LayerParams& p, const std::string& where) {
    Matrix w = matrix_from_json(j.at("w"), where);
    std::vector<double> b = j.at("b").get<std::vector<double>>();
    if (!w.same_shape(p.w) || b.size() != p.b.size()) {
        throw data_error(where + ": layer shape does not match the configured architecture");
    }
    p.w = std::move(w);
    p.b = std::move(b);
}

} // namespace

void save_pipeline(const TrainedPipeline& tp, const std::string& dir) {
    if (!tp.trained) throw state_error("save_pipeline: pipeline has not been trained");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());

    nlohmann::json j;
    j["config"] = pipeline_config_to_json(tp.config);
    j["classes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < tp.class_ids.size(); ++i) {
        j["classes"].push_back({{"id", tp.class_ids[i]}, {"seen", bool(tp.seen_flags[i])}});
    }
    const auto teacher = tp.teacher.params();
    j["teacher"] = {{"l1", layer_to_json(*teacher[0])},
                    {"l2", layer_to_json(*teacher[1])},
                    {"l3", layer_to_json(*teacher[2])}};
    const auto student = tp.student.params();
    j["student"] = {{"l1", layer_to_json(*student[0])}, {"l2", layer_to_json(*student[1])}};
    j["gcn"] = {{"theta1", layer_to_json(tp.gcn.theta1)},
                {"theta2", layer_to_json(tp.gcn.theta2)},
                {"shared", tp.gcn.shared}};
    j["head"] = layer_to_json(tp.head);
    j["f_su"] = matrix_to_json(tp.f_su);
    j["f_bar"] = matrix_to_json(tp.f_bar);
    j["mc"] = matrix_to_json(tp.mc);
    write_canonical_json(j, dir + "/model.json");
}

TrainedPipeline load_pipeline(const std::string& dir) {
    const std::string path = dir + "/model.json";
    const nlohmann::json j = read_json_file(path);
    PipelineConfig cfg = pipeline_config_from_json(j.at("config"));

    std::vector<int> class_ids;
    std::vector<bool> seen_flags;
    try {
        for (const auto& cj : j.at("classes")) {
            class_ids.push_back(cj.at("id").get<int>());
            seen_flags.push_back(cj.at("seen").get<bool>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    std::size_t seen_count = 0;
    for (bool s : seen_flags) seen_count += s ? 1 : 0;

    const std::size_t input_dim = cfg.provider.text_dim + cfg.provider.visual_dim;
    TeacherModel teacher(input_dim, cfg.teacher_hidden, seen_count, cfg.dropout_rate);
    StudentModel student(input_dim, std::max<std::size_t>(1, cfg.teacher_hidden / 2), seen_count);
    {
        auto params = teacher.params();
        layer_from_json(j.at("teacher").at("l1"), *params[0], path + " teacher.l1");
        layer_from_json(j.at("teacher").at("l2"), *params[1], path + " teacher.l2");
        layer_from_json(j.at("teacher").at("l3"), *params[2], path + " teacher.l3");
        teacher.mark_ready();
    }
    {
        auto params = student.params();
        layer_from_json(j.at("student").at("l1"), *params[0], path + " student.l1");
        layer_from_json(j.at("student").at("l2"), *params[1], path + " student.l2");
    }

    GcnParams gcn(cfg.provider.text_dim, cfg.gcn_hidden, cfg.gcn_out);
    gcn.shared = j.at("gcn").value("shared", false);
    layer_from_json(j.at("gcn").at("theta1"), gcn.theta1, path + " gcn.theta1");
    layer_from_json(j.at("gcn").at("theta2"), gcn.theta2, path + " gcn.theta2");

    const std::size_t propagated_dim = cfg.toggles.gcn ? cfg.gcn_out : cfg.provider.text_dim;
    LayerParams head(cfg.provider.visual_dim, propagated_dim + cfg.provider.text_dim);
    layer_from_json(j.at("head"), head, path + " head");

    TrainedPipeline tp{std::move(teacher),
                       std::move(student),
                       std::move(gcn),
                       std::move(head),
                       matrix_from_json(j.at("f_su"), path + " f_su"),
                       matrix_from_json(j.at("f_bar"), path + " f_bar"),
                       matrix_from_json(j.at("mc"), path + " mc"),
                       std::move(class_ids),
                       std::move(seen_flags),
                       std::move(cfg),
                       {},
                       {},
                       true};
    if (tp.mc.rows() != tp.class_ids.size()) {
        throw data_error(path + ": mc row count does not match the class list");
    }
    return tp;
}

} // namespace zskg
