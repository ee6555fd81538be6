#include "zskg/harness.hpp"

#include <set>

#include "zskg/errors.hpp"

namespace zskg {

namespace {

struct TestSet {
    Matrix features;
    std::vector<int> truths;
};

TestSet unseen_test_set(const DatasetBundle& bundle) {
    std::set<int> unseen;
    for (std::size_t i : bundle.graph.unseen_indices()) unseen.insert(bundle.graph.node(i).id);
    std::vector<std::vector<double>> rows;
    std::vector<int> truths;
    for (const Sample& s : bundle.samples) {
        if (unseen.count(s.truth) == 0) continue; // unseen-only candidate set
        rows.push_back(s.vec);
        truths.push_back(s.truth);
    }
    if (rows.empty()) {
        throw domain_error("evaluate: the bundle has no unseen-class samples");
    }
    return {Matrix::from_rows(rows), std::move(truths)};
}

PartitionAccuracy score_subset(const std::vector<std::vector<int>>& rankings,
                               const std::vector<int>& truths, const std::set<int>& keep) {
    std::vector<std::vector<int>> sub_rankings;
    std::vector<int> sub_truths;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (keep.count(truths[i]) == 0) continue;
        sub_rankings.push_back(rankings[i]);
        sub_truths.push_back(truths[i]);
    }
    PartitionAccuracy part;
    part.sample_count = sub_truths.size();
    if (!sub_truths.empty()) part.accuracy = topk_table(sub_rankings, sub_truths);
    return part;
}

double top1_of(const EvalReport& report) {
    return report.partitions.at("all").accuracy.at(1);
}

} // namespace

EvalReport evaluate(const TrainedPipeline& tp, const DatasetBundle& bundle) {
    const TestSet test = unseen_test_set(bundle);
    const std::vector<std::vector<int>> rankings = classify_unseen(test.features, tp, bundle.graph);
    const HopPartition hops = hop_partition(bundle.graph);

    EvalReport report;
    report.seed = tp.config.distill.seed;
    report.config = pipeline_config_to_json(tp.config);
    std::set<int> all_ids(hops.all.begin(), hops.all.end());
    const PartitionAccuracy all = score_subset(rankings, test.truths, all_ids);
    report.partitions["all"] = all;
    const PartitionAccuracy two = score_subset(rankings, test.truths,
                                               std::set<int>(hops.two_hop.begin(), hops.two_hop.end()));
    if (two.sample_count > 0) report.partitions["two_hop"] = two;
    const PartitionAccuracy three = score_subset(
        rankings, test.truths, std::set<int>(hops.three_hop.begin(), hops.three_hop.end()));
    if (three.sample_count > 0) report.partitions["three_hop"] = three;
    report.validate();
    return report;
}

SweepParameter sweep_parameter_from_name(const std::string& name) {
    if (name == "temperature") return SweepParameter::temperature;
    if (name == "rounds") return SweepParameter::rounds;
    throw usage_error("sweep: unknown parameter '" + name + "' (expected temperature or rounds)");
}

std::vector<double> temperature_preset() {
    std::vector<double> values;
    for (double t = 2.0; t <= 5.0 + 1e-9; t += 0.5) values.push_back(t);
    return values;
}

std::vector<double> rounds_preset() {
    std::vector<double> values;
    for (double r = 1000.0; r <= 5000.0 + 1e-9; r += 500.0) values.push_back(r);
    return values;
}

EvalReport sweep(const DatasetBundle& bundle, const PipelineConfig& cfg, SweepParameter parameter,
                 const std::vector<double>& values) {
    if (values.empty()) {
        throw domain_error("sweep: value list is empty");
    }
    SweepCurve curve;
    curve.parameter = parameter == SweepParameter::temperature ? "temperature" : "rounds";

    EvalReport last;
    for (std::size_t i = 0; i < values.size(); ++i) {
        PipelineConfig point_cfg = cfg;
        point_cfg.distill.seed = cfg.distill.seed + i; // independent derived seeds
        if (parameter == SweepParameter::temperature) {
            point_cfg.distill.temperature = values[i];
        } else {
            if (values[i] < 0.0) throw domain_error("sweep: rounds must be >= 0");
            point_cfg.distill.rounds = static_cast<std::size_t>(values[i]);
        }
        TrainedPipeline tp = fit(bundle.store, bundle.graph, point_cfg);
        last = evaluate(tp, bundle);
        curve.points.push_back({values[i], top1_of(last)});
    }

    EvalReport report = last;
    report.seed = cfg.distill.seed;
    report.config = pipeline_config_to_json(cfg);
    report.sweep = curve;
    report.validate();
    return report;
}

EvalReport ablation_suite(const DatasetBundle& bundle, const PipelineConfig& cfg) {
    EvalReport full = evaluate(fit(bundle.store, bundle.graph, cfg), bundle);

    PipelineConfig no_distill = cfg;
    no_distill.distill.alpha = 1.0;
    const EvalReport nd = evaluate(fit(bundle.store, bundle.graph, no_distill), bundle);

    PipelineConfig no_visible = cfg;
    no_visible.toggles.visible = false;
    const EvalReport nv = evaluate(fit(bundle.store, bundle.graph, no_visible), bundle);

    EvalReport report = full;
    report.ablation["full"] = top1_of(full);
    report.ablation["no_distill"] = top1_of(nd);
    report.ablation["no_visible"] = top1_of(nv);
    report.validate();
    return report;
}

} // namespace zskg
