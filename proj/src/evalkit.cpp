#include "zskg/evalkit.hpp"

#include <cmath>

#include "zskg/errors.hpp"

namespace zskg {

double hits_at_n(const std::vector<std::size_t>& ranks, std::size_t n) {
    if (ranks.empty()) {
        throw domain_error("hits_at_n: rank sequence is empty");
    }
    std::size_t hit = 0;
    for (std::size_t r : ranks) {
        if (r < 1) throw domain_error("hits_at_n: ranks are 1-based");
        if (r <= n) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

std::vector<std::size_t> rank_positions(const std::vector<std::vector<int>>& rankings,
                                        const std::vector<int>& truths) {
    if (rankings.size() != truths.size()) {
        throw index_error("rank_positions: one truth per ranking required");
    }
    std::vector<std::size_t> positions(rankings.size(), 0);
    for (std::size_t s = 0; s < rankings.size(); ++s) {
        for (std::size_t i = 0; i < rankings[s].size(); ++i) {
            if (rankings[s][i] == truths[s]) {
                positions[s] = i + 1;
                break;
            }
        }
        if (positions[s] == 0) {
            throw data_error("topk: truth class " + std::to_string(truths[s]) +
                             " absent from the ranking of sample " + std::to_string(s));
        }
    }
    return positions;
}

std::map<std::size_t, double> topk_table(const std::vector<std::vector<int>>& rankings,
                                         const std::vector<int>& truths,
                                         const std::vector<std::size_t>& ks) {
    const std::vector<std::size_t> positions = rank_positions(rankings, truths);
    std::map<std::size_t, double> table;
    for (std::size_t k : ks) {
        std::size_t hit = 0;
        for (std::size_t pos : positions)
            if (pos <= k) ++hit;
        table[k] = static_cast<double>(hit) / static_cast<double>(positions.size());
    }
    return table;
}

void EvalReport::validate() const {
    for (const auto& [name, part] : partitions) {
        double prev = 0.0;
        for (const auto& [k, acc] : part.accuracy) {
            if (!std::isfinite(acc) || acc < 0.0 || acc > 1.0) {
                throw data_error("report: partition " + name + " accuracy at k=" +
                                 std::to_string(k) + " is outside [0,1]");
            }
            if (acc < prev) {
                throw data_error("report: partition " + name + " accuracy decreases at k=" +
                                 std::to_string(k));
            }
            prev = acc;
        }
    }
    for (const auto& [name, top1] : ablation) {
        if (!std::isfinite(top1) || top1 < 0.0 || top1 > 1.0) {
            throw data_error("report: ablation entry " + name + " is outside [0,1]");
        }
    }
    if (sweep) {
        for (const SweepPoint& p : sweep->points) {
            if (!std::isfinite(p.value) || !std::isfinite(p.top1) || p.top1 < 0.0 || p.top1 > 1.0) {
                throw data_error("report: sweep point is invalid");
            }
        }
    }
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["config"] = config;
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [name, part] : partitions) {
        nlohmann::json entry;
        entry["count"] = part.sample_count;
        nlohmann::json acc = nlohmann::json::object();
        for (const auto& [k, v] : part.accuracy) acc[std::to_string(k)] = v;
        entry["accuracy"] = acc;
        parts[name] = entry;
    }
    j["partitions"] = parts;
    if (!ablation.empty()) j["ablation"] = ablation;
    if (sweep) {
        nlohmann::json s;
        s["parameter"] = sweep->parameter;
        s["points"] = nlohmann::json::array();
        for (const SweepPoint& p : sweep->points) s["points"].push_back({p.value, p.top1});
        j["sweep"] = s;
    }
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = j.value("config", nlohmann::json::object());
        for (const auto& [name, entry] : j.at("partitions").items()) {
            PartitionAccuracy part;
            part.sample_count = entry.at("count").get<std::size_t>();
            for (const auto& [k, v] : entry.at("accuracy").items())
                part.accuracy[static_cast<std::size_t>(std::stoull(k))] = v.get<double>();
            r.partitions[name] = part;
        }
        if (j.contains("ablation")) {
            for (const auto& [name, v] : j.at("ablation").items())
                r.ablation[name] = v.get<double>();
        }
        if (j.contains("sweep")) {
            SweepCurve curve;
            curve.parameter = j.at("sweep").at("parameter").get<std::string>();
            for (const auto& p : j.at("sweep").at("points")) {
                curve.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            }
            r.sweep = curve;
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("report: malformed json: ") + e.what());
    }
    r.validate();
    return r;
}

} // namespace zskg
