#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace zskg {

/// Fraction of ranks that are <= n. Ranks are 1-based; n = 0 is allowed and
/// vacuously scores 0.
double hits_at_n(const std::vector<std::size_t>& ranks, std::size_t n);

inline const std::vector<std::size_t> kDefaultKs = {1, 2, 5, 10, 20};

/// Accuracy at every k: the fraction of samples whose truth sits within the
/// first k entries of its ranking. Computed from 1-based rank positions, so
/// it coincides with hits_at_n by construction.
std::map<std::size_t, double> topk_table(const std::vector<std::vector<int>>& rankings,
                                         const std::vector<int>& truths,
                                         const std::vector<std::size_t>& ks = kDefaultKs);

/// 1-based rank of each sample's truth inside its ranking.
std::vector<std::size_t> rank_positions(const std::vector<std::vector<int>>& rankings,
                                        const std::vector<int>& truths);

struct PartitionAccuracy {
    std::size_t sample_count = 0;
    std::map<std::size_t, double> accuracy; // k -> accuracy

    bool operator==(const PartitionAccuracy&) const = default;
};

struct SweepPoint {
    double value = 0.0;
    double top1 = 0.0;

    bool operator==(const SweepPoint&) const = default;
};

struct SweepCurve {
    std::string parameter;
    std::vector<SweepPoint> points;

    bool operator==(const SweepCurve&) const = default;
};

/// Per-hop top-k table plus optional sweep curve and ablation entries, with
/// the seed and the full resolved config embedded for reproducibility.
struct EvalReport {
    std::map<std::string, PartitionAccuracy> partitions; // "two_hop" / "three_hop" / "all"
    std::optional<SweepCurve> sweep;
    std::map<std::string, double> ablation; // entry name -> top-1
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();

    bool operator==(const EvalReport&) const = default;

    /// Accuracies must lie in [0,1] and be non-decreasing in k.
    void validate() const;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

} // namespace zskg
