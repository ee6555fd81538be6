#pragma once

#include <string>
#include <vector>

#include "zskg/dataio.hpp"
#include "zskg/evalkit.hpp"
#include "zskg/pipeline.hpp"

namespace zskg {

/// Per-hop top-k evaluation of a trained pipeline on the bundle's
/// unseen-class test samples. Partitions with no samples are omitted.
EvalReport evaluate(const TrainedPipeline& tp, const DatasetBundle& bundle);

enum class SweepParameter { temperature, rounds };

SweepParameter sweep_parameter_from_name(const std::string& name);

/// Presets matching the reported ranges: temperatures 2.0..5.0 step 0.5,
/// training rounds 1000..5000 step 500.
std::vector<double> temperature_preset();
std::vector<double> rounds_preset();

/// One fit-and-evaluate per value; point i runs with seed base+i. The
/// returned report carries the curve plus the last fit's partition table.
EvalReport sweep(const DatasetBundle& bundle, const PipelineConfig& cfg, SweepParameter parameter,
                 const std::vector<double>& values);

/// Three fits under the ablation toggle sets: full, no_distill (alpha forced
/// to 1) and no_visible (random frozen teacher), all with the same seed.
EvalReport ablation_suite(const DatasetBundle& bundle, const PipelineConfig& cfg);

} // namespace zskg
