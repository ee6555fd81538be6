#pragma once

#include <cstdint>
#include <vector>

#include "zskg/distill.hpp"
#include "zskg/gcn.hpp"
#include "zskg/graph.hpp"
#include "zskg/matrix.hpp"
#include "zskg/providers.hpp"

namespace zskg {

struct AblationToggles {
    bool visible = true;      // off: skip teacher training, keep the random frozen teacher
    bool distillation = true; // off: skip student and classifier-head training entirely
    bool gcn = true;          // off: propagation becomes the identity map
};

struct PipelineConfig {
    DistillConfig distill;
    std::size_t teacher_hidden = 64;
    std::size_t gcn_hidden = 64;
    std::size_t gcn_out = 64;
    double dropout_rate = 0.5; // teacher layers and gcn layer inputs
    std::size_t n_synth = 50;  // synthesized rows per unseen class
    ProviderConfig provider;
    AblationToggles toggles;
    bool augment_seen_with_visual_mean = false;

    void validate() const;
};

struct VisibleLearningResult {
    TeacherModel teacher;
    StudentModel student;
    TrainTrace teacher_trace;
    TrainTrace student_trace;
};

struct UnseenRecognitionResult {
    Matrix features;   // F rows in graph node order, initialized from text embeddings
    Matrix propagated; // inference-mode propagation of `features` with the given params
};

/// Everything fit() produces. class_ids/seen_flags follow graph node order;
/// mc rows are concat(propagated feature row, text embedding).
struct TrainedPipeline {
    TeacherModel teacher;
    StudentModel student;
    GcnParams gcn;
    LayerParams head; // sample-feature space -> mc space, bias pinned at zero
    Matrix f_su;
    Matrix f_bar;
    Matrix mc;
    std::vector<int> class_ids;
    std::vector<bool> seen_flags;
    PipelineConfig config;
    TrainTrace teacher_trace;
    TrainTrace student_trace;
    bool trained = false;

    std::vector<int> seen_ids() const;
    std::vector<int> unseen_ids() const;
};

/// Stage one: teacher training plus the seen-class portion of student training.
VisibleLearningResult run_visible_learning(const FeatureStore& store, const ClassGraph& g,
                                           const PipelineConfig& cfg);

/// Stage two: initializes class features from text embeddings, propagates them
/// over the graph, and synthesizes pseudo-visual rows for every unseen class
/// into the store. Synthesis is all-or-nothing: a provider failure leaves the
/// store unchanged.
UnseenRecognitionResult run_unseen_recognition(FeatureStore& store, const ClassGraph& g,
                                               const AdjacencyOperator& adj,
                                               const GcnParams& gcn, const PipelineConfig& cfg);

/// All three stages in order, honoring the ablation toggles.
TrainedPipeline fit(FeatureStore store, const ClassGraph& g, const PipelineConfig& cfg);

/// Full descending ranking of unseen class ids per sample row; ties break by
/// ascending class id. With the distillation toggle off the pipeline falls
/// back to the ConSE route through the teacher.
std::vector<std::vector<int>> classify_unseen(const Matrix& sample_features,
                                              const TrainedPipeline& tp, const ClassGraph& g);

/// ConSE: teacher probabilities (text slot zeroed) pick the top-k seen
/// classes, whose probability-weighted text embeddings form a semantic
/// vector; unseen classes are ranked by cosine similarity to it.
std::vector<std::vector<int>> conse_baseline(const Matrix& sample_features,
                                             const TeacherModel& teacher,
                                             const FeatureStore& store, const ClassGraph& g,
                                             std::size_t k);

} // namespace zskg
