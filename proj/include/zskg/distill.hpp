#pragma once

#include <cstdint>
#include <vector>

#include "zskg/losses.hpp"
#include "zskg/matrix.hpp"
#include "zskg/nn.hpp"
#include "zskg/providers.hpp"

namespace zskg {

struct DistillConfig {
    double alpha = 0.5;       // hard/soft mix in [0,1]; 1 removes distillation
    double temperature = 3.0; // softening divisor, > 0
    double lr = 1e-3;
    double weight_decay = 5e-4;
    std::size_t rounds = 3000;
    std::uint64_t seed = 42;
    std::size_t batch_size = 64;
    bool kl_scale_t2 = true;          // scale the KL term by T^2
    bool coupled_weight_decay = false; // switch Adam to classic L2

    void validate() const;
    AdamConfig adam() const {
        AdamConfig a;
        a.lr = lr;
        a.weight_decay = weight_decay;
        a.decoupled_weight_decay = !coupled_weight_decay;
        return a;
    }
};

/// Three dense layers with dropout after the first two affine maps.
class TeacherModel {
public:
    TeacherModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                 double dropout_rate = 0.5);

    void init(Rng& rng);

    /// Training-capable forward; caches intermediates for backward.
    Matrix forward(const Matrix& x, Mode mode, Rng* rng = nullptr);
    /// Pure inference pass; never touches caches, usable on a const model.
    Matrix infer(const Matrix& x) const;
    void backward(const Matrix& grad_logits);

    std::vector<LayerParams*> params();
    std::vector<const LayerParams*> params() const;
    std::size_t param_count() const;
    std::size_t input_dim() const { return l1_.in_dim(); }
    std::size_t output_dim() const { return l3_.out_dim(); }
    double dropout_rate() const { return 1.0 - l1_.dropout_keep(); }

    bool is_ready() const { return ready_; }
    /// Marks the model usable for distillation: set by train_teacher, or
    /// explicitly when a run deliberately keeps a frozen random teacher.
    void mark_ready() { ready_ = true; }

    bool operator==(const TeacherModel& other) const;

private:
    DenseLayer l1_, l2_, l3_;
    bool ready_ = false;
};

/// Two dense layers, hidden ReLU, no dropout. Same input/output dims as the
/// teacher but strictly fewer parameters.
class StudentModel {
public:
    StudentModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

    void init(Rng& rng);
    Matrix forward(const Matrix& x, Mode mode);
    Matrix infer(const Matrix& x) const;
    void backward(const Matrix& grad_logits);

    std::vector<LayerParams*> params();
    std::vector<const LayerParams*> params() const;
    std::size_t param_count() const;
    std::size_t input_dim() const { return l1_.in_dim(); }
    std::size_t output_dim() const { return l2_.out_dim(); }

    bool operator==(const StudentModel& other) const;

private:
    DenseLayer l1_, l2_;
};

inline Matrix teacher_forward(const Matrix& x, TeacherModel& m, Mode mode, Rng* rng = nullptr) {
    return m.forward(x, mode, rng);
}

/// alpha * CE(student, targets)
/// + (1-alpha) * KL(softmax(teacher/T) || softmax(student/T)) [* T^2].
double distillation_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                         const std::vector<std::size_t>& targets, const DistillConfig& cfg);
Matrix distillation_loss_grad(const Matrix& student_logits, const Matrix& teacher_logits,
                              const std::vector<std::size_t>& targets, const DistillConfig& cfg);

/// alpha * CE(vg, vc) + (1-alpha) * CE of the temperature-softened scores
/// against the same targets: -log softmax(vg/T)[vc].
double hard_soft_loss(const Matrix& vg, const std::vector<std::size_t>& vc,
                      const DistillConfig& cfg);
Matrix hard_soft_loss_grad(const Matrix& vg, const std::vector<std::size_t>& vc,
                           const DistillConfig& cfg);

/// Comparison variant: the soft term is cross entropy against a given soft
/// label distribution instead of the hard targets.
double hard_soft_loss_soft_targets(const Matrix& vg, const Matrix& soft_labels,
                                   const std::vector<std::size_t>& vc, const DistillConfig& cfg);
Matrix hard_soft_loss_soft_targets_grad(const Matrix& vg, const Matrix& soft_labels,
                                        const std::vector<std::size_t>& vc,
                                        const DistillConfig& cfg);

struct TrainTrace {
    std::vector<double> losses;
};

/// Hook for the classifier trained on synthesized unseen samples during
/// student training. The pipeline module provides the implementation.
struct UnseenScorer {
    virtual ~UnseenScorer() = default;
    virtual std::size_t class_count() const = 0;
    virtual Matrix forward(const Matrix& sample_rows, Mode mode) = 0;
    virtual void backward(const Matrix& grad_scores) = 0;
    virtual void step() = 0;
};

/// Cross-entropy training of the teacher on seen-class samples
/// x = concat(text embedding, visual row). Marks the teacher ready.
TrainTrace train_teacher(const FeatureStore& store, const std::vector<int>& seen_ids,
                         TeacherModel& teacher, const DistillConfig& cfg);

/// Distills the teacher into the student on seen samples; when a scorer is
/// given, additionally trains it on synthesized unseen rows with the
/// hard/soft loss (targets are scorer-space class indices). The teacher is
/// frozen throughout. Traces carry the combined per-round loss.
TrainTrace train_student(const FeatureStore& store, const std::vector<int>& seen_ids,
                         const std::vector<int>& unseen_ids,
                         const std::vector<std::size_t>& unseen_targets,
                         const TeacherModel& teacher, StudentModel& student,
                         const DistillConfig& cfg, UnseenScorer* scorer = nullptr);

} // namespace zskg
