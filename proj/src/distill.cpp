#include "zskg/distill.hpp"

#include <cmath>
#include <string>

#include "zskg/errors.hpp"

namespace zskg {

void DistillConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0) {
        throw domain_error("distill: alpha must be in [0,1], got " + std::to_string(alpha));
    }
    if (!(temperature > 0.0)) {
        throw domain_error("distill: temperature must be > 0, got " + std::to_string(temperature));
    }
    if (batch_size == 0) {
        throw domain_error("distill: batch size must be >= 1");
    }
}

TeacherModel::TeacherModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                           double dropout_rate)
    : l1_(input_dim, hidden_dim, Activation::relu, 1.0 - dropout_rate),
      l2_(hidden_dim, hidden_dim, Activation::relu, 1.0 - dropout_rate),
      l3_(hidden_dim, output_dim, Activation::none) {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw domain_error("teacher: dropout rate must be in [0,1)");
    }
}

void TeacherModel::init(Rng& rng) {
    init_gaussian(l1_.params(), rng, std::sqrt(2.0 / static_cast<double>(l1_.in_dim())));
    init_gaussian(l2_.params(), rng, std::sqrt(2.0 / static_cast<double>(l2_.in_dim())));
    init_gaussian(l3_.params(), rng, std::sqrt(2.0 / static_cast<double>(l3_.in_dim())));
}

Matrix TeacherModel::forward(const Matrix& x, Mode mode, Rng* rng) {
    Matrix h = l1_.forward(x, mode, rng);
    h = l2_.forward(h, mode, rng);
    return l3_.forward(h, mode, rng);
}

Matrix TeacherModel::infer(const Matrix& x) const {
    Matrix h = dense_forward(x, l1_.params(), Activation::relu);
    h = dense_forward(h, l2_.params(), Activation::relu);
    return dense_forward(h, l3_.params(), Activation::none);
}

void TeacherModel::backward(const Matrix& grad_logits) {
    l1_.backward(l2_.backward(l3_.backward(grad_logits)));
}

std::vector<LayerParams*> TeacherModel::params() {
    return {&l1_.params(), &l2_.params(), &l3_.params()};
}

std::vector<const LayerParams*> TeacherModel::params() const {
    return {&l1_.params(), &l2_.params(), &l3_.params()};
}

std::size_t TeacherModel::param_count() const {
    return l1_.params().count() + l2_.params().count() + l3_.params().count();
}

bool TeacherModel::operator==(const TeacherModel& other) const {
    return l1_.params().w == other.l1_.params().w && l1_.params().b == other.l1_.params().b &&
           l2_.params().w == other.l2_.params().w && l2_.params().b == other.l2_.params().b &&
           l3_.params().w == other.l3_.params().w && l3_.params().b == other.l3_.params().b;
}

StudentModel::StudentModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim)
    : l1_(input_dim, hidden_dim, Activation::relu), l2_(hidden_dim, output_dim, Activation::none) {}

void StudentModel::init(Rng& rng) {
    init_gaussian(l1_.params(), rng, std::sqrt(2.0 / static_cast<double>(l1_.in_dim())));
    init_gaussian(l2_.params(), rng, std::sqrt(2.0 / static_cast<double>(l2_.in_dim())));
}

Matrix StudentModel::forward(const Matrix& x, Mode mode) {
    return l2_.forward(l1_.forward(x, mode), mode);
}

Matrix StudentModel::infer(const Matrix& x) const {
    Matrix h = dense_forward(x, l1_.params(), Activation::relu);
    return dense_forward(h, l2_.params(), Activation::none);
}

void StudentModel::backward(const Matrix& grad_logits) {
    l1_.backward(l2_.backward(grad_logits));
}

std::vector<LayerParams*> StudentModel::params() {
    return {&l1_.params(), &l2_.params()};
}

std::vector<const LayerParams*> StudentModel::params() const {
    return {&l1_.params(), &l2_.params()};
}

std::size_t StudentModel::param_count() const {
    return l1_.params().count() + l2_.params().count();
}

bool StudentModel::operator==(const StudentModel& other) const {
    return l1_.params().w == other.l1_.params().w && l1_.params().b == other.l1_.params().b &&
           l2_.params().w == other.l2_.params().w && l2_.params().b == other.l2_.params().b;
}

namespace {

void require_same_logits(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw shape_error("distillation: student and teacher logit shapes differ");
    }
}

} // namespace

double distillation_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                         const std::vector<std::size_t>& targets, const DistillConfig& cfg) {
    cfg.validate();
    require_same_logits(student_logits, teacher_logits);
    double loss = 0.0;
    if (cfg.alpha > 0.0) {
        loss += cfg.alpha * cross_entropy(student_logits, targets);
    }
    if (cfg.alpha < 1.0) {
        const double t = cfg.temperature;
        const Matrix log_p = log_softmax_rows(student_logits, t);
        const Matrix q = softmax_rows(teacher_logits, t);
        const double scale = cfg.kl_scale_t2 ? t * t : 1.0;
        loss += (1.0 - cfg.alpha) * kl_divergence(log_p, q) * scale;
    }
    return loss;
}

Matrix distillation_loss_grad(const Matrix& student_logits, const Matrix& teacher_logits,
                              const std::vector<std::size_t>& targets, const DistillConfig& cfg) {
    cfg.validate();
    require_same_logits(student_logits, teacher_logits);
    Matrix grad(student_logits.rows(), student_logits.cols());
    const double inv_n = 1.0 / static_cast<double>(student_logits.rows());
    if (cfg.alpha > 0.0) {
        Matrix ce = cross_entropy_grad(student_logits, targets);
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += cfg.alpha * ce.data()[i];
    }
    if (cfg.alpha < 1.0) {
        const double t = cfg.temperature;
        const Matrix p = softmax_rows(student_logits, t);
        const Matrix q = softmax_rows(teacher_logits, t);
        const double scale = (cfg.kl_scale_t2 ? t * t : 1.0) * (1.0 - cfg.alpha) * inv_n / t;
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad.data()[i] += scale * (p.data()[i] - q.data()[i]);
    }
    return grad;
}

double hard_soft_loss(const Matrix& vg, const std::vector<std::size_t>& vc,
                      const DistillConfig& cfg) {
    cfg.validate();
    double loss = 0.0;
    if (cfg.alpha > 0.0) {
        loss += cfg.alpha * cross_entropy(vg, vc);
    }
    if (cfg.alpha < 1.0) {
        const Matrix log_soft = log_softmax_rows(vg, cfg.temperature);
        double soft = 0.0;
        for (std::size_t i = 0; i < vg.rows(); ++i) soft -= log_soft(i, vc[i]);
        loss += (1.0 - cfg.alpha) * soft / static_cast<double>(vg.rows());
    }
    return loss;
}

Matrix hard_soft_loss_grad(const Matrix& vg, const std::vector<std::size_t>& vc,
                           const DistillConfig& cfg) {
    cfg.validate();
    Matrix grad(vg.rows(), vg.cols());
    const double inv_n = 1.0 / static_cast<double>(vg.rows());
    if (cfg.alpha > 0.0) {
        Matrix ce = cross_entropy_grad(vg, vc);
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += cfg.alpha * ce.data()[i];
    }
    if (cfg.alpha < 1.0) {
        Matrix p = softmax_rows(vg, cfg.temperature);
        const double scale = (1.0 - cfg.alpha) * inv_n / cfg.temperature;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            p(i, vc[i]) -= 1.0;
            for (std::size_t j = 0; j < p.cols(); ++j) grad(i, j) += scale * p(i, j);
        }
    }
    return grad;
}

double hard_soft_loss_soft_targets(const Matrix& vg, const Matrix& soft_labels,
                                   const std::vector<std::size_t>& vc, const DistillConfig& cfg) {
    cfg.validate();
    if (!vg.same_shape(soft_labels)) {
        throw shape_error("hard_soft_loss: soft label shape differs from scores");
    }
    double loss = 0.0;
    if (cfg.alpha > 0.0) {
        loss += cfg.alpha * cross_entropy(vg, vc);
    }
    if (cfg.alpha < 1.0) {
        const Matrix log_soft = log_softmax_rows(vg, cfg.temperature);
        double soft = 0.0;
        for (std::size_t i = 0; i < vg.rows(); ++i)
            for (std::size_t j = 0; j < vg.cols(); ++j) soft -= soft_labels(i, j) * log_soft(i, j);
        loss += (1.0 - cfg.alpha) * soft / static_cast<double>(vg.rows());
    }
    return loss;
}

Matrix hard_soft_loss_soft_targets_grad(const Matrix& vg, const Matrix& soft_labels,
                                        const std::vector<std::size_t>& vc,
                                        const DistillConfig& cfg) {
    cfg.validate();
    if (!vg.same_shape(soft_labels)) {
        throw shape_error("hard_soft_loss: soft label shape differs from scores");
    }
    Matrix grad(vg.rows(), vg.cols());
    const double inv_n = 1.0 / static_cast<double>(vg.rows());
    if (cfg.alpha > 0.0) {
        Matrix ce = cross_entropy_grad(vg, vc);
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += cfg.alpha * ce.data()[i];
    }
    if (cfg.alpha < 1.0) {
        const Matrix p = softmax_rows(vg, cfg.temperature);
        const double scale = (1.0 - cfg.alpha) * inv_n / cfg.temperature;
        for (std::size_t i = 0; i < vg.rows(); ++i) {
            double mass = 0.0;
            for (std::size_t j = 0; j < vg.cols(); ++j) mass += soft_labels(i, j);
            for (std::size_t j = 0; j < vg.cols(); ++j)
                grad(i, j) += scale * (mass * p(i, j) - soft_labels(i, j));
        }
    }
    return grad;
}

namespace {

struct SampleSet {
    Matrix x;                        // one row per sample
    std::vector<std::size_t> targets; // aligned with x rows
};

SampleSet assemble_seen(const FeatureStore& store, const std::vector<int>& seen_ids) {
    if (seen_ids.empty()) {
        throw domain_error("training: seen class set is empty");
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> targets;
    for (std::size_t c = 0; c < seen_ids.size(); ++c) {
        const std::vector<double>& text = store.text(seen_ids[c]);
        const Matrix& visual = store.visual(seen_ids[c]);
        for (std::size_t r = 0; r < visual.rows(); ++r) {
            std::vector<double> x = text;
            const auto vr = visual.row(r);
            x.insert(x.end(), vr.begin(), vr.end());
            rows.push_back(std::move(x));
            targets.push_back(c);
        }
    }
    return {Matrix::from_rows(rows), std::move(targets)};
}

SampleSet assemble_unseen(const FeatureStore& store, const std::vector<int>& unseen_ids,
                          const std::vector<std::size_t>& unseen_targets) {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> targets;
    for (std::size_t c = 0; c < unseen_ids.size(); ++c) {
        if (!store.has_visual(unseen_ids[c])) {
            throw state_error("train_student: class " + std::to_string(unseen_ids[c]) +
                              " has no synthesized features");
        }
        const Matrix& visual = store.visual(unseen_ids[c]);
        for (std::size_t r = 0; r < visual.rows(); ++r) {
            rows.push_back(visual.row(r));
            targets.push_back(unseen_targets[c]);
        }
    }
    return {Matrix::from_rows(rows), std::move(targets)};
}

SampleSet draw_batch(const SampleSet& all, std::size_t batch_size, Rng& rng) {
    const std::size_t n = all.x.rows();
    const std::size_t b = std::min(batch_size, n);
    Matrix x(b, all.x.cols());
    std::vector<std::size_t> targets(b);
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t pick = rng.next_below(n);
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = all.x(pick, j);
        targets[i] = all.targets[pick];
    }
    return {std::move(x), std::move(targets)};
}

} // namespace

TrainTrace train_teacher(const FeatureStore& store, const std::vector<int>& seen_ids,
                         TeacherModel& teacher, const DistillConfig& cfg) {
    cfg.validate();
    SampleSet data = assemble_seen(store, seen_ids);
    if (data.x.cols() != teacher.input_dim()) {
        throw shape_error("train_teacher: sample dimension " + std::to_string(data.x.cols()) +
                          " does not match teacher input " + std::to_string(teacher.input_dim()));
    }

    Rng batch_rng(derive_seed(cfg.seed, "teacher-batch"));
    Rng dropout_rng(derive_seed(cfg.seed, "teacher-dropout"));
    AdamState adam(teacher.params(), cfg.adam());

    TrainTrace trace;
    trace.losses.reserve(cfg.rounds);
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        SampleSet batch = draw_batch(data, cfg.batch_size, batch_rng);
        Matrix logits = teacher.forward(batch.x, Mode::training, &dropout_rng);
        trace.losses.push_back(cross_entropy(logits, batch.targets));
        for (LayerParams* p : teacher.params()) p->zero_grad();
        teacher.backward(cross_entropy_grad(logits, batch.targets));
        adam.step(teacher.params());
    }
    teacher.mark_ready();
    return trace;
}

TrainTrace train_student(const FeatureStore& store, const std::vector<int>& seen_ids,
                         const std::vector<int>& unseen_ids,
                         const std::vector<std::size_t>& unseen_targets,
                         const TeacherModel& teacher, StudentModel& student,
                         const DistillConfig& cfg, UnseenScorer* scorer) {
    cfg.validate();
    if (!teacher.is_ready()) {
        throw state_error("train_student: teacher has not been trained");
    }
    if (scorer && unseen_ids.size() != unseen_targets.size()) {
        throw shape_error("train_student: one target index per unseen class required");
    }
    SampleSet seen = assemble_seen(store, seen_ids);
    SampleSet unseen;
    if (scorer) {
        unseen = assemble_unseen(store, unseen_ids, unseen_targets);
        for (std::size_t t : unseen.targets) {
            if (t >= scorer->class_count()) {
                throw index_error("train_student: scorer target out of range");
            }
        }
    }

    Rng seen_rng(derive_seed(cfg.seed, "student-batch"));
    Rng unseen_rng(derive_seed(cfg.seed, "scorer-batch"));
    AdamState adam(student.params(), cfg.adam());

    TrainTrace trace;
    trace.losses.reserve(cfg.rounds);
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        SampleSet batch = draw_batch(seen, cfg.batch_size, seen_rng);
        const Matrix teacher_logits = teacher.infer(batch.x);
        Matrix student_logits = student.forward(batch.x, Mode::training);
        double loss = distillation_loss(student_logits, teacher_logits, batch.targets, cfg);
        for (LayerParams* p : student.params()) p->zero_grad();
        student.backward(distillation_loss_grad(student_logits, teacher_logits, batch.targets, cfg));
        adam.step(student.params());

        if (scorer) {
            SampleSet synth = draw_batch(unseen, cfg.batch_size, unseen_rng);
            Matrix scores = scorer->forward(synth.x, Mode::training);
            loss += hard_soft_loss(scores, synth.targets, cfg);
            scorer->backward(hard_soft_loss_grad(scores, synth.targets, cfg));
            scorer->step();
        }
        trace.losses.push_back(loss);
    }
    return trace;
}

} // namespace zskg
