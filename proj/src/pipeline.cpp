#include "zskg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zskg/errors.hpp"
#include "zskg/losses.hpp"

namespace zskg {

void PipelineConfig::validate() const {
    distill.validate();
    provider.validate();
    if (toggles.distillation && n_synth < 1) {
        throw domain_error("pipeline: n_synth must be >= 1 while distillation is on");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw domain_error("pipeline: dropout rate must be in [0,1)");
    }
    if (teacher_hidden < 2 || gcn_hidden < 1 || gcn_out < 1) {
        throw domain_error("pipeline: layer widths must be positive");
    }
}

std::vector<int> TrainedPipeline::seen_ids() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        if (seen_flags[i]) out.push_back(class_ids[i]);
    return out;
}

std::vector<int> TrainedPipeline::unseen_ids() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        if (!seen_flags[i]) out.push_back(class_ids[i]);
    return out;
}

namespace {

std::vector<int> ids_of(const ClassGraph& g, const std::vector<std::size_t>& indices) {
    std::vector<int> ids;
    ids.reserve(indices.size());
    for (std::size_t i : indices) ids.push_back(g.node(i).id);
    return ids;
}

/// Class features in node order, initialized from text embeddings. Seen rows
/// optionally add the class's mean visual feature (requires equal dims).
Matrix initial_features(const FeatureStore& store, const ClassGraph& g,
                        const PipelineConfig& cfg) {
    Matrix f(g.node_count(), store.text_dim());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const ClassNode& node = g.node(i);
        if (!store.has_text(node.id)) {
            throw state_error("pipeline: class " + std::to_string(node.id) + " (" + node.label +
                              ") has no text embedding");
        }
        std::vector<double> row = store.text(node.id);
        if (cfg.augment_seen_with_visual_mean && node.seen && store.has_visual(node.id)) {
            if (store.visual_dim() != store.text_dim()) {
                throw domain_error(
                    "pipeline: visual-mean augmentation needs equal text and visual dims");
            }
            const Matrix& visual = store.visual(node.id);
            for (std::size_t j = 0; j < row.size(); ++j) {
                double mean = 0.0;
                for (std::size_t r = 0; r < visual.rows(); ++r) mean += visual(r, j);
                row[j] += mean / static_cast<double>(visual.rows());
            }
            row = l2_normalized(row);
        }
        f.set_row(i, row);
    }
    return f;
}

Matrix text_matrix(const FeatureStore& store, const ClassGraph& g) {
    Matrix e(g.node_count(), store.text_dim());
    for (std::size_t i = 0; i < g.node_count(); ++i) e.set_row(i, store.text(g.node(i).id));
    return e;
}

/// Scores every class by (samples * head) mc^T, re-propagating the class
/// features with dropout each round so the gcn parameters train jointly with
/// the head. The head bias stays pinned at zero: the head is a projection.
class McScorer final : public UnseenScorer {
public:
    McScorer(const Matrix& f, const AdjacencyOperator& adj, GcnParams& gcn, LayerParams& head,
             const Matrix& text_embeddings, const PipelineConfig& cfg, std::uint64_t seed)
        : f_(f),
          adj_(adj),
          gcn_(gcn),
          head_(head),
          e_(text_embeddings),
          use_gcn_(cfg.toggles.gcn),
          prop_(cfg.dropout_rate),
          rng_(derive_seed(seed, "gcn-dropout")),
          adam_(collect(gcn, head, cfg.toggles.gcn), cfg.distill.adam()) {}

    std::size_t class_count() const override { return f_.rows(); }

    Matrix forward(const Matrix& rows, Mode mode) override {
        Matrix f_bar = use_gcn_ ? prop_.forward(f_, adj_, gcn_, mode, &rng_) : f_;
        mc_ = hconcat(f_bar, e_);
        rows_ = rows;
        proj_ = matmul(rows, head_.w);
        return matmul(proj_, transpose(mc_));
    }

    void backward(const Matrix& grad_scores) override {
        head_.zero_grad();
        gcn_.zero_grad();
        Matrix d_proj = matmul(grad_scores, mc_);
        Matrix gw = matmul(transpose(rows_), d_proj);
        for (std::size_t i = 0; i < head_.gw.size(); ++i) head_.gw.data()[i] += gw.data()[i];

        if (use_gcn_) {
            Matrix d_mc = matmul(transpose(grad_scores), proj_);
            Matrix d_fbar(d_mc.rows(), d_mc.cols() - e_.cols());
            for (std::size_t i = 0; i < d_fbar.rows(); ++i)
                for (std::size_t j = 0; j < d_fbar.cols(); ++j) d_fbar(i, j) = d_mc(i, j);
            prop_.backward(d_fbar);
        }
    }

    void step() override {
        std::vector<LayerParams*> params{&head_};
        if (use_gcn_) {
            params.push_back(&gcn_.theta1);
            if (!gcn_.shared) params.push_back(&gcn_.theta2);
        }
        adam_.step(params);
    }

private:
    static std::vector<LayerParams*> collect(GcnParams& gcn, LayerParams& head, bool use_gcn) {
        std::vector<LayerParams*> params{&head};
        if (use_gcn) {
            params.push_back(&gcn.theta1);
            if (!gcn.shared) params.push_back(&gcn.theta2);
        }
        return params;
    }

    Matrix f_;
    const AdjacencyOperator& adj_;
    GcnParams& gcn_;
    LayerParams& head_;
    Matrix e_;
    bool use_gcn_;
    GcnPropagator prop_;
    Rng rng_;
    AdamState adam_;
    Matrix mc_, rows_, proj_;
};

std::vector<std::vector<int>> rank_rows(const Matrix& scores, const std::vector<int>& ids) {
    std::vector<std::vector<int>> rankings(scores.rows());
    for (std::size_t s = 0; s < scores.rows(); ++s) {
        std::vector<std::size_t> order(ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores(s, a) != scores(s, b)) return scores(s, a) > scores(s, b);
            return ids[a] < ids[b];
        });
        rankings[s].reserve(ids.size());
        for (std::size_t i : order) rankings[s].push_back(ids[i]);
    }
    return rankings;
}

} // namespace

VisibleLearningResult run_visible_learning(const FeatureStore& store, const ClassGraph& g,
                                           const PipelineConfig& cfg) {
    cfg.validate();
    g.require_pipeline_ready();
    const std::vector<int> seen = ids_of(g, g.seen_indices());
    const std::size_t input_dim = store.text_dim() + store.visual_dim();

    Rng teacher_init(derive_seed(cfg.distill.seed, "teacher-init"));
    TeacherModel teacher(input_dim, cfg.teacher_hidden, seen.size(), cfg.dropout_rate);
    teacher.init(teacher_init);
    TrainTrace teacher_trace = train_teacher(store, seen, teacher, cfg.distill);

    Rng student_init(derive_seed(cfg.distill.seed, "student-init"));
    StudentModel student(input_dim, std::max<std::size_t>(1, cfg.teacher_hidden / 2), seen.size());
    student.init(student_init);
    TrainTrace student_trace = train_student(store, seen, {}, {}, teacher, student, cfg.distill);

    return {std::move(teacher), std::move(student), std::move(teacher_trace),
            std::move(student_trace)};
}

UnseenRecognitionResult run_unseen_recognition(FeatureStore& store, const ClassGraph& g,
                                               const AdjacencyOperator& adj,
                                               const GcnParams& gcn, const PipelineConfig& cfg) {
    cfg.validate();
    Matrix f = initial_features(store, g, cfg);
    Matrix propagated =
        cfg.toggles.gcn ? gcn_propagate(f, adj, gcn, DropoutMask{1.0, Mode::inference}) : f;

    // synthesize first, write after: a provider failure must not touch the store
    const std::vector<std::size_t> unseen = g.unseen_indices();
    std::vector<std::pair<int, Matrix>> synthesized;
    synthesized.reserve(unseen.size());
    for (std::size_t i : unseen) {
        const int id = g.node(i).id;
        synthesized.emplace_back(
            id, synthesize_unseen_visual_features(store.text(id), cfg.n_synth, cfg.provider));
    }
    for (auto& [id, rows] : synthesized) store.add_visual_rows(id, rows);

    return {std::move(f), std::move(propagated)};
}

TrainedPipeline fit(FeatureStore store, const ClassGraph& g, const PipelineConfig& cfg) {
    cfg.validate();
    g.require_pipeline_ready();
    const std::vector<int> seen = ids_of(g, g.seen_indices());
    const std::vector<int> unseen = ids_of(g, g.unseen_indices());
    const std::size_t input_dim = store.text_dim() + store.visual_dim();

    // stage one: visible-class learning (teacher)
    Rng teacher_init(derive_seed(cfg.distill.seed, "teacher-init"));
    TeacherModel teacher(input_dim, cfg.teacher_hidden, seen.size(), cfg.dropout_rate);
    teacher.init(teacher_init);
    TrainTrace teacher_trace;
    if (cfg.toggles.visible) {
        teacher_trace = train_teacher(store, seen, teacher, cfg.distill);
    } else {
        teacher.mark_ready(); // deliberate random frozen teacher
    }

    // stage two: unseen-class recognition (features, propagation, synthesis)
    AdjacencyOperator adj = normalized_adjacency(g);
    Rng gcn_init(derive_seed(cfg.distill.seed, "gcn-init"));
    GcnParams gcn(store.text_dim(), cfg.gcn_hidden, cfg.gcn_out);
    init_gaussian(gcn.theta1, gcn_init, std::sqrt(2.0 / static_cast<double>(store.text_dim())));
    init_gaussian(gcn.theta2, gcn_init, std::sqrt(2.0 / static_cast<double>(cfg.gcn_hidden)));
    UnseenRecognitionResult recognition = run_unseen_recognition(store, g, adj, gcn, cfg);

    // stage three: student distillation plus classifier-head training
    Rng student_init(derive_seed(cfg.distill.seed, "student-init"));
    StudentModel student(input_dim, std::max<std::size_t>(1, cfg.teacher_hidden / 2), seen.size());
    student.init(student_init);

    const Matrix e = text_matrix(store, g);
    const std::size_t propagated_dim = cfg.toggles.gcn ? cfg.gcn_out : e.cols();
    Rng head_init(derive_seed(cfg.distill.seed, "head-init"));
    LayerParams head(store.visual_dim(), propagated_dim + e.cols());
    init_gaussian(head, head_init, std::sqrt(1.0 / static_cast<double>(store.visual_dim())));

    TrainTrace student_trace;
    if (cfg.toggles.distillation) {
        std::vector<std::size_t> unseen_targets;
        for (std::size_t i : g.unseen_indices()) unseen_targets.push_back(i);
        McScorer scorer(recognition.features, adj, gcn, head, e, cfg, cfg.distill.seed);
        student_trace = train_student(store, seen, unseen, unseen_targets, teacher, student,
                                      cfg.distill, &scorer);
    }

    TrainedPipeline tp{std::move(teacher),
                       std::move(student),
                       std::move(gcn),
                       std::move(head),
                       std::move(recognition.features),
                       Matrix(),
                       Matrix(),
                       {},
                       {},
                       cfg,
                       std::move(teacher_trace),
                       std::move(student_trace),
                       true};
    tp.f_bar = cfg.toggles.gcn
                   ? gcn_propagate(tp.f_su, adj, tp.gcn, DropoutMask{1.0, Mode::inference})
                   : tp.f_su;
    tp.mc = hconcat(tp.f_bar, e);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        tp.class_ids.push_back(g.node(i).id);
        tp.seen_flags.push_back(g.node(i).seen);
    }
    return tp;
}

std::vector<std::vector<int>> classify_unseen(const Matrix& sample_features,
                                              const TrainedPipeline& tp, const ClassGraph& g) {
    if (!tp.trained) {
        throw state_error("classify_unseen: pipeline has not been trained");
    }
    if (!tp.config.toggles.distillation) {
        // floor: teacher-only semantics, nearest text embedding; the text
        // block of mc doubles as the embedding table
        const std::size_t text_dim = tp.mc.cols() - tp.f_bar.cols();
        FeatureStore view(text_dim, sample_features.cols());
        for (std::size_t i = 0; i < tp.class_ids.size(); ++i) {
            std::vector<double> text(text_dim);
            for (std::size_t j = 0; j < text_dim; ++j) text[j] = tp.mc(i, tp.f_bar.cols() + j);
            view.set_text(tp.class_ids[i], text);
        }
        return conse_baseline(sample_features, tp.teacher, view, g, tp.seen_ids().size());
    }

    if (sample_features.cols() != tp.head.w.rows()) {
        throw shape_error("classify_unseen: sample dimension " +
                          std::to_string(sample_features.cols()) + " does not match head input " +
                          std::to_string(tp.head.w.rows()));
    }
    const Matrix proj = matmul(sample_features, tp.head.w);

    std::vector<int> unseen_ids;
    std::vector<std::size_t> unseen_rows;
    for (std::size_t i = 0; i < tp.class_ids.size(); ++i) {
        if (!tp.seen_flags[i]) {
            unseen_ids.push_back(tp.class_ids[i]);
            unseen_rows.push_back(i);
        }
    }
    Matrix scores(sample_features.rows(), unseen_ids.size());
    for (std::size_t s = 0; s < proj.rows(); ++s)
        for (std::size_t u = 0; u < unseen_rows.size(); ++u) {
            double acc = 0.0;
            for (std::size_t j = 0; j < proj.cols(); ++j) acc += proj(s, j) * tp.mc(unseen_rows[u], j);
            scores(s, u) = acc;
        }
    return rank_rows(scores, unseen_ids);
}

std::vector<std::vector<int>> conse_baseline(const Matrix& sample_features,
                                             const TeacherModel& teacher,
                                             const FeatureStore& store, const ClassGraph& g,
                                             std::size_t k) {
    const std::vector<int> seen = ids_of(g, g.seen_indices());
    const std::vector<int> unseen = ids_of(g, g.unseen_indices());
    if (k == 0) {
        throw domain_error("conse: k must be >= 1");
    }
    if (k > seen.size()) {
        throw domain_error("conse: k exceeds the seen class count");
    }
    const std::size_t text_dim = store.text_dim();
    const std::size_t visual_dim = teacher.input_dim() - text_dim;
    if (sample_features.cols() != visual_dim) {
        throw shape_error("conse: sample dimension " + std::to_string(sample_features.cols()) +
                          " does not match teacher visual slot " + std::to_string(visual_dim));
    }

    // the class is unknown at test time, so the text slot is zero-filled
    Matrix x(sample_features.rows(), teacher.input_dim());
    for (std::size_t i = 0; i < sample_features.rows(); ++i)
        for (std::size_t j = 0; j < visual_dim; ++j) x(i, text_dim + j) = sample_features(i, j);
    const Matrix probs = softmax_rows(teacher.infer(x));

    std::vector<std::vector<int>> rankings(sample_features.rows());
    Matrix scores(sample_features.rows(), unseen.size());
    for (std::size_t s = 0; s < probs.rows(); ++s) {
        std::vector<std::size_t> order(seen.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (probs(s, a) != probs(s, b)) return probs(s, a) > probs(s, b);
            return seen[a] < seen[b];
        });
        std::vector<double> semantic(text_dim, 0.0);
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t c = order[r];
            const std::vector<double>& emb = store.text(seen[c]);
            for (std::size_t j = 0; j < text_dim; ++j) semantic[j] += probs(s, c) * emb[j];
        }
        semantic = l2_normalized(semantic);
        for (std::size_t u = 0; u < unseen.size(); ++u)
            scores(s, u) = cosine_similarity(semantic, store.text(unseen[u]));
    }
    return rank_rows(scores, unseen);
}

} // namespace zskg
