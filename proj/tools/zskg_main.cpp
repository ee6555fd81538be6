// zskg: zero-shot classification over class knowledge graphs.
// Subcommands: gen-data, train, eval, sweep, ablate. Results go to --out (or
// stdout), diagnostics to stderr. Exit codes: 0 ok, 1 usage, 2 data error,
// 3 provider error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "zskg/dataio.hpp"
#include "zskg/errors.hpp"
#include "zskg/harness.hpp"
#include "zskg/pipeline.hpp"

namespace {

struct ConfigFlags {
    zskg::PipelineConfig cfg;
    std::string provider = "mock";
    std::uint64_t provider_seed = 0;
    bool provider_seed_set = false;
    bool no_visible = false;
    bool no_distillation = false;
    bool no_gcn = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    auto& distill = flags.cfg.distill;
    cmd->add_option("--lr", distill.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--weight-decay", distill.weight_decay, "decoupled weight decay")
        ->capture_default_str();
    cmd->add_option("--rounds", distill.rounds, "training rounds per model")
        ->capture_default_str();
    cmd->add_option("--dropout", flags.cfg.dropout_rate, "dropout rate for teacher and gcn layers")
        ->capture_default_str();
    cmd->add_option("--alpha", distill.alpha, "hard/soft loss mix in [0,1]")
        ->capture_default_str();
    cmd->add_option("--temperature", distill.temperature, "distillation temperature")
        ->capture_default_str();
    cmd->add_option("--n-synth", flags.cfg.n_synth, "synthesized rows per unseen class")
        ->capture_default_str();
    cmd->add_option("--seed", distill.seed, "master seed")->capture_default_str();
    cmd->add_option("--batch-size", distill.batch_size, "minibatch size")->capture_default_str();
    cmd->add_option("--teacher-hidden", flags.cfg.teacher_hidden, "teacher hidden width")
        ->capture_default_str();
    cmd->add_option("--gcn-hidden", flags.cfg.gcn_hidden, "gcn hidden width")
        ->capture_default_str();
    cmd->add_option("--gcn-out", flags.cfg.gcn_out, "gcn output width")->capture_default_str();
    cmd->add_option("--provider", flags.provider, "feature provider")
        ->check(CLI::IsMember({"mock", "http"}))
        ->capture_default_str();
    cmd->add_option("--endpoint", flags.cfg.provider.endpoint, "http provider endpoint URL");
    cmd->add_option("--timeout-ms", flags.cfg.provider.timeout_ms, "http timeout")
        ->capture_default_str();
    cmd->add_option("--model-name", flags.cfg.provider.model, "remote embedding model name")
        ->capture_default_str();
    cmd->add_option("--synth-sigma", flags.cfg.provider.synth_noise_sigma,
                    "noise sigma for mock synthesis")
        ->capture_default_str();
    cmd->add_option("--provider-seed", flags.provider_seed,
                    "provider seed (defaults to the bundle seed)")
        ->each([&flags](const std::string&) { flags.provider_seed_set = true; });
    cmd->add_flag("--no-visible", flags.no_visible, "skip teacher training (random frozen teacher)");
    cmd->add_flag("--no-distillation", flags.no_distillation,
                  "skip student and classifier-head training");
    cmd->add_flag("--no-gcn", flags.no_gcn, "disable graph propagation (identity pass-through)");
    cmd->add_flag("--coupled-weight-decay", flags.cfg.distill.coupled_weight_decay,
                  "classic L2 instead of decoupled weight decay");
    cmd->add_flag("--kl-t2-scale,!--no-kl-t2-scale", flags.cfg.distill.kl_scale_t2,
                  "T^2 scaling of the KL term (on by default)");
    cmd->add_flag("--augment-seen", flags.cfg.augment_seen_with_visual_mean,
                  "add the mean visual feature to seen rows of the class feature matrix");
}

zskg::PipelineConfig resolve_config(ConfigFlags& flags, const zskg::Manifest& manifest) {
    zskg::PipelineConfig cfg = flags.cfg;
    cfg.toggles.visible = !flags.no_visible;
    cfg.toggles.distillation = !flags.no_distillation;
    cfg.toggles.gcn = !flags.no_gcn;
    cfg.provider.kind =
        flags.provider == "http" ? zskg::ProviderKind::remote : zskg::ProviderKind::mock;
    cfg.provider.text_dim = manifest.text_dim;
    cfg.provider.visual_dim = manifest.visual_dim;
    cfg.provider.seed = flags.provider_seed_set ? flags.provider_seed : manifest.seed;
    cfg.validate();
    return cfg;
}

void require_provider_ready(const zskg::PipelineConfig& cfg) {
    if (cfg.provider.kind != zskg::ProviderKind::remote) return;
    const char* key = std::getenv("ZSKG_API_KEY");
    if (!key || !*key) {
        throw zskg::provider_error("remote provider: ZSKG_API_KEY is not set", 0);
    }
}

void emit_report(const zskg::EvalReport& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << zskg::canonical_json(report.to_json()) << "\n";
    } else {
        zskg::write_report(report, out_path);
        std::cerr << "report written to " << out_path << "\n";
    }
}

int run(int argc, char** argv) {
    CLI::App app{"zero-shot classification toolkit over class knowledge graphs"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a seeded synthetic dataset bundle");
    std::string spec_path, gen_out;
    zskg::SyntheticSpec spec;
    std::string topology = "tree";
    gen->add_option("--spec", spec_path, "synthetic spec json file (inline flags override)");
    gen->add_option("--out", gen_out, "output bundle directory")->required();
    gen->add_option("--seen", spec.seen_classes, "seen class count")->capture_default_str();
    gen->add_option("--unseen", spec.unseen_classes, "unseen class count")->capture_default_str();
    gen->add_option("--samples", spec.samples_per_class, "samples per class")
        ->capture_default_str();
    gen->add_option("--text-dim", spec.text_dim, "text embedding dimension")
        ->capture_default_str();
    gen->add_option("--visual-dim", spec.visual_dim, "visual feature dimension")
        ->capture_default_str();
    gen->add_option("--sigma", spec.noise_sigma, "gaussian noise sigma")->capture_default_str();
    gen->add_option("--topology", topology, "graph topology")
        ->check(CLI::IsMember({"tree", "ring", "random"}))
        ->capture_default_str();
    gen->add_option("--edge-prob", spec.edge_prob, "edge probability (random topology)")
        ->capture_default_str();
    gen->add_option("--seed", spec.seed, "generator seed")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "fit the full pipeline on a bundle");
    std::string train_data, train_out;
    ConfigFlags train_flags;
    train->add_option("--data", train_data, "bundle directory")->required();
    train->add_option("--out", train_out, "model output directory")->required();
    add_config_flags(train, train_flags);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on a bundle");
    std::string eval_data, eval_model, eval_out;
    eval_cmd->add_option("--data", eval_data, "bundle directory")->required();
    eval_cmd->add_option("--model", eval_model, "model directory")->required();
    eval_cmd->add_option("--out", eval_out, "report path (stdout when omitted)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "fit and evaluate across a parameter range");
    std::string sweep_data, sweep_out, sweep_param;
    std::vector<double> sweep_values;
    ConfigFlags sweep_flags;
    sweep_cmd->add_option("--data", sweep_data, "bundle directory")->required();
    sweep_cmd->add_option("--param", sweep_param, "swept parameter")
        ->check(CLI::IsMember({"temperature", "rounds"}))
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "explicit values (preset when omitted)")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "report path (stdout when omitted)");
    add_config_flags(sweep_cmd, sweep_flags);

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "run the full/no_distill/no_visible ablations");
    std::string ablate_data, ablate_out;
    ConfigFlags ablate_flags;
    ablate_cmd->add_option("--data", ablate_data, "bundle directory")->required();
    ablate_cmd->add_option("--out", ablate_out, "report path (stdout when omitted)");
    add_config_flags(ablate_cmd, ablate_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    if (gen->parsed()) {
        if (!spec_path.empty()) {
            // file values fill everything not overridden by an inline flag
            zskg::SyntheticSpec file_spec =
                zskg::SyntheticSpec::from_json(zskg::read_json_file(spec_path));
            if (!gen->count("--seen")) spec.seen_classes = file_spec.seen_classes;
            if (!gen->count("--unseen")) spec.unseen_classes = file_spec.unseen_classes;
            if (!gen->count("--samples")) spec.samples_per_class = file_spec.samples_per_class;
            if (!gen->count("--text-dim")) spec.text_dim = file_spec.text_dim;
            if (!gen->count("--visual-dim")) spec.visual_dim = file_spec.visual_dim;
            if (!gen->count("--sigma")) spec.noise_sigma = file_spec.noise_sigma;
            if (!gen->count("--topology")) topology = zskg::topology_name(file_spec.topology);
            if (!gen->count("--edge-prob")) spec.edge_prob = file_spec.edge_prob;
            if (!gen->count("--seed")) spec.seed = file_spec.seed;
        }
        spec.topology = zskg::topology_from_name(topology);
        spec.validate();
        zskg::DatasetBundle bundle = zskg::generate_synthetic(spec);
        zskg::save_bundle(bundle, gen_out);
        std::cerr << "bundle with " << bundle.graph.node_count() << " classes written to "
                  << gen_out << "\n";
        return 0;
    }

    if (train->parsed()) {
        zskg::DatasetBundle bundle = zskg::load_bundle(train_data);
        zskg::PipelineConfig cfg = resolve_config(train_flags, bundle.manifest);
        require_provider_ready(cfg); // fail fast before any training work
        zskg::TrainedPipeline tp = zskg::fit(bundle.store, bundle.graph, cfg);
        zskg::save_pipeline(tp, train_out);

        nlohmann::json summary;
        summary["config"] = zskg::pipeline_config_to_json(cfg);
        summary["seed"] = cfg.distill.seed;
        auto trace_json = [](const zskg::TrainTrace& t) {
            nlohmann::json j;
            j["rounds"] = t.losses.size();
            if (!t.losses.empty()) {
                j["first_loss"] = t.losses.front();
                j["last_loss"] = t.losses.back();
            }
            return j;
        };
        summary["teacher"] = trace_json(tp.teacher_trace);
        summary["student"] = trace_json(tp.student_trace);
        zskg::write_canonical_json(summary, train_out + "/report.json");
        std::cerr << "model written to " << train_out << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        zskg::DatasetBundle bundle = zskg::load_bundle(eval_data);
        zskg::TrainedPipeline tp = zskg::load_pipeline(eval_model);
        emit_report(zskg::evaluate(tp, bundle), eval_out);
        return 0;
    }

    if (sweep_cmd->parsed()) {
        zskg::DatasetBundle bundle = zskg::load_bundle(sweep_data);
        zskg::PipelineConfig cfg = resolve_config(sweep_flags, bundle.manifest);
        require_provider_ready(cfg);
        const zskg::SweepParameter param = zskg::sweep_parameter_from_name(sweep_param);
        std::vector<double> values = sweep_values;
        if (values.empty()) {
            values = param == zskg::SweepParameter::temperature ? zskg::temperature_preset()
                                                                : zskg::rounds_preset();
        }
        emit_report(zskg::sweep(bundle, cfg, param, values), sweep_out);
        return 0;
    }

    if (ablate_cmd->parsed()) {
        zskg::DatasetBundle bundle = zskg::load_bundle(ablate_data);
        zskg::PipelineConfig cfg = resolve_config(ablate_flags, bundle.manifest);
        require_provider_ready(cfg);
        emit_report(zskg::ablation_suite(bundle, cfg), ablate_out);
        return 0;
    }

    std::cerr << app.help() << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const zskg::usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const zskg::provider_error& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 3;
    } catch (const zskg::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
