// rnne: batch entry points for dynamic-network embedding runs.
//
//   rnne gen   --config run.json
//   rnne train --config run.json [--alpha 0.1 --gamma 5 ...]
//   rnne eval  --config run.json --task reconstruct
//   rnne sweep --config run.json
//   rnne inspect-checkpoint out/checkpoint.json

#include "rnne/error.hpp"
#include "rnne/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> snapshots, labels, output;
    std::optional<std::size_t> capacity, window, batch, dim, max_iters;
    std::optional<double> grubbs_alpha, alpha, beta, gamma, eta;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--set", o.overrides, "Override a config key, e.g. --set model.gamma=5");
    app->add_option("--snapshots", o.snapshots, "paths.snapshots");
    app->add_option("--labels", o.labels, "paths.labels");
    app->add_option("-o,--output", o.output, "paths.output");
    app->add_option("--capacity", o.capacity, "capacity_N");
    app->add_option("--window", o.window, "window_size");
    app->add_option("--grubbs-alpha", o.grubbs_alpha, "grubbs_alpha");
    app->add_option("--alpha", o.alpha, "model.loss_alpha");
    app->add_option("--beta", o.beta, "model.beta");
    app->add_option("--gamma", o.gamma, "model.gamma");
    app->add_option("--eta", o.eta, "model.learning_rate");
    app->add_option("--batch", o.batch, "model.batch_size");
    app->add_option("--dim", o.dim, "model.embedding_dim");
    app->add_option("--max-iters", o.max_iters, "model.max_iters");
    app->add_option("--seed", o.seed, "seeds.train");
}

rnne::RunConfig resolve(const CommonOptions& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        j = json::parse(in, nullptr, true, true);
    }
    auto set = [&](const char* key, const auto& value) {
        if (value) rnne::apply_override(j, std::string(key) + "=" + json(*value).dump());
    };
    set("paths.snapshots", o.snapshots);
    set("paths.labels", o.labels);
    set("paths.output", o.output);
    set("capacity_N", o.capacity);
    set("window_size", o.window);
    set("grubbs_alpha", o.grubbs_alpha);
    set("model.loss_alpha", o.alpha);
    set("model.beta", o.beta);
    set("model.gamma", o.gamma);
    set("model.learning_rate", o.eta);
    set("model.batch_size", o.batch);
    set("model.embedding_dim", o.dim);
    set("model.max_iters", o.max_iters);
    set("seeds.train", o.seed);
    for (const auto& ov : o.overrides) rnne::apply_override(j, ov);
    return rnne::config_from_json(j);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const rnne::ParseError*>(&e) || dynamic_cast<const rnne::ValidationError*>(&e)) return 2;
    if (dynamic_cast<const rnne::CapacityError*>(&e)) return 3;
    if (dynamic_cast<const rnne::SequencingError*>(&e)) return 4;
    if (dynamic_cast<const rnne::TrainingError*>(&e) || dynamic_cast<const rnne::CorruptionError*>(&e)) return 5;
    if (dynamic_cast<const rnne::IoError*>(&e)) return 6;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent autoencoder embeddings for dynamic networks"};
    app.require_subcommand(1);

    CommonOptions gen_opts, train_opts, eval_opts, sweep_opts;
    auto* gen = app.add_subcommand("gen", "Write a planted-partition snapshot series and labels");
    add_common(gen, gen_opts);

    auto* train = app.add_subcommand("train", "Slide the training window over a snapshot series");
    add_common(train, train_opts);

    auto* eval = app.add_subcommand("eval", "Score embeddings: reconstruct, linkpred or classify");
    add_common(eval, eval_opts);
    std::vector<std::string> tasks;
    bool dump_ranked = false;
    eval->add_option("-t,--task", tasks, "Task(s) to run; defaults to eval.tasks")
        ->check(CLI::IsMember({"reconstruct", "linkpred", "classify"}));
    eval->add_flag("--dump-ranked", dump_ranked, "eval.dump_ranked");

    auto* sweep = app.add_subcommand("sweep", "Train and evaluate over the alpha/beta/gamma grid");
    add_common(sweep, sweep_opts);

    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
    std::string checkpoint_path;
    inspect->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto cfg = resolve(gen_opts);
            rnne::cmd_gen(cfg);
            std::cout << "wrote " << cfg.gen.perturbation.series_length << " snapshots to " << cfg.paths.snapshots
                      << '\n';
        } else if (train->parsed()) {
            const auto cfg = resolve(train_opts);
            const auto outcome = rnne::cmd_train(cfg);
            for (const auto& d : outcome.diagnostics) std::cerr << "note: " << d << '\n';
            std::cout << "trained " << outcome.embeddings.size() << " snapshots, " << outcome.total_iterations
                      << " iterations, final loss " << rnne::format_double(outcome.final_loss) << '\n';
        } else if (eval->parsed()) {
            auto cfg = resolve(eval_opts);
            if (dump_ranked) cfg.eval.dump_ranked = true;
            if (tasks.empty()) tasks = cfg.eval.tasks;
            for (const auto& task : tasks) {
                const auto rows = rnne::cmd_eval(cfg, task);
                for (const auto& r : rows)
                    if (r.snapshot == "avg")
                        std::cout << task << ' ' << r.metric << ' ' << r.k_or_fraction << ' '
                                  << rnne::format_double(r.value) << '\n';
            }
        } else if (sweep->parsed()) {
            const auto cfg = resolve(sweep_opts);
            const auto rows = rnne::cmd_sweep(cfg);
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.failed ? 1 : 0;
            std::cout << "sweep wrote " << rows.size() << " rows (" << failed << " failed cells) to "
                      << (cfg.output_root() / "sweep.csv").string() << '\n';
        } else if (inspect->parsed()) {
            std::cout << rnne::inspect_checkpoint(checkpoint_path).dump(2) << '\n';
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}
