#pragma once

#include "rnne/dynamics.hpp"
#include "rnne/evaluation.hpp"
#include "rnne/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rnne {

/// Everything a run needs. Every field has a default and a config key; the
/// JSON layout mirrors the struct nesting.
struct RunConfig {
    struct Paths {
        std::string snapshots;  // directory of snapshot_<k>.edges
        std::string labels;     // optional `node_id label` file
        std::string output;     // empty: $RNNE_OUTPUT_ROOT, else ./rnne_out
    } paths;

    std::size_t capacity_N = 0;  // 0: number of distinct node ids in the series
    std::size_t window_size = 5;
    double grubbs_alpha = 0.05;
    bool directed = false;
    Hyperparams model;

    struct Seeds {
        std::uint64_t train = 1;
        std::uint64_t eval = 2;
        std::uint64_t gen = 3;
    } seeds;

    struct Eval {
        std::vector<std::string> tasks{"reconstruct"};
        std::vector<std::size_t> ks{10, 50, 100, 200, 500, 1000};
        double hide_fraction = 0.15;
        std::vector<double> fractions = default_train_fractions();
        std::size_t repeats = 5;
        double l2_strength = 1.0;
        bool dump_ranked = false;
    } eval;

    struct Sweep {
        std::vector<double> alpha{1e-4, 1e-2, 1.0};
        std::vector<double> beta{5.0};
        std::vector<double> gamma{5.0};
        std::size_t max_iters = 0;  // 0: model.max_iters
    } sweep;

    struct Gen {
        std::size_t communities = 4;
        std::size_t nodes_per = 25;
        double p_in = 0.3;
        double p_out = 0.02;
        PerturbationConfig perturbation;
    } gen;

    std::filesystem::path output_root() const;
    void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Applies `a.b.c=value` to a config tree; value is parsed as JSON when
/// possible, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// One row of the metrics CSV. `snapshot` is an index or "avg".
struct MetricRow {
    std::string task;
    std::string snapshot;
    std::string k_or_fraction;
    std::string metric;
    double value = 0.0;
};

struct TrainOutcome {
    std::vector<SnapshotEmbedding> embeddings;  // one per snapshot, from the window where it was newest
    ModelParams params;
    std::size_t capacity = 0;
    std::size_t total_iterations = 0;
    double final_loss = 0.0;
    double temporal_variance = 0.0;  // mean over eligible nodes of the final window
    std::vector<std::string> diagnostics;
};

/// Slides the training window over an in-memory series and writes
/// embeddings, hidden states, state flags, the loss log and a checkpoint
/// under `out_dir`.
TrainOutcome train_series(const std::vector<GraphSnapshot>& series, const RunConfig& cfg,
                          const std::filesystem::path& out_dir);

/// Mean over nodes of sum_k ||y_k - mean_k y||^2 / n for the given slots.
double temporal_variance(const EmbeddingSet& window_embeddings, const std::vector<std::size_t>& slots);

/// Writes the `node_id dim_0 ... dim_{d-1}` file for the non-virtual slots.
void write_embedding_file(const std::filesystem::path& path, const SnapshotEmbedding& emb, bool hidden = false);
/// Reads an embedding file into (ids, rows).
std::pair<std::vector<std::string>, Matrix> read_embedding_file(const std::filesystem::path& path);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

std::string format_double(double v);

TrainOutcome cmd_train(const RunConfig& cfg);
std::vector<MetricRow> cmd_eval(const RunConfig& cfg, const std::string& task);
/// Writes `sweep.csv`; returns its rows keyed by alpha, beta, gamma.
struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    MetricRow metric;
    bool failed = false;
};
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg);
/// Writes a planted-partition series and labels.txt into paths.snapshots.
void cmd_gen(const RunConfig& cfg);
nlohmann::json inspect_checkpoint(const std::filesystem::path& path);

}  // namespace rnne
