#include "rnne/pipeline.hpp"

#include "rnne/error.hpp"
#include "rnne/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace rnne {

namespace fs = std::filesystem;

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
    std::ofstream out(path, std::ios::out | mode);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::string snapshot_file(std::size_t k, const char* ext) { return "snapshot_" + std::to_string(k) + ext; }

std::size_t distinct_ids(const std::vector<GraphSnapshot>& series) {
    std::set<std::string> ids;
    for (const auto& g : series)
        for (const auto& id : g.node_ids)
            if (!id.empty()) ids.insert(id);
    return ids.size();
}

/// Embedding rows for the live nodes of `g`, looked up by id.
Matrix rows_for(const GraphSnapshot& g, const std::vector<std::string>& ids, const Matrix& y) {
    std::unordered_map<std::string, Eigen::Index> row_of;
    for (std::size_t r = 0; r < ids.size(); ++r) row_of.emplace(ids[r], static_cast<Eigen::Index>(r));
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(g.size()), y.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.is_live(i)) continue;
        auto it = row_of.find(g.node_ids[i]);
        if (it == row_of.end())
            throw ValidationError("no embedding for node '" + g.node_ids[i] + "' of snapshot " +
                                  std::to_string(g.time_index));
        out.row(static_cast<Eigen::Index>(i)) = y.row(it->second);
    }
    return out;
}

std::vector<bool> live_mask(const GraphSnapshot& g) {
    std::vector<bool> live(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) live[i] = g.is_live(i);
    return live;
}

std::pair<std::vector<std::string>, Matrix> live_rows(const SnapshotEmbedding& emb) {
    std::vector<std::string> ids;
    std::vector<Eigen::Index> rows;
    for (std::size_t s = 0; s < emb.node_ids.size(); ++s) {
        if (!emb.valid(s)) continue;
        ids.push_back(emb.node_ids[s]);
        rows.push_back(static_cast<Eigen::Index>(s));
    }
    Matrix y(static_cast<Eigen::Index>(rows.size()), emb.y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) y.row(static_cast<Eigen::Index>(r)) = emb.y.row(rows[r]);
    return {std::move(ids), std::move(y)};
}

/// Per-k averages over the snapshots where k was valid.
void append_averages(std::vector<MetricRow>& rows, const std::string& task) {
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& r : rows) {
        if (r.task != task || r.snapshot == "avg") continue;
        // Keys whose k varies per snapshot are averaged under an empty k.
        const bool per_snapshot_k = r.metric != "precision@k" && r.task != "classify";
        const auto key = std::make_pair(per_snapshot_k ? std::string() : r.k_or_fraction, r.metric);
        auto [it, inserted] = acc.try_emplace(key, 0.0, 0);
        if (inserted) order.push_back(key);
        it->second.first += r.value;
        ++it->second.second;
    }
    for (const auto& key : order) {
        const auto& [sum, count] = acc.at(key);
        rows.push_back({task, "avg", key.first, key.second, sum / static_cast<double>(count)});
    }
}

std::vector<MetricRow> eval_reconstruct(const RunConfig& cfg, const std::vector<GraphSnapshot>& series) {
    const fs::path emb_dir = cfg.output_root() / "embeddings";
    std::vector<MetricRow> rows;
    for (const auto& g : series) {
        const auto [ids, y] = read_embedding_file(emb_dir / snapshot_file(g.time_index, ".emb"));
        const auto ranked = rank_pairs(rows_for(g, ids, y), live_mask(g));
        const auto truth = edge_pairs(g);
        const auto snap = std::to_string(g.time_index);
        for (auto k : cfg.eval.ks)
            if (k <= ranked.size())
                rows.push_back({"reconstruct", snap, std::to_string(k), "precision@k", precision_at_k(ranked, truth, k)});
        if (!truth.empty() && truth.size() <= ranked.size())
            rows.push_back({"reconstruct", snap, std::to_string(truth.size()), "precision@|E|",
                            precision_at_k(ranked, truth, truth.size())});
    }
    append_averages(rows, "reconstruct");
    return rows;
}

std::vector<MetricRow> eval_linkpred(const RunConfig& cfg, const std::vector<GraphSnapshot>& series) {
    const fs::path dir = cfg.output_root() / "linkpred";
    std::vector<GraphSnapshot> observed;
    std::vector<PairSet> hidden;
    for (const auto& g : series) {
        auto split = hide_edges(g, cfg.eval.hide_fraction, derive_seed(cfg.seeds.eval, g.time_index));
        PairSet h;
        for (const auto& e : split.hidden) h.insert(make_pair_key(e.u, e.v));
        hidden.push_back(std::move(h));
        observed.push_back(std::move(split.observed));
    }

    const auto outcome = train_series(observed, cfg, dir / "train");

    std::vector<MetricRow> rows;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto& g = series[t];
        const auto [ids, y_live] = live_rows(outcome.embeddings[t]);
        const Matrix y = rows_for(g, ids, y_live);
        const auto ranked = rank_pairs(y, live_mask(g), edge_pairs(observed[t]));
        const auto snap = std::to_string(g.time_index);
        for (auto k : cfg.eval.ks)
            if (k <= ranked.size())
                rows.push_back({"linkpred", snap, std::to_string(k), "precision@k", precision_at_k(ranked, hidden[t], k)});
        const std::size_t half = std::max<std::size_t>(1, hidden[t].size() / 2);
        if (half <= ranked.size())
            rows.push_back({"linkpred", snap, std::to_string(half), "precision@half_hidden",
                            precision_at_k(ranked, hidden[t], half)});
        if (ranked.size() > 0)
            rows.push_back({"linkpred", snap, "", "density_baseline",
                            static_cast<double>(hidden[t].size()) / static_cast<double>(ranked.size())});

        if (cfg.eval.dump_ranked) {
            auto out = open_out(dir / ("ranked_snapshot_" + snap + ".csv"));
            out << "i,j,distance,is_true_edge\n";
            for (const auto& p : ranked.pairs)
                out << g.node_ids[p.i] << ',' << g.node_ids[p.j] << ',' << format_double(p.distance) << ','
                    << (hidden[t].count({p.i, p.j}) ? 1 : 0) << '\n';
        }
    }
    append_averages(rows, "linkpred");
    return rows;
}

std::vector<MetricRow> eval_classify(const RunConfig& cfg, const std::vector<GraphSnapshot>& series) {
    if (cfg.paths.labels.empty()) throw ValidationError("classify needs paths.labels");
    const auto labels = load_labels(cfg.paths.labels);
    std::set<std::string> label_names;
    for (const auto& [id, label] : labels) label_names.insert(label);
    std::map<std::string, int> label_index;
    for (const auto& name : label_names) label_index.emplace(name, static_cast<int>(label_index.size()));

    const fs::path emb_dir = cfg.output_root() / "embeddings";
    std::vector<MetricRow> rows;
    for (const auto& g : series) {
        const auto [ids, y] = read_embedding_file(emb_dir / snapshot_file(g.time_index, ".emb"));
        LabelledEmbedding data;
        std::vector<Eigen::Index> keep;
        for (std::size_t r = 0; r < ids.size(); ++r) {
            auto it = labels.find(ids[r]);
            if (it == labels.end()) continue;
            keep.push_back(static_cast<Eigen::Index>(r));
            data.labels.push_back(label_index.at(it->second));
        }
        data.y.resize(static_cast<Eigen::Index>(keep.size()), y.cols());
        for (std::size_t r = 0; r < keep.size(); ++r) data.y.row(static_cast<Eigen::Index>(r)) = y.row(keep[r]);

        const auto table = classification_sweep({data}, cfg.eval.fractions, cfg.eval.repeats,
                                                derive_seed(cfg.seeds.eval, g.time_index), cfg.eval.l2_strength);
        const auto snap = std::to_string(g.time_index);
        for (const auto& row : table) {
            rows.push_back({"classify", snap, format_double(row.fraction), "micro_f1", row.micro_f1});
            rows.push_back({"classify", snap, format_double(row.fraction), "macro_f1", row.macro_f1});
        }
    }
    append_averages(rows, "classify");
    return rows;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double temporal_variance(const EmbeddingSet& window_embeddings, const std::vector<std::size_t>& slots) {
    if (window_embeddings.size() < 2 || slots.empty()) return 0.0;
    const double steps = static_cast<double>(window_embeddings.size());
    double total = 0.0;
    for (auto s : slots) {
        const auto row = static_cast<Eigen::Index>(s);
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(window_embeddings.front().y.cols());
        for (const auto& e : window_embeddings) mean += e.y.row(row);
        mean /= steps;
        double var = 0.0;
        for (const auto& e : window_embeddings) var += (e.y.row(row) - mean).squaredNorm();
        total += var / steps;
    }
    return total / static_cast<double>(slots.size());
}

void write_embedding_file(const fs::path& path, const SnapshotEmbedding& emb, bool hidden) {
    const Matrix& m = hidden ? emb.hidden : emb.y;
    auto out = open_out(path);
    out << "node_id";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << " dim_" << c;
    out << '\n';
    for (std::size_t s = 0; s < emb.node_ids.size(); ++s) {
        if (!emb.valid(s)) continue;
        out << emb.node_ids[s];
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << format_double(m(static_cast<Eigen::Index>(s), c));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::pair<std::vector<std::string>, Matrix> read_embedding_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    std::istringstream header(line);
    std::string tok;
    std::size_t dims = 0;
    header >> tok;
    if (tok != "node_id") throw ParseError(1, path.string() + ": header must start with node_id");
    while (header >> tok) ++dims;

    std::vector<std::string> ids;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string id;
        if (!(ss >> id)) continue;
        ids.push_back(id);
        for (std::size_t c = 0; c < dims; ++c) {
            double v = 0.0;
            if (!(ss >> v)) throw ParseError(line_no, path.string() + ": expected " + std::to_string(dims) + " values");
            values.push_back(v);
        }
    }
    Matrix y(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(dims));
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < dims; ++c)
            y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * dims + c];
    return {std::move(ids), std::move(y)};
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
    auto out = open_out(path);
    out << "task,snapshot,k_or_fraction,metric,value\n";
    for (const auto& r : rows)
        out << r.task << ',' << r.snapshot << ',' << r.k_or_fraction << ',' << r.metric << ','
            << format_double(r.value) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

TrainOutcome train_series(const std::vector<GraphSnapshot>& series, const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    if (series.empty()) throw ValidationError("no snapshots to train on");

    TrainOutcome outcome;
    outcome.capacity = cfg.capacity_N ? cfg.capacity_N : distinct_ids(series);
    const auto aligned = align_series(series, outcome.capacity);

    fs::create_directories(out_dir / "embeddings");
    fs::create_directories(out_dir / "hidden");
    fs::create_directories(out_dir / "states");
    auto log = open_out(out_dir / "loss_log.csv");
    log << "iteration,total,L1,L2,Ltime\n";

    TrainingWindow window(cfg.window_size, outcome.capacity, cfg.model.embedding_dim, cfg.grubbs_alpha);
    std::optional<ModelParams> params;
    EmbeddingSet last_window;
    for (std::size_t t = 0; t < aligned.snapshots.size(); ++t) {
        const auto& padded = window.push(aligned.snapshots[t]);
        if (padded.screening_note)
            outcome.diagnostics.push_back("snapshot " + std::to_string(padded.time_index()) + ": " +
                                          *padded.screening_note);

        auto result = train_window(window, params, cfg.model, derive_seed(cfg.seeds.train, t));
        for (auto& d : result.diagnostics)
            outcome.diagnostics.push_back("snapshot " + std::to_string(padded.time_index()) + ": " + d);
        for (const auto& rec : result.log) {
            log << outcome.total_iterations + rec.iteration << ',' << format_double(rec.total) << ','
                << format_double(rec.first_order) << ',' << format_double(rec.reconstruction) << ','
                << format_double(rec.stability) << '\n';
        }
        log.flush();
        outcome.total_iterations += result.iterations;
        if (!result.log.empty()) outcome.final_loss = result.log.back().total;

        store_hidden(window, result.embeddings);
        const auto& newest = result.embeddings.back();
        const auto k = newest.time_index;
        write_embedding_file(out_dir / "embeddings" / snapshot_file(k, ".emb"), newest);
        write_embedding_file(out_dir / "hidden" / snapshot_file(k, ".hid"), newest, true);
        auto states = open_out(out_dir / "states" / snapshot_file(k, ".states"));
        states << "slot node_id state\n";
        for (std::size_t s = 0; s < newest.states.size(); ++s)
            states << s << ' ' << (newest.node_ids[s].empty() ? "-" : newest.node_ids[s]) << ' '
                   << to_string(newest.states[s]) << '\n';

        outcome.embeddings.push_back(newest);
        params = std::move(result.params);
        last_window = std::move(result.embeddings);
    }
    if (!log) throw IoError("write failed for loss log");

    outcome.params = *params;
    outcome.temporal_variance = temporal_variance(last_window, window.eligible_slots());
    save_checkpoint(out_dir / "checkpoint.json", {outcome.params, cfg.model, cfg.seeds.train});

    nlohmann::json summary = {{"snapshots", series.size()},
                              {"capacity_N", outcome.capacity},
                              {"iterations", outcome.total_iterations},
                              {"final_loss", outcome.final_loss},
                              {"temporal_variance", outcome.temporal_variance},
                              {"diagnostics", outcome.diagnostics}};
    open_out(out_dir / "train_summary.json") << summary.dump(1) << '\n';
    return outcome;
}

TrainOutcome cmd_train(const RunConfig& cfg) {
    if (cfg.paths.snapshots.empty()) throw ValidationError("paths.snapshots is not set");
    const auto series = load_series(cfg.paths.snapshots, cfg.directed);
    return train_series(series, cfg, cfg.output_root());
}

std::vector<MetricRow> cmd_eval(const RunConfig& cfg, const std::string& task) {
    cfg.validate();
    if (cfg.paths.snapshots.empty()) throw ValidationError("paths.snapshots is not set");
    const auto series = load_series(cfg.paths.snapshots, cfg.directed);

    std::vector<MetricRow> rows;
    if (task == "reconstruct")
        rows = eval_reconstruct(cfg, series);
    else if (task == "linkpred")
        rows = eval_linkpred(cfg, series);
    else if (task == "classify")
        rows = eval_classify(cfg, series);
    else
        throw ValidationError("unknown eval task '" + task + "'");

    fs::create_directories(cfg.output_root());
    write_metrics_csv(cfg.output_root() / ("metrics_" + task + ".csv"), rows);
    return rows;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.sweep.alpha.empty() || cfg.sweep.beta.empty() || cfg.sweep.gamma.empty())
        throw ValidationError("sweep grids must be non-empty");

    const fs::path root = cfg.output_root();
    fs::create_directories(root);
    auto csv = open_out(root / "sweep.csv");
    csv << "alpha,beta,gamma,task,k_or_fraction,metric,value\n";

    std::vector<SweepRow> results;
    std::size_t cell = 0;
    for (double a : cfg.sweep.alpha) {
        for (double b : cfg.sweep.beta) {
            for (double g : cfg.sweep.gamma) {
                RunConfig cell_cfg = cfg;
                cell_cfg.model.loss_alpha = a;
                cell_cfg.model.beta = b;
                cell_cfg.model.gamma = g;
                if (cfg.sweep.max_iters > 0) cell_cfg.model.max_iters = cfg.sweep.max_iters;
                cell_cfg.paths.output = (root / ("cell_" + std::to_string(cell++))).string();

                std::vector<SweepRow> cell_rows;
                try {
                    const auto outcome = cmd_train(cell_cfg);
                    cell_rows.push_back({a, b, g, {"train", "avg", "", "temporal_variance", outcome.temporal_variance}});
                    for (const auto& task : cfg.eval.tasks)
                        for (auto& row : cmd_eval(cell_cfg, task))
                            if (row.snapshot == "avg") cell_rows.push_back({a, b, g, row});
                } catch (const Error& e) {
                    cell_rows.clear();
                    SweepRow failed{a, b, g, {"NA", "avg", "", "NA", 0.0}, true};
                    failed.metric.k_or_fraction = e.what();
                    cell_rows.push_back(failed);
                }
                for (const auto& r : cell_rows) {
                    csv << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.gamma)
                        << ',';
                    if (r.failed)
                        csv << "NA,,NA,NA\n";
                    else
                        csv << r.metric.task << ',' << r.metric.k_or_fraction << ',' << r.metric.metric << ','
                            << format_double(r.metric.value) << '\n';
                }
                csv.flush();
                results.insert(results.end(), cell_rows.begin(), cell_rows.end());
            }
        }
    }
    return results;
}

void cmd_gen(const RunConfig& cfg) {
    if (cfg.paths.snapshots.empty()) throw ValidationError("paths.snapshots is not set");
    const auto& gen = cfg.gen;
    auto seed_graph = synth_community_graph(gen.communities, gen.nodes_per, gen.p_in, gen.p_out, cfg.seeds.gen);
    PerturbationConfig pert = gen.perturbation;
    pert.seed = derive_seed(cfg.seeds.gen, 1);
    const auto series = perturb_series(seed_graph.graph, pert);
    write_series(cfg.paths.snapshots, series);
    const fs::path labels = cfg.paths.labels.empty() ? fs::path(cfg.paths.snapshots) / "labels.txt"
                                                     : fs::path(cfg.paths.labels);
    write_labels(labels, seed_graph.labels);
}

nlohmann::json inspect_checkpoint(const fs::path& path) {
    const auto ckpt = load_checkpoint(path);
    return {{"format", "rnne-checkpoint"},
            {"version", 1},
            {"layer_sizes", ckpt.params.layer_sizes},
            {"capacity_N", ckpt.params.capacity()},
            {"embedding_dim", ckpt.params.embedding_dim()},
            {"parameter_count", ckpt.params.parameter_count()},
            {"hyperparams", to_json(ckpt.hyper)},
            {"seed", ckpt.seed}};
}

}  // namespace rnne
