#include "rnne/dynamics.hpp"

#include "rnne/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

namespace rnne {

namespace {

std::size_t scaled(double rate, std::size_t base) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(base) + 1e-9));
}

/// Mutable graph keyed by stable integer ids; ids are never reused.
struct WorkGraph {
    std::vector<std::string> names;
    std::vector<bool> alive;
    std::map<std::pair<std::size_t, std::size_t>, double> edges;  // first < second
    std::size_t time_index = 0;

    std::vector<std::size_t> live_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < alive.size(); ++i)
            if (alive[i]) out.push_back(i);
        return out;
    }

    GraphSnapshot snapshot() const {
        GraphSnapshot g;
        g.time_index = time_index;
        const auto live = live_nodes();
        std::vector<Eigen::Index> pos(names.size(), -1);
        for (std::size_t p = 0; p < live.size(); ++p) {
            pos[live[p]] = static_cast<Eigen::Index>(p);
            g.node_ids.push_back(names[live[p]]);
        }
        const auto n = static_cast<Eigen::Index>(live.size());
        g.adjacency = Matrix::Zero(n, n);
        for (const auto& [key, w] : edges) {
            g.adjacency(pos[key.first], pos[key.second]) = w;
            g.adjacency(pos[key.second], pos[key.first]) = w;
        }
        return g;
    }
};

template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < count && i < items.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
        std::swap(items[i], items[pick(rng)]);
    }
}

}  // namespace

void PerturbationConfig::validate() const {
    if (series_length < 2) throw ValidationError("series_length must be at least 2");
    for (double r : {node_add_rate, node_remove_rate, edge_add_rate, edge_remove_rate})
        if (!(r >= 0.0 && r <= 0.5)) throw ValidationError("perturbation rates must lie in [0, 0.5]");
}

std::vector<GraphSnapshot> perturb_series(const GraphSnapshot& seed_graph, const PerturbationConfig& cfg) {
    cfg.validate();
    if (seed_graph.live_count() == 0) throw GenerationError("seed graph is empty");
    if (seed_graph.directed) throw ValidationError("perturb_series expects an undirected seed graph");

    WorkGraph work;
    std::unordered_set<std::string> used_names;
    std::vector<std::size_t> id_of(seed_graph.size(), 0);
    for (std::size_t i = 0; i < seed_graph.size(); ++i) {
        if (!seed_graph.is_live(i)) continue;
        id_of[i] = work.names.size();
        work.names.push_back(seed_graph.node_ids[i]);
        work.alive.push_back(true);
        used_names.insert(seed_graph.node_ids[i]);
    }
    for (const auto& e : seed_graph.edges()) work.edges[{id_of[e.u], id_of[e.v]}] = e.weight;

    const std::size_t base_nodes = seed_graph.live_count();
    const std::size_t base_edges = seed_graph.edge_count();
    const std::size_t edges_removed = scaled(cfg.edge_remove_rate, base_edges);
    const std::size_t edges_added = scaled(cfg.edge_add_rate, base_edges);
    const std::size_t nodes_removed = scaled(cfg.node_remove_rate, base_nodes);
    const std::size_t nodes_added = scaled(cfg.node_add_rate, base_nodes);

    std::mt19937_64 rng(cfg.seed);
    std::vector<GraphSnapshot> series;
    series.push_back(seed_graph);
    series.back().time_index = 0;

    for (std::size_t step = 1; step < cfg.series_length; ++step) {
        work.time_index = step;

        // Edge removal.
        std::vector<std::pair<std::size_t, std::size_t>> keys;
        for (const auto& [key, w] : work.edges) keys.push_back(key);
        const auto drop = std::min(edges_removed, keys.size());
        partial_shuffle(keys, drop, rng);
        for (std::size_t i = 0; i < drop; ++i) work.edges.erase(keys[i]);

        // Node removal.
        auto live = work.live_nodes();
        if (nodes_removed >= live.size())
            throw GenerationError("step " + std::to_string(step) + " would remove every node");
        partial_shuffle(live, nodes_removed, rng);
        for (std::size_t i = 0; i < nodes_removed; ++i) {
            const auto gone = live[i];
            work.alive[gone] = false;
            std::erase_if(work.edges, [gone](const auto& kv) { return kv.first.first == gone || kv.first.second == gone; });
        }

        // Edge addition among live non-adjacent pairs.
        live = work.live_nodes();
        const std::size_t max_pairs = live.size() * (live.size() - 1) / 2;
        std::size_t wanted = std::min(edges_added, max_pairs - std::min(max_pairs, work.edges.size()));
        std::uniform_int_distribution<std::size_t> pick_live(0, live.size() - 1);
        for (std::size_t attempts = 0; wanted > 0 && attempts < 100 * (edges_added + 1); ++attempts) {
            auto a = live[pick_live(rng)];
            auto b = live[pick_live(rng)];
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (work.edges.emplace(std::make_pair(a, b), 1.0).second) --wanted;
        }

        // Node addition by preferential attachment.
        for (std::size_t added = 0; added < nodes_added; ++added) {
            live = work.live_nodes();
            std::map<std::size_t, double> degree;
            for (auto v : live) degree[v] = 0.0;
            for (const auto& [key, w] : work.edges) {
                degree[key.first] += 1.0;
                degree[key.second] += 1.0;
            }
            const double avg_degree = live.empty() ? 0.0 : 2.0 * static_cast<double>(work.edges.size()) /
                                                               static_cast<double>(live.size());
            const auto m = std::min<std::size_t>(
                live.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(avg_degree))));

            std::string name = "new_" + std::to_string(step) + "_" + std::to_string(added);
            while (used_names.count(name)) name += "_";
            used_names.insert(name);
            const auto id = work.names.size();
            work.names.push_back(name);
            work.alive.push_back(true);

            std::set<std::size_t> targets;
            while (targets.size() < m) {
                std::vector<std::size_t> candidates;
                std::vector<double> weights;
                for (auto v : live) {
                    if (targets.count(v)) continue;
                    candidates.push_back(v);
                    weights.push_back(degree[v]);
                }
                const bool all_zero = std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; });
                if (all_zero) std::fill(weights.begin(), weights.end(), 1.0);
                std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
                targets.insert(candidates[pick(rng)]);
            }
            for (auto t : targets) work.edges[{t, id}] = 1.0;
        }

        if (work.live_nodes().empty()) throw GenerationError("step " + std::to_string(step) + " left the graph empty");
        series.push_back(work.snapshot());
    }
    return series;
}

LabelledGraph synth_community_graph(std::size_t communities, std::size_t nodes_per, double p_in, double p_out,
                                    std::uint64_t seed) {
    if (communities == 0 || nodes_per == 0) throw ValidationError("need at least one community and one node each");
    if (!(p_out >= 0.0 && p_in > p_out && p_in <= 1.0))
        throw ValidationError("planted partition needs 0 <= p_out < p_in <= 1");

    const std::size_t n = communities * nodes_per;
    LabelledGraph out;
    out.graph.node_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.graph.node_ids.push_back("n" + std::to_string(i));
        out.labels.emplace_back(out.graph.node_ids.back(), "c" + std::to_string(i / nodes_per));
    }
    const auto dim = static_cast<Eigen::Index>(n);
    out.graph.adjacency = Matrix::Zero(dim, dim);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = i / nodes_per == j / nodes_per ? p_in : p_out;
            if (coin(rng) < p) {
                out.graph.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
                out.graph.adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
            }
        }
    }
    return out;
}

}  // namespace rnne
