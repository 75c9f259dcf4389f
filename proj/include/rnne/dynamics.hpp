#pragma once

#include "rnne/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rnne {

/// Per-step change rates, as fractions of the seed graph's node and edge counts.
struct PerturbationConfig {
    std::size_t series_length = 14;
    double node_add_rate = 0.0;
    double node_remove_rate = 0.0;
    double edge_add_rate = 0.0;
    double edge_remove_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Snapshot 0 is the seed graph. Every later step removes uniformly chosen
/// edges and nodes, adds uniformly chosen non-edges, and attaches new nodes
/// by preferential attachment with m = round(average degree).
std::vector<GraphSnapshot> perturb_series(const GraphSnapshot& seed_graph, const PerturbationConfig& cfg);

struct LabelledGraph {
    GraphSnapshot graph;
    std::vector<std::pair<std::string, std::string>> labels;  // node id -> community
};

/// Planted-partition graph: nodes `n<i>`, communities `c<k>`, edges inside a
/// community with probability p_in and across with p_out.
LabelledGraph synth_community_graph(std::size_t communities, std::size_t nodes_per, double p_in, double p_out,
                                    std::uint64_t seed);

}  // namespace rnne
