#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rnne {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An unordered (or, for directed graphs, ordered) weighted edge between two
/// node positions of a snapshot.
struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 0.0;
};

/// One timestamped state of the network.
///
/// Nodes are addressed by position; `node_ids[i]` is the external identifier
/// of row/column i of `adjacency`. After alignment an empty id marks a vacant
/// slot (no node lives there at this time).
struct GraphSnapshot {
    std::size_t time_index = 0;
    std::vector<std::string> node_ids;
    Matrix adjacency;
    bool directed = false;

    std::size_t size() const noexcept { return node_ids.size(); }
    bool is_live(std::size_t i) const { return !node_ids[i].empty(); }
    std::size_t live_count() const;

    std::optional<std::size_t> index_of(const std::string& id) const;

    /// Non-zero entries of row i as (column, weight) pairs.
    std::vector<std::pair<std::size_t, double>> neighbors(std::size_t i) const;

    /// Edge list; undirected graphs report each edge once with u < v.
    std::vector<Edge> edges() const;
    std::size_t edge_count() const;

    /// Throws ValidationError when any structural invariant is broken.
    void validate() const;
};

/// Parses `u v [w]` lines; `#` starts a comment. Duplicate lines accumulate.
GraphSnapshot load_edge_list(std::istream& in, bool directed = false, std::size_t time_index = 0);
GraphSnapshot load_edge_list_file(const std::filesystem::path& path, bool directed = false,
                                  std::size_t time_index = 0);

/// Writes one line per edge with full double precision. Isolated nodes are
/// not representable in the format and are dropped.
void write_edge_list(std::ostream& out, const GraphSnapshot& g);
void write_edge_list_file(const std::filesystem::path& path, const GraphSnapshot& g);

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t k);

/// Loads `snapshot_0.edges`, `snapshot_1.edges`, ... from a directory. A gap
/// in the numbering is a SequencingError.
std::vector<GraphSnapshot> load_series(const std::filesystem::path& dir, bool directed = false);
void write_series(const std::filesystem::path& dir, const std::vector<GraphSnapshot>& series);

/// Reads `node_id label` lines.
std::unordered_map<std::string, std::string> load_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& labels);

/// Global slot assignment shared by every snapshot of a series.
class NodeIndexMap {
public:
    explicit NodeIndexMap(std::size_t capacity = 0);

    std::size_t capacity() const noexcept { return capacity_; }
    std::optional<std::size_t> slot_of(const std::string& id) const;
    bool contains(const std::string& id) const { return slots_.count(id) != 0; }
    std::size_t occupied() const noexcept { return slots_.size(); }
    const std::vector<std::size_t>& free_slots() const noexcept { return free_; }

    /// Takes the lowest free slot. Throws CapacityError when none is left.
    std::size_t assign(const std::string& id);
    void release(const std::string& id);

private:
    std::size_t capacity_;
    std::unordered_map<std::string, std::size_t> slots_;
    std::vector<std::size_t> free_;  // kept sorted ascending
};

struct AlignedSeries {
    std::vector<GraphSnapshot> snapshots;  // each N x N, node_ids indexed by slot
    NodeIndexMap index;                    // state after the last snapshot
};

/// Lifts every snapshot to N slots so the same id keeps the same row across
/// time. Ids that never reappear release their slot for later arrivals.
AlignedSeries align_series(const std::vector<GraphSnapshot>& snapshots, std::size_t capacity);

}  // namespace rnne
