#pragma once

#include "rnne/graph.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rnne {

enum class NodeState { normal, virtual_node, dangerous };

std::string_view to_string(NodeState s);
NodeState node_state_from_string(std::string_view s);

/// A snapshot lifted to N slots, with per-slot state and its feature matrix.
struct PaddedSnapshot {
    GraphSnapshot base;             // N x N, vacant slots have empty ids
    std::vector<NodeState> states;  // one per slot
    Matrix features;                // N x N, entries in [0, 1]

    std::size_t time_index() const noexcept { return base.time_index; }
    std::size_t size() const noexcept { return base.size(); }
    const Matrix& adjacency() const noexcept { return base.adjacency; }
    std::size_t count(NodeState s) const;

    /// Set when drift screening was skipped (e.g. too few comparable slots).
    std::optional<std::string> screening_note;
};

/// Divides every row by its largest entry; all-zero rows stay zero.
Matrix normalized(const Matrix& a);

/// Multi-step transition features: normalized(U/2 + V/3 + W/6) with U, V, W
/// the row-normalized first, second and third powers of the adjacency.
Matrix feature_matrix(const Matrix& adjacency);

/// D_i = sum_j (M_ij - M'_ij)^2.
Vector row_diff_scores(const Matrix& current, const Matrix& previous);

struct GrubbsResult {
    std::vector<std::size_t> outliers;  // in detection order
    std::optional<std::string> diagnostic;
};

/// Iterative one-sided Grubbs test for high outliers. Entries with
/// `exclude[i]` set never take part in the statistic and are never flagged.
GrubbsResult grubbs_outliers(const Vector& scores, const std::vector<bool>& exclude, double alpha);

/// Pads to N slots and computes features. Vacant slots become virtual, every
/// live slot normal. Used for the first snapshot of a run.
PaddedSnapshot pad_snapshot(const GraphSnapshot& g, std::size_t capacity);

/// Pads `next` and screens it against `previous`: slots virtual in either
/// snapshot are skipped, Grubbs outliers of the row differences become
/// dangerous and the rest of the live slots normal.
PaddedSnapshot mark_states(const GraphSnapshot& next, const PaddedSnapshot& previous, std::size_t capacity,
                           double grubbs_alpha);

struct WindowEntry {
    PaddedSnapshot snapshot;
    Matrix hidden;  // N x d, last trained hidden states (zero until trained)
};

/// Fixed-length queue of the most recent padded snapshots plus the hidden
/// states of the snapshot that preceded the oldest entry.
class TrainingWindow {
public:
    TrainingWindow(std::size_t window_size, std::size_t capacity, std::size_t embedding_dim,
                   double grubbs_alpha = 0.05);

    /// Screens `g` against the newest entry (if any) and appends it, evicting
    /// the oldest entry when full. `g` must carry the next time index.
    const PaddedSnapshot& push(const GraphSnapshot& g);

    std::size_t window_size() const noexcept { return window_size_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t embedding_dim() const noexcept { return embedding_dim_; }
    double grubbs_alpha() const noexcept { return grubbs_alpha_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    bool full() const noexcept { return entries_.size() == window_size_; }

    const WindowEntry& operator[](std::size_t k) const { return entries_.at(k); }
    const std::deque<WindowEntry>& entries() const noexcept { return entries_; }
    const Matrix& carry_hidden() const noexcept { return carry_hidden_; }

    /// Stores the trained hidden states of entry k (N x d).
    void set_hidden(std::size_t k, Matrix hidden);

    /// Slots that are normal in every entry of the window.
    std::vector<std::size_t> eligible_slots() const;

private:
    std::size_t window_size_;
    std::size_t capacity_;
    std::size_t embedding_dim_;
    double grubbs_alpha_;
    std::deque<WindowEntry> entries_;
    Matrix carry_hidden_;
};

}  // namespace rnne
