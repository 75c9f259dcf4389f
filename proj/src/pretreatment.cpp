#include "rnne/pretreatment.hpp"

#include "rnne/error.hpp"
#include "rnne/stats.hpp"

#include <algorithm>
#include <cmath>

namespace rnne {

std::string_view to_string(NodeState s) {
    switch (s) {
        case NodeState::normal: return "normal";
        case NodeState::virtual_node: return "virtual";
        case NodeState::dangerous: return "dangerous";
    }
    return "unknown";
}

NodeState node_state_from_string(std::string_view s) {
    if (s == "normal") return NodeState::normal;
    if (s == "virtual") return NodeState::virtual_node;
    if (s == "dangerous") return NodeState::dangerous;
    throw ValidationError("unknown node state '" + std::string(s) + "'");
}

std::size_t PaddedSnapshot::count(NodeState s) const {
    return static_cast<std::size_t>(std::count(states.begin(), states.end(), s));
}

Matrix normalized(const Matrix& a) {
    if ((a.array() < 0.0).any()) throw ValidationError("normalized: matrix has negative entries");
    Matrix out = a;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        if (out.cols() == 0) break;
        const double row_max = out.row(i).maxCoeff();
        if (row_max > 0.0) out.row(i) /= row_max;
    }
    return out;
}

Matrix feature_matrix(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols()) throw ValidationError("feature_matrix: adjacency must be square");
    const Matrix m2 = adjacency * adjacency;
    const Matrix m3 = m2 * adjacency;
    return normalized(normalized(adjacency) / 2.0 + normalized(m2) / 3.0 + normalized(m3) / 6.0);
}

Vector row_diff_scores(const Matrix& current, const Matrix& previous) {
    if (current.rows() != previous.rows() || current.cols() != previous.cols())
        throw ValidationError("row_diff_scores: dimension mismatch");
    return (current - previous).array().square().rowwise().sum();
}

GrubbsResult grubbs_outliers(const Vector& scores, const std::vector<bool>& exclude, double alpha) {
    if (static_cast<Eigen::Index>(exclude.size()) != scores.size())
        throw ValidationError("grubbs_outliers: mask length does not match scores");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("grubbs_outliers: alpha must lie in (0, 1)");

    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < exclude.size(); ++i)
        if (!exclude[i]) remaining.push_back(i);

    GrubbsResult result;
    if (remaining.size() < 3) {
        result.diagnostic = "Grubbs test skipped: " + std::to_string(remaining.size()) +
                            " comparable entries, at least 3 required";
        return result;
    }

    while (remaining.size() >= 3) {
        const double m = static_cast<double>(remaining.size());
        double sum = 0.0;
        double lo = scores[static_cast<Eigen::Index>(remaining.front())];
        double hi = lo;
        std::size_t arg_max = 0;
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            const double v = scores[static_cast<Eigen::Index>(remaining[r])];
            sum += v;
            lo = std::min(lo, v);
            if (v > hi) {
                hi = v;
                arg_max = r;
            }
        }
        if (hi == lo) break;  // zero variance

        const double mean = sum / m;
        double ss = 0.0;
        for (auto i : remaining) ss += std::pow(scores[static_cast<Eigen::Index>(i)] - mean, 2);
        const double sd = std::sqrt(ss / (m - 1.0));
        if (!(sd > 0.0)) break;

        const double g = (hi - mean) / sd;
        if (!(g > stats::grubbs_critical(remaining.size(), alpha))) break;

        result.outliers.push_back(remaining[arg_max]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(arg_max));
    }
    return result;
}

namespace {

GraphSnapshot lift(const GraphSnapshot& g, std::size_t capacity) {
    if (g.size() == capacity) return g;
    if (g.size() > capacity)
        throw CapacityError("snapshot " + std::to_string(g.time_index) + " has " + std::to_string(g.size()) +
                            " slots, capacity is " + std::to_string(capacity));
    GraphSnapshot out;
    out.time_index = g.time_index;
    out.directed = g.directed;
    out.node_ids = g.node_ids;
    out.node_ids.resize(capacity);
    const auto n = static_cast<Eigen::Index>(capacity);
    out.adjacency = Matrix::Zero(n, n);
    const auto m = static_cast<Eigen::Index>(g.size());
    out.adjacency.topLeftCorner(m, m) = g.adjacency;
    return out;
}

}  // namespace

PaddedSnapshot pad_snapshot(const GraphSnapshot& g, std::size_t capacity) {
    PaddedSnapshot out;
    out.base = lift(g, capacity);
    out.states.resize(capacity);
    for (std::size_t i = 0; i < capacity; ++i)
        out.states[i] = out.base.is_live(i) ? NodeState::normal : NodeState::virtual_node;
    out.features = feature_matrix(out.base.adjacency);
    return out;
}

PaddedSnapshot mark_states(const GraphSnapshot& next, const PaddedSnapshot& previous, std::size_t capacity,
                           double grubbs_alpha) {
    if (previous.size() != capacity) throw ValidationError("mark_states: previous snapshot is not padded to N");
    PaddedSnapshot out = pad_snapshot(next, capacity);

    std::vector<bool> exclude(capacity);
    for (std::size_t i = 0; i < capacity; ++i)
        exclude[i] = out.states[i] == NodeState::virtual_node || previous.states[i] == NodeState::virtual_node;

    const Vector scores = row_diff_scores(out.base.adjacency, previous.base.adjacency);
    auto screened = grubbs_outliers(scores, exclude, grubbs_alpha);
    for (auto i : screened.outliers) out.states[i] = NodeState::dangerous;
    out.screening_note = std::move(screened.diagnostic);
    return out;
}

TrainingWindow::TrainingWindow(std::size_t window_size, std::size_t capacity, std::size_t embedding_dim,
                               double grubbs_alpha)
    : window_size_(window_size),
      capacity_(capacity),
      embedding_dim_(embedding_dim),
      grubbs_alpha_(grubbs_alpha),
      carry_hidden_(Matrix::Zero(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(embedding_dim))) {
    if (window_size < 1) throw ValidationError("window size must be at least 1");
    if (capacity == 0 || embedding_dim == 0) throw ValidationError("capacity and embedding dim must be positive");
    if (!(grubbs_alpha > 0.0 && grubbs_alpha < 1.0)) throw ValidationError("grubbs_alpha must lie in (0, 1)");
}

const PaddedSnapshot& TrainingWindow::push(const GraphSnapshot& g) {
    if (!entries_.empty()) {
        const auto last = entries_.back().snapshot.time_index();
        if (g.time_index != last + 1)
            throw SequencingError("expected snapshot " + std::to_string(last + 1) + ", got " +
                                  std::to_string(g.time_index));
    }

    PaddedSnapshot padded = entries_.empty() ? pad_snapshot(g, capacity_)
                                             : mark_states(g, entries_.back().snapshot, capacity_, grubbs_alpha_);
    if (full()) {
        carry_hidden_ = std::move(entries_.front().hidden);
        entries_.pop_front();
    }
    const auto n = static_cast<Eigen::Index>(capacity_);
    const auto d = static_cast<Eigen::Index>(embedding_dim_);
    entries_.push_back({std::move(padded), Matrix::Zero(n, d)});
    return entries_.back().snapshot;
}

void TrainingWindow::set_hidden(std::size_t k, Matrix hidden) {
    if (hidden.rows() != static_cast<Eigen::Index>(capacity_) ||
        hidden.cols() != static_cast<Eigen::Index>(embedding_dim_))
        throw ValidationError("set_hidden: expected an N x d matrix");
    entries_.at(k).hidden = std::move(hidden);
}

std::vector<std::size_t> TrainingWindow::eligible_slots() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < capacity_; ++i) {
        bool ok = !entries_.empty();
        for (const auto& e : entries_) ok = ok && e.snapshot.states[i] == NodeState::normal;
        if (ok) out.push_back(i);
    }
    return out;
}

}  // namespace rnne
