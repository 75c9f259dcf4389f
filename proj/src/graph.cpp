#include "rnne/graph.hpp"

#include "rnne/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rnne {

namespace fs = std::filesystem;

namespace {

std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
}

}  // namespace

std::size_t GraphSnapshot::live_count() const {
    return static_cast<std::size_t>(
        std::count_if(node_ids.begin(), node_ids.end(), [](const auto& id) { return !id.empty(); }));
}

std::optional<std::size_t> GraphSnapshot::index_of(const std::string& id) const {
    auto it = std::find(node_ids.begin(), node_ids.end(), id);
    if (it == node_ids.end() || id.empty()) return std::nullopt;
    return static_cast<std::size_t>(it - node_ids.begin());
}

std::vector<std::pair<std::size_t, double>> GraphSnapshot::neighbors(std::size_t i) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
        double w = adjacency(static_cast<Eigen::Index>(i), j);
        if (w != 0.0) out.emplace_back(static_cast<std::size_t>(j), w);
    }
    return out;
}

std::vector<Edge> GraphSnapshot::edges() const {
    std::vector<Edge> out;
    const auto n = adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = directed ? 0 : i + 1; j < n; ++j) {
            double w = adjacency(i, j);
            if (w != 0.0) out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
        }
    }
    return out;
}

std::size_t GraphSnapshot::edge_count() const {
    std::size_t count = 0;
    const auto n = adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = directed ? 0 : i + 1; j < n; ++j)
            if (adjacency(i, j) != 0.0) ++count;
    return count;
}

void GraphSnapshot::validate() const {
    const auto n = static_cast<Eigen::Index>(node_ids.size());
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw ValidationError("adjacency is " + std::to_string(adjacency.rows()) + "x" +
                              std::to_string(adjacency.cols()) + " but there are " +
                              std::to_string(n) + " node ids");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0) throw ValidationError("non-zero diagonal at node " + std::to_string(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            double w = adjacency(i, j);
            if (!std::isfinite(w) || w < 0.0)
                throw ValidationError("invalid weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            if (!directed && w != adjacency(j, i))
                throw ValidationError("undirected adjacency is not symmetric");
            if (w != 0.0 && (node_ids[i].empty() || node_ids[j].empty()))
                throw ValidationError("vacant slot carries an edge");
        }
    }
}

GraphSnapshot load_edge_list(std::istream& in, bool directed, std::size_t time_index) {
    GraphSnapshot g;
    g.time_index = time_index;
    g.directed = directed;

    std::unordered_map<std::string, std::size_t> index;
    auto intern = [&](const std::string& id) {
        auto [it, inserted] = index.try_emplace(id, g.node_ids.size());
        if (inserted) g.node_ids.push_back(id);
        return it->second;
    };

    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 2 && fields.size() != 3)
            throw ParseError(line_no, "expected 'u v' or 'u v w', got " + std::to_string(fields.size()) + " fields");

        double w = 1.0;
        if (fields.size() == 3) {
            const auto& s = fields[2];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), w);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw ParseError(line_no, "weight '" + s + "' is not a number");
            if (!std::isfinite(w) || w <= 0.0)
                throw ValidationError("line " + std::to_string(line_no) + ": weight must be positive, got " + s);
        }
        if (fields[0] == fields[1])
            throw ValidationError("line " + std::to_string(line_no) + ": self-loop on '" + fields[0] + "'");

        std::size_t u = intern(fields[0]);
        std::size_t v = intern(fields[1]);
        weights[{u, v}] += w;
        if (!directed) weights[{v, u}] += w;
    }

    const auto n = static_cast<Eigen::Index>(g.node_ids.size());
    g.adjacency = Matrix::Zero(n, n);
    for (const auto& [key, w] : weights)
        g.adjacency(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = w;
    return g;
}

GraphSnapshot load_edge_list_file(const fs::path& path, bool directed, std::size_t time_index) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return load_edge_list(in, directed, time_index);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

void write_edge_list(std::ostream& out, const GraphSnapshot& g) {
    for (const auto& e : g.edges())
        out << g.node_ids[e.u] << ' ' << g.node_ids[e.v] << ' ' << format_weight(e.weight) << '\n';
}

void write_edge_list_file(const fs::path& path, const GraphSnapshot& g) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_edge_list(out, g);
    if (!out) throw IoError("write failed for " + path.string());
}

fs::path snapshot_path(const fs::path& dir, std::size_t k) {
    return dir / ("snapshot_" + std::to_string(k) + ".edges");
}

std::vector<GraphSnapshot> load_series(const fs::path& dir, bool directed) {
    if (!fs::is_directory(dir)) throw IoError("snapshot directory " + dir.string() + " does not exist");

    std::size_t max_k = 0;
    std::size_t found = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        constexpr std::string_view prefix = "snapshot_";
        constexpr std::string_view suffix = ".edges";
        if (name.size() <= prefix.size() + suffix.size() || name.rfind(prefix, 0) != 0 ||
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        auto digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) continue;
        max_k = std::max(max_k, k);
        ++found;
    }
    if (found == 0) throw IoError("no snapshot_<k>.edges files in " + dir.string());

    std::vector<GraphSnapshot> series;
    for (std::size_t k = 0; k <= max_k; ++k) {
        auto path = snapshot_path(dir, k);
        if (!fs::exists(path))
            throw SequencingError("series in " + dir.string() + " is missing " + path.filename().string());
        series.push_back(load_edge_list_file(path, directed, k));
    }
    return series;
}

void write_series(const fs::path& dir, const std::vector<GraphSnapshot>& series) {
    fs::create_directories(dir);
    for (std::size_t k = 0; k < series.size(); ++k) write_edge_list_file(snapshot_path(dir, k), series[k]);
}

std::unordered_map<std::string, std::string> load_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file " + path.string());
    std::unordered_map<std::string, std::string> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 2) throw ParseError(line_no, "expected 'node_id label'");
        if (!labels.emplace(fields[0], fields[1]).second)
            throw ValidationError("line " + std::to_string(line_no) + ": node '" + fields[0] + "' labelled twice");
    }
    return labels;
}

void write_labels(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [id, label] : labels) out << id << ' ' << label << '\n';
}

NodeIndexMap::NodeIndexMap(std::size_t capacity) : capacity_(capacity) {
    free_.reserve(capacity);
    for (std::size_t s = 0; s < capacity; ++s) free_.push_back(s);
}

std::optional<std::size_t> NodeIndexMap::slot_of(const std::string& id) const {
    auto it = slots_.find(id);
    if (it == slots_.end()) return std::nullopt;
    return it->second;
}

std::size_t NodeIndexMap::assign(const std::string& id) {
    if (auto existing = slot_of(id)) return *existing;
    if (free_.empty())
        throw CapacityError("no free slot for node '" + id + "' (capacity " + std::to_string(capacity_) + ")");
    std::size_t slot = free_.front();
    free_.erase(free_.begin());
    slots_.emplace(id, slot);
    return slot;
}

void NodeIndexMap::release(const std::string& id) {
    auto it = slots_.find(id);
    if (it == slots_.end()) return;
    free_.insert(std::upper_bound(free_.begin(), free_.end(), it->second), it->second);
    slots_.erase(it);
}

AlignedSeries align_series(const std::vector<GraphSnapshot>& snapshots, std::size_t capacity) {
    for (const auto& g : snapshots) {
        if (g.live_count() > capacity)
            throw CapacityError("snapshot " + std::to_string(g.time_index) + " has " +
                                std::to_string(g.live_count()) + " nodes, capacity is " + std::to_string(capacity));
    }

    std::unordered_map<std::string, std::size_t> last_seen;
    for (std::size_t t = 0; t < snapshots.size(); ++t)
        for (const auto& id : snapshots[t].node_ids)
            if (!id.empty()) last_seen[id] = t;

    AlignedSeries result{{}, NodeIndexMap(capacity)};
    auto& index = result.index;
    std::vector<std::string> departed;
    const auto n = static_cast<Eigen::Index>(capacity);

    for (std::size_t t = 0; t < snapshots.size(); ++t) {
        const auto& g = snapshots[t];
        for (const auto& id : departed) index.release(id);
        departed.clear();

        std::vector<Eigen::Index> slot_of_pos(g.size(), -1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g.is_live(i)) continue;
            slot_of_pos[i] = static_cast<Eigen::Index>(index.assign(g.node_ids[i]));
        }

        GraphSnapshot aligned;
        aligned.time_index = g.time_index;
        aligned.directed = g.directed;
        aligned.node_ids.assign(capacity, std::string());
        aligned.adjacency = Matrix::Zero(n, n);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (slot_of_pos[i] < 0) continue;
            aligned.node_ids[static_cast<std::size_t>(slot_of_pos[i])] = g.node_ids[i];
            for (std::size_t j = 0; j < g.size(); ++j) {
                double w = g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (w != 0.0) aligned.adjacency(slot_of_pos[i], slot_of_pos[j]) = w;
            }
        }
        result.snapshots.push_back(std::move(aligned));

        for (const auto& id : g.node_ids)
            if (!id.empty() && last_seen.at(id) == t) departed.push_back(id);
    }
    return result;
}

}  // namespace rnne
