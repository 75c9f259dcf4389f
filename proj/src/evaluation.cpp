#include "rnne/evaluation.hpp"

#include "rnne/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

namespace rnne {

NodePair make_pair_key(std::size_t a, std::size_t b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }

PairSet edge_pairs(const GraphSnapshot& g) {
    PairSet out;
    for (const auto& e : g.edges()) out.insert(make_pair_key(e.u, e.v));
    return out;
}

RankedPairList rank_pairs(const Matrix& y, const std::vector<bool>& live, const PairSet& exclude) {
    if (static_cast<Eigen::Index>(live.size()) != y.rows())
        throw ValidationError("rank_pairs: live mask length does not match embedding rows");
    RankedPairList out;
    out.excluded = exclude;
    const auto n = live.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!live[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!live[j] || exclude.count({i, j})) continue;
            const double dist =
                (y.row(static_cast<Eigen::Index>(i)) - y.row(static_cast<Eigen::Index>(j))).norm();
            out.pairs.push_back({i, j, dist});
        }
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const RankedPair& a, const RankedPair& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    return out;
}

double precision_at_k(const RankedPairList& ranked, const PairSet& truth, std::size_t k) {
    if (k == 0) throw ValidationError("precision_at_k: k must be at least 1");
    if (k > ranked.size())
        throw ValidationError("precision_at_k: k=" + std::to_string(k) + " exceeds the " +
                              std::to_string(ranked.size()) + " ranked pairs");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r)
        if (truth.count(make_pair_key(ranked.pairs[r].i, ranked.pairs[r].j))) ++hits;
    return static_cast<double>(hits) / static_cast<double>(k);
}

HiddenEdges hide_edges(const GraphSnapshot& g, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("hide_edges: fraction must lie in (0, 1)");
    auto edges = g.edges();
    if (edges.empty()) throw ValidationError("hide_edges: snapshot has no edges");

    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(edges.size()) + 1e-9));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, edges.size() - 1);
        std::swap(edges[i], edges[pick(rng)]);
    }

    HiddenEdges out;
    out.observed = g;
    out.hidden.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.hidden.begin(), out.hidden.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    for (const auto& e : out.hidden) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        out.observed.adjacency(u, v) = 0.0;
        if (!g.directed) out.observed.adjacency(v, u) = 0.0;
    }
    return out;
}

LinkPredictionReport link_prediction_eval(const std::vector<LinkPredictionCase>& cases,
                                          const std::vector<std::size_t>& ks) {
    if (cases.empty()) throw ValidationError("link_prediction_eval: no snapshots");
    if (ks.empty()) throw ValidationError("link_prediction_eval: no k values");
    LinkPredictionReport report;
    report.ks = ks;
    report.average.assign(ks.size(), 0.0);
    for (const auto& c : cases) {
        const auto ranked = rank_pairs(c.y, c.live, c.observed);
        std::vector<double> row;
        for (auto k : ks) row.push_back(precision_at_k(ranked, c.hidden, k));
        for (std::size_t q = 0; q < ks.size(); ++q) report.average[q] += row[q];
        report.per_snapshot.push_back(std::move(row));
    }
    for (auto& v : report.average) v /= static_cast<double>(cases.size());
    return report;
}

F1Report f1_scores(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw ValidationError("f1_scores: " + std::to_string(predicted.size()) + " predictions for " +
                              std::to_string(truth.size()) + " labels");
    std::map<int, LabelScore> scores;
    for (auto l : truth) scores[l].label = l;
    for (auto l : predicted) scores[l].label = l;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == truth[i]) {
            ++scores[truth[i]].tp;
        } else {
            ++scores[predicted[i]].fp;
            ++scores[truth[i]].fn;
        }
    }

    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    auto harmonic = [](double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; };

    F1Report report;
    double tp = 0.0;
    double tp_fp = 0.0;
    double tp_fn = 0.0;
    double macro = 0.0;
    for (auto& [label, s] : scores) {
        s.precision = ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp));
        s.recall = ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn));
        s.f1 = harmonic(s.precision, s.recall);
        tp += static_cast<double>(s.tp);
        tp_fp += static_cast<double>(s.tp + s.fp);
        tp_fn += static_cast<double>(s.tp + s.fn);
        macro += s.f1;
        report.per_label.push_back(s);
    }
    report.micro_f1 = harmonic(ratio(tp, tp_fp), ratio(tp, tp_fn));
    report.macro_f1 = scores.empty() ? 0.0 : macro / static_cast<double>(scores.size());
    return report;
}

std::vector<double> default_train_fractions() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

std::vector<ClassificationRow> classification_sweep(const std::vector<LabelledEmbedding>& snapshots,
                                                    const std::vector<double>& fractions, std::size_t repeats,
                                                    std::uint64_t seed, double l2_strength) {
    if (snapshots.empty()) throw ValidationError("classification_sweep: no snapshots");
    if (repeats == 0) throw ValidationError("classification_sweep: repeats must be positive");
    for (const auto& s : snapshots)
        if (static_cast<Eigen::Index>(s.labels.size()) != s.y.rows())
            throw ValidationError("classification_sweep: one label per embedding row required");

    constexpr int max_redraws = 10;
    std::mt19937_64 rng(seed);
    std::vector<ClassificationRow> rows;
    for (double fraction : fractions) {
        if (!(fraction > 0.0 && fraction < 1.0))
            throw ValidationError("classification_sweep: fractions must lie in (0, 1)");
        ClassificationRow row{fraction, 0.0, 0.0};
        for (const auto& snap : snapshots) {
            const auto n = snap.labels.size();
            auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
            n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
            for (std::size_t r = 0; r < repeats; ++r) {
                std::vector<std::size_t> order(n);
                std::vector<int> train_labels;
                int draws = 0;
                for (;;) {
                    for (std::size_t i = 0; i < n; ++i) order[i] = i;
                    std::shuffle(order.begin(), order.end(), rng);
                    train_labels.clear();
                    for (std::size_t i = 0; i < n_train; ++i) train_labels.push_back(snap.labels[order[i]]);
                    std::set<int> distinct(train_labels.begin(), train_labels.end());
                    if (distinct.size() >= 2) break;
                    if (++draws > max_redraws)
                        throw ValidationError("classification_sweep: could not draw a training split with 2 classes");
                }
                Matrix x_train(static_cast<Eigen::Index>(n_train), snap.y.cols());
                Matrix x_test(static_cast<Eigen::Index>(n - n_train), snap.y.cols());
                std::vector<int> test_labels;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto src = snap.y.row(static_cast<Eigen::Index>(order[i]));
                    if (i < n_train) {
                        x_train.row(static_cast<Eigen::Index>(i)) = src;
                    } else {
                        x_test.row(static_cast<Eigen::Index>(i - n_train)) = src;
                        test_labels.push_back(snap.labels[order[i]]);
                    }
                }
                const auto clf = train_classifier(x_train, train_labels, l2_strength, rng());
                const auto report = f1_scores(clf.predict(x_test), test_labels);
                row.micro_f1 += report.micro_f1;
                row.macro_f1 += report.macro_f1;
            }
        }
        const auto runs = static_cast<double>(snapshots.size() * repeats);
        row.micro_f1 /= runs;
        row.macro_f1 /= runs;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace rnne
