#pragma once

#include "rnne/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

namespace rnne {

/// Unordered node pair stored with first < second.
using NodePair = std::pair<std::size_t, std::size_t>;
using PairSet = std::set<NodePair>;

NodePair make_pair_key(std::size_t a, std::size_t b);

/// Every edge of `g` as an unordered pair.
PairSet edge_pairs(const GraphSnapshot& g);

struct RankedPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
};

/// Node pairs sorted by ascending embedding distance, ties by (i, j).
struct RankedPairList {
    std::vector<RankedPair> pairs;
    PairSet excluded;

    std::size_t size() const noexcept { return pairs.size(); }
};

/// Euclidean distance of every live, non-excluded pair; rows of `y` are nodes.
RankedPairList rank_pairs(const Matrix& y, const std::vector<bool>& live, const PairSet& exclude = {});

/// Fraction of the first k ranked pairs that belong to `truth`.
double precision_at_k(const RankedPairList& ranked, const PairSet& truth, std::size_t k);

struct HiddenEdges {
    GraphSnapshot observed;
    std::vector<Edge> hidden;
};

/// Removes floor(fraction * |E|) uniformly chosen edges.
HiddenEdges hide_edges(const GraphSnapshot& g, double fraction, std::uint64_t seed);

/// One snapshot's worth of input to link prediction.
struct LinkPredictionCase {
    Matrix y;                // N x d, trained on the observed graph
    std::vector<bool> live;  // slots with a node
    PairSet observed;        // excluded from the ranking
    PairSet hidden;          // ground truth
};

struct LinkPredictionReport {
    std::vector<std::size_t> ks;
    std::vector<std::vector<double>> per_snapshot;  // [snapshot][k]
    std::vector<double> average;                    // [k]
};

/// precision@k for each k, per snapshot and averaged. A k larger than the
/// ranked list is a ValidationError.
LinkPredictionReport link_prediction_eval(const std::vector<LinkPredictionCase>& cases,
                                          const std::vector<std::size_t>& ks);

/// L2-regularized multinomial logistic regression.
class LogisticRegression {
public:
    LogisticRegression() = default;
    LogisticRegression(Matrix weight, Vector bias, std::vector<int> classes);

    /// Class scores for each row of `x`; one column per class.
    Matrix decision_function(const Matrix& x) const;
    std::vector<int> predict(const Matrix& x) const;

    const Matrix& weight() const noexcept { return weight_; }  // classes x features
    const Vector& bias() const noexcept { return bias_; }
    const std::vector<int>& classes() const noexcept { return classes_; }
    std::size_t iterations() const noexcept { return iterations_; }
    double gradient_norm() const noexcept { return gradient_norm_; }

private:
    friend LogisticRegression train_classifier(const Matrix&, const std::vector<int>&, double, std::uint64_t);
    Matrix weight_;
    Vector bias_;
    std::vector<int> classes_;
    std::size_t iterations_ = 0;
    double gradient_norm_ = 0.0;
};

/// Minimizes mean cross-entropy + l2/2 * ||W||^2 (bias unpenalized) on
/// features z-scored with the training rows' statistics, by fixed-step
/// full-batch gradient descent until the gradient norm drops below 1e-6 or
/// 5000 iterations pass. The returned model takes raw features. Rows of `x`
/// are samples.
LogisticRegression train_classifier(const Matrix& x, const std::vector<int>& labels, double l2_strength = 1.0,
                                    std::uint64_t seed = 0);

struct LabelScore {
    int label = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct F1Report {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    std::vector<LabelScore> per_label;
    double train_fraction = 0.0;
};

/// Micro/macro F1 over the union of labels seen in either sequence. Zero
/// denominators give zero precision/recall/F1.
F1Report f1_scores(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Labelled embeddings of one snapshot.
struct LabelledEmbedding {
    Matrix y;  // rows are nodes
    std::vector<int> labels;
};

struct ClassificationRow {
    double fraction = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
};

/// For every fraction: random train/test splits, averaged over repeats and
/// snapshots. Splits whose training part holds fewer than 2 classes are
/// redrawn up to 10 times.
std::vector<ClassificationRow> classification_sweep(const std::vector<LabelledEmbedding>& snapshots,
                                                    const std::vector<double>& fractions, std::size_t repeats,
                                                    std::uint64_t seed, double l2_strength = 1.0);

std::vector<double> default_train_fractions();

}  // namespace rnne
