#include "rnne/error.hpp"
#include "rnne/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rnne {

namespace {

constexpr std::size_t max_classifier_iters = 5000;
constexpr double gradient_tolerance = 1e-6;

// Row-wise softmax of the score matrix.
Matrix softmax_rows(Matrix scores) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double top = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - top).exp();
        scores.row(i) /= scores.row(i).sum();
    }
    return scores;
}

}  // namespace

LogisticRegression::LogisticRegression(Matrix weight, Vector bias, std::vector<int> classes)
    : weight_(std::move(weight)), bias_(std::move(bias)), classes_(std::move(classes)) {}

Matrix LogisticRegression::decision_function(const Matrix& x) const {
    if (x.cols() != weight_.cols()) throw ValidationError("classifier: feature width mismatch");
    Matrix scores = x * weight_.transpose();
    scores.rowwise() += bias_.transpose();
    return scores;
}

std::vector<int> LogisticRegression::predict(const Matrix& x) const {
    const Matrix scores = decision_function(x);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        out.push_back(classes_[static_cast<std::size_t>(best)]);
    }
    return out;
}

LogisticRegression train_classifier(const Matrix& x, const std::vector<int>& labels, double l2_strength,
                                    std::uint64_t seed) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows())
        throw ValidationError("train_classifier: one label per row required");
    if (!(l2_strength >= 0.0)) throw ValidationError("train_classifier: l2_strength must be >= 0");
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw ValidationError("train_classifier: training labels contain a single class");

    const auto n = x.rows();
    const auto c = static_cast<Eigen::Index>(classes.size());
    Matrix onehot = Matrix::Zero(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto pos = std::lower_bound(classes.begin(), classes.end(), labels[static_cast<std::size_t>(i)]);
        onehot(i, pos - classes.begin()) = 1.0;
    }

    // Fit on z-scored features so the penalty means the same thing at any
    // feature scale; constant columns are left centred.
    const Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::RowVectorXd scale = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (!(scale[j] > 1e-12)) scale[j] = 1.0;
    const Matrix z = (x.rowwise() - mean).array().rowwise() / scale.array();

    // Smoothness bound of the objective gives a safe fixed step.
    const double max_sq_norm = n > 0 ? (z.rowwise().squaredNorm().array() + 1.0).maxCoeff() : 1.0;
    const double step = 1.0 / (0.5 * max_sq_norm + l2_strength);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> init(-1e-3, 1e-3);
    Matrix weight(c, x.cols());
    for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = init(rng);
    Vector bias = Vector::Zero(c);

    LogisticRegression model(weight, bias, classes);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t iter = 0; iter < max_classifier_iters; ++iter) {
        const Matrix residual = softmax_rows(model.decision_function(z)) - onehot;  // n x c
        const Matrix grad_w = inv_n * residual.transpose() * z + l2_strength * model.weight_;
        const Vector grad_b = inv_n * residual.colwise().sum().transpose();
        model.gradient_norm_ = std::sqrt(grad_w.squaredNorm() + grad_b.squaredNorm());
        model.iterations_ = iter;
        if (model.gradient_norm_ < gradient_tolerance) break;
        model.weight_ -= step * grad_w;
        model.bias_ -= step * grad_b;
        model.iterations_ = iter + 1;
    }
    // Fold the scaling into the weights so callers pass raw features.
    model.weight_ = model.weight_.array().rowwise() / scale.array();
    model.bias_ -= model.weight_ * mean.transpose();
    if (!model.weight_.allFinite() || !model.bias_.allFinite())
        throw CorruptionError("classifier weights contain NaN or Inf");
    return model;
}

}  // namespace rnne
