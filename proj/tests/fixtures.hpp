#pragma once

// Shared builders for model-level tests and the acceptance binary.

#include "oracles.hpp"
#include "rnne/model.hpp"
#include "rnne/pretreatment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace rnne::fixture {

inline Matrix random_adjacency(std::mt19937_64& rng, Eigen::Index n, double p, int max_weight = 3) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> weight(1, max_weight);
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (coin(rng) < p) m(i, j) = m(j, i) = weight(rng);
    return m;
}

inline GraphSnapshot snapshot_of(const Matrix& m, std::size_t t) {
    GraphSnapshot g;
    g.time_index = t;
    for (Eigen::Index i = 0; i < m.rows(); ++i) g.node_ids.push_back("v" + std::to_string(i));
    g.adjacency = m;
    return g;
}

/// Window of `steps` entries over `n` slots. When `with_carry` is set, one
/// extra snapshot is pushed first and given random hidden states so the
/// window starts from a non-zero carry.
inline TrainingWindow random_window(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t steps,
                                    bool with_carry = true, double p = 0.4) {
    std::mt19937_64 rng(seed);
    TrainingWindow w(steps, n, d, 0.05);
    const auto total = steps + (with_carry ? 1 : 0);
    Matrix base = random_adjacency(rng, static_cast<Eigen::Index>(n), p);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (std::size_t t = 0; t < total; ++t) {
        // Small weight jitter keeps every slot normal while features still differ per step.
        Matrix m = base;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = i + 1; j < m.cols(); ++j)
                if (m(i, j) != 0.0) m(i, j) = m(j, i) = base(i, j) * (1.0 + 0.1 * u(rng));
        w.push(snapshot_of(m, t));
        Matrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = u(rng);
        w.set_hidden(w.size() - 1, h);
    }
    return w;
}

inline TrainingWindow identical_window(const Matrix& m, std::size_t steps, std::size_t d) {
    TrainingWindow w(steps, static_cast<std::size_t>(m.rows()), d, 0.05);
    for (std::size_t t = 0; t < steps; ++t) w.push(snapshot_of(m, t));
    return w;
}

/// Perturbs every parameter in a copy of `p` so biases are non-zero too.
inline ModelParams random_params(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    ModelParams p = ModelParams::initialize(sizes, seed);
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    p.for_each_parameter([&](double& v) { v += u(rng); });
    return p;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences on every parameter against `gradients`.
/// Relative error uses max(|analytic|, |numeric|, floor) as denominator.
inline GradCheck check_gradients(const TrainingWindow& w, const std::vector<std::size_t>& batch, ModelParams p,
                                 const Hyperparams& hp, double eps = 1e-5, double floor = 1e-6) {
    const auto analytic = gradients(w, batch, p, hp).grads;
    std::vector<double> flat;
    ModelParams copy = analytic;
    copy.for_each_parameter([&](double& g) { flat.push_back(g); });

    GradCheck out;
    std::size_t idx = 0;
    ModelParams probe = p;
    probe.for_each_parameter([&](double& theta) {
        const double saved = theta;
        theta = saved + eps;
        const double up = total_loss(w, batch, probe, hp).total;
        theta = saved - eps;
        const double down = total_loss(w, batch, probe, hp).total;
        theta = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = flat[idx++];
        const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
        out.max_rel_error = std::max(out.max_rel_error, rel);
        ++out.checked;
    });
    return out;
}

}  // namespace rnne::fixture
