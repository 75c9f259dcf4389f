#pragma once

// Test-only reference computations. Everything here is written with plain
// loops so it shares no code path with the library.

#include "rnne/graph.hpp"
#include "rnne/model.hpp"

#include <cmath>
#include <vector>

namespace rnne::oracle {

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix row_normalize(const Matrix& a) {
    Matrix out = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double m = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) m = std::max(m, a(i, j));
        if (m > 0.0)
            for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) / m;
    }
    return out;
}

inline Matrix features(const Matrix& m) {
    const Matrix m2 = matmul(m, m);
    const Matrix m3 = matmul(m2, m);
    const Matrix u = row_normalize(m), v = row_normalize(m2), w = row_normalize(m3);
    Matrix s(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) s(i, j) = u(i, j) / 2.0 + v(i, j) / 3.0 + w(i, j) / 6.0;
    return row_normalize(s);
}

inline std::vector<double> row_diff(const Matrix& a, const Matrix& b) {
    std::vector<double> d(static_cast<std::size_t>(a.rows()), 0.0);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) d[static_cast<std::size_t>(i)] += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    return d;
}

/// Scalar layer-by-layer logistic forward pass.
inline std::vector<double> forward(const std::vector<Layer>& stack, std::vector<double> a) {
    for (const auto& layer : stack) {
        std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            double z = layer.bias[r];
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) z += layer.weight(r, c) * a[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = 1.0 / (1.0 + std::exp(-z));
        }
        a = std::move(next);
    }
    return a;
}

inline Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace rnne::oracle
