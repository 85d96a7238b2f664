#pragma once

#include "adbench/error.hpp"
#include "adbench/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace adbench::detail {

/// Training rows in canonical order (lexicographic by features, then label).
struct Dataset {
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> x;
    std::vector<int> y;
    std::size_t positives = 0;

    const double* row(std::size_t r) const { return x.data() + r * dims; }
    double at(std::size_t r, std::size_t c) const { return x[r * dims + c]; }
};

inline void check_training_input(const FeatureMatrix& x, std::span<const int> y) {
    if (x.rows == 0) throw ValidationError("training needs at least one row");
    if (y.size() != x.rows) throw ValidationError("label count does not match matrix rows");
    if (x.values.size() != x.rows * x.dims) throw ValidationError("matrix storage does not match its shape");
    for (int v : y) {
        if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
    }
}

inline Dataset canonical_dataset(const FeatureMatrix& x, std::span<const int> y) {
    check_training_input(x, y);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = x.row(a);
        const auto rb = x.row(b);
        for (std::size_t c = 0; c < x.dims; ++c) {
            if (ra[c] < rb[c]) return true;
            if (rb[c] < ra[c]) return false;
        }
        return y[a] < y[b];
    });
    Dataset d;
    d.rows = x.rows;
    d.dims = x.dims;
    d.x.reserve(x.values.size());
    d.y.reserve(x.rows);
    for (auto r : order) {
        const auto row = x.row(r);
        d.x.insert(d.x.end(), row.begin(), row.end());
        d.y.push_back(y[r]);
        d.positives += static_cast<std::size_t>(y[r]);
    }
    return d;
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

constexpr double kProbClamp = 1e-6;

inline double clamped_log_odds(double p) {
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return std::log(p / (1.0 - p));
}

}  // namespace adbench::detail
