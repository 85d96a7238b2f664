#pragma once

// Slow, obviously-correct reference computations the library is checked
// against. None of these share code with src/.

#include "adbench/exposure.hpp"
#include "adbench/features.hpp"
#include "adbench/stats.hpp"

#include <map>
#include <span>
#include <vector>

namespace adbench::oracle {

/// Walks every second of every broadcast and counts the viewing records on
/// the same channel that contain it. Each second is credited to the cell of
/// its (viewing, broadcast) pair's overlap start.
ExposureMatrix exposure_per_second(std::span<const ViewingRecord> viewing, std::span<const AdBroadcast> broadcasts);

/// Central finite differences of logreg_objective over (weights..., bias).
std::vector<double> logreg_numeric_gradient(std::span<const double> weights, double bias, const FeatureMatrix& x,
                                            std::span<const int> y, double l2, double step = 1e-5);

/// Minimum of the soft-margin primal 1/2 |w|^2 + C sum hinge over (w, b),
/// found by projected (sub)gradient ascent on the box-and-hyperplane
/// constrained dual. The returned value is the primal objective of the
/// recovered w with its exactly minimizing bias, so it is an attainable
/// upper bound on the optimum.
struct SvmOracleResult {
    double primal = 0.0;
    double dual = 0.0;
    std::vector<double> weights;
    double bias = 0.0;
};
SvmOracleResult svm_projected_gradient(const FeatureMatrix& x, std::span<const int> y, double c, int iterations);

/// Hinge sum plus 1/2 |w|^2 for given (w, b).
double svm_primal(std::span<const double> w, double b, const FeatureMatrix& x, std::span<const int> y, double c);

/// Bias minimizing the hinge sum for fixed w (exact: checks every breakpoint).
double svm_best_bias(std::span<const double> w, const FeatureMatrix& x, std::span<const int> y, double c);

/// Student-t density.
double t_density(double x, double df);

/// P(T > t) by adaptive Simpson quadrature of the density.
double t_sf_quadrature(double t, double df, double tol = 1e-13);

/// Welch statistic, Welch-Satterthwaite df and a two-sided p-value from
/// t_sf_quadrature.
struct WelchOracle {
    double t = 0.0;
    double df = 0.0;
    double p = 0.0;
};
WelchOracle welch_quadrature(std::span<const double> a, std::span<const double> b);

/// Grouped mean F1 by a linear scan per group key.
std::map<AggregateKey, GroupMean> aggregate_brute_force(std::span<const ScoreRecord> records, const GroupBy& group_by,
                                                        PiVariant variant);

}  // namespace adbench::oracle
