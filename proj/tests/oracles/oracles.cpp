#include "oracles.hpp"

#include "adbench/learners.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace adbench::oracle {

ExposureMatrix exposure_per_second(std::span<const ViewingRecord> viewing, std::span<const AdBroadcast> broadcasts) {
    ExposureMatrix out;
    for (const auto& b : broadcasts) {
        for (const auto& v : viewing) {
            if (v.channel != b.channel) continue;
            const std::int64_t first = std::max(v.begin_s(), b.begin_s());
            const int cell = cell_index(weekday_of(first), slot_of(clock_seconds_of(first)));
            std::int64_t seconds = 0;
            for (std::int64_t s = b.begin_s(); s < b.end_s(); ++s) {
                if (s >= v.begin_s() && s < v.end_s()) ++seconds;
            }
            if (seconds > 0) out.add(v.user_id, b.product_id, cell, seconds);
        }
    }
    return out;
}

std::vector<double> logreg_numeric_gradient(std::span<const double> weights, double bias, const FeatureMatrix& x,
                                            std::span<const int> y, double l2, double step) {
    std::vector<double> w(weights.begin(), weights.end());
    std::vector<double> g(w.size() + 1);
    for (std::size_t i = 0; i <= w.size(); ++i) {
        double& v = i < w.size() ? w[i] : bias;
        const double keep = v;
        const double h = step * std::max(1.0, std::abs(keep));
        v = keep + h;
        const double up = logreg_objective(w, bias, x, y, l2);
        v = keep - h;
        const double down = logreg_objective(w, bias, x, y, l2);
        v = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double svm_primal(std::span<const double> w, double b, const FeatureMatrix& x, std::span<const int> y, double c) {
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double hinge = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        double m = b;
        for (std::size_t f = 0; f < x.dims; ++f) m += w[f] * x.at(r, f);
        const double s = y[r] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - s * m);
    }
    return 0.5 * reg + c * hinge;
}

double svm_best_bias(std::span<const double> w, const FeatureMatrix& x, std::span<const int> y, double c) {
    double best_b = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < x.rows; ++r) {
        double m = 0.0;
        for (std::size_t f = 0; f < x.dims; ++f) m += w[f] * x.at(r, f);
        const double s = y[r] ? 1.0 : -1.0;
        const double b = s - m;
        const double obj = svm_primal(w, b, x, y, c);
        if (obj < best) {
            best = obj;
            best_b = b;
        }
    }
    return best_b;
}

namespace {

/// Euclidean projection onto {0 <= a <= c, sum s_i a_i = 0}.
std::vector<double> project(const std::vector<double>& z, const std::vector<double>& s, double c) {
    auto at = [&](double nu, std::vector<double>& a) {
        double sum = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            a[i] = std::clamp(z[i] - nu * s[i], 0.0, c);
            sum += s[i] * a[i];
        }
        return sum;
    };
    std::vector<double> a(z.size());
    double bound = c;
    for (double v : z) bound = std::max(bound, std::abs(v) + c);
    double lo = -bound;
    double hi = bound;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (at(mid, a) > 0) lo = mid;
        else hi = mid;
    }
    at(0.5 * (lo + hi), a);
    return a;
}

}  // namespace

SvmOracleResult svm_projected_gradient(const FeatureMatrix& x, std::span<const int> y, double c, int iterations) {
    const std::size_t n = x.rows;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = y[i] ? 1.0 : -1.0;
    std::vector<double> q(n * n);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double k = 0.0;
            for (std::size_t f = 0; f < x.dims; ++f) k += x.at(i, f) * x.at(j, f);
            q[i * n + j] = s[i] * s[j] * k;
        }
        trace += q[i * n + i];
    }
    const double step = 1.0 / std::max(trace, 1e-12);

    // Accelerated projected gradient on min 1/2 a'Qa - sum a.
    std::vector<double> a(n, 0.0), prev(n, 0.0), look(n, 0.0), z(n);
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double g = -1.0;
            for (std::size_t j = 0; j < n; ++j) g += q[i * n + j] * look[j];
            z[i] = look[i] - step * g;
        }
        prev = a;
        a = project(z, s, c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) look[i] = a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
        t = t_next;
    }

    SvmOracleResult out;
    out.weights.assign(x.dims, 0.0);
    double alpha_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        alpha_sum += a[i];
        for (std::size_t f = 0; f < x.dims; ++f) out.weights[f] += a[i] * s[i] * x.at(i, f);
    }
    double ww = 0.0;
    for (double v : out.weights) ww += v * v;
    out.dual = alpha_sum - 0.5 * ww;
    out.bias = svm_best_bias(out.weights, x, y, c);
    out.primal = svm_primal(out.weights, out.bias, x, y, c);
    return out;
}

double t_density(double x, double df) {
    const double log_norm = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * M_PI);
    return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace

double t_sf_quadrature(double t, double df, double tol) {
    const double u = std::abs(t);
    auto f = [df](double x) { return t_density(x, df); };
    // Pieces [0,1], [1,2], [2,4], ... keep each Simpson panel well scaled.
    double mass = 0.0;
    double lo = 0.0;
    double hi = std::min(1.0, u);
    while (lo < u) {
        mass += integrate(f, lo, hi, tol);
        lo = hi;
        hi = std::min(u, std::max(1.0, 2.0 * hi));
    }
    return t >= 0 ? 0.5 - mass : 0.5 + mass;
}

WelchOracle welch_quadrature(std::span<const double> a, std::span<const double> b) {
    auto moments = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::pair{m, ss / static_cast<double>(v.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double qa = va / static_cast<double>(a.size());
    const double qb = vb / static_cast<double>(b.size());
    WelchOracle out;
    out.t = (ma - mb) / std::sqrt(qa + qb);
    out.df = (qa + qb) * (qa + qb) /
             (qa * qa / static_cast<double>(a.size() - 1) + qb * qb / static_cast<double>(b.size() - 1));
    out.p = 2.0 * t_sf_quadrature(std::abs(out.t), out.df);
    return out;
}

std::map<AggregateKey, GroupMean> aggregate_brute_force(std::span<const ScoreRecord> records, const GroupBy& g,
                                                        PiVariant variant) {
    auto keep = [variant](const ExperimentSpec& s) {
        const bool demo = s.features == FeatureSet::Demographics || s.features == FeatureSet::ViewWeekdaySlotPlusDemo ||
                          s.features == FeatureSet::ViewWeekdayPlusDemo;
        const bool ap = s.behavior == Behavior::ActualPurchase;
        if (demo && ap) return s.pi_toggle == (variant == PiVariant::With);
        return !s.pi_toggle;
    };
    auto key_of = [&g](const ExperimentSpec& s) {
        AggregateKey k;
        if (g.behavior) k.behavior = s.behavior;
        if (g.category) k.category = s.category;
        if (g.features) k.features = s.features;
        if (g.model) k.model = s.model;
        if (g.base_kind) k.base_kind = s.base.kind;
        return k;
    };
    std::set<AggregateKey> keys;
    for (const auto& r : records) {
        if (keep(r.spec)) keys.insert(key_of(r.spec));
    }
    std::map<AggregateKey, GroupMean> out;
    for (const auto& k : keys) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : records) {
            if (keep(r.spec) && key_of(r.spec) == k) {
                sum += r.cv.mean_f1;
                ++n;
            }
        }
        out[k] = {sum / static_cast<double>(n), n};
    }
    return out;
}

}  // namespace adbench::oracle
