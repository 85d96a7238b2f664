#include "adbench/stats.hpp"

#include "adbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace adbench {

// ---------------------------------------------------------------------------
// Incomplete beta (modified Lentz continued fraction)
// ---------------------------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
    if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end()) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

double two_sided_p(double t, double df) { return incomplete_beta(df / 2.0, 0.5, df / (df + t * t)); }

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
    if (std::isnan(t)) return std::nan("");
    const double tail = 0.5 * two_sided_p(t, df);
    return t >= 0.0 ? tail : 1.0 - tail;
}

TTestReport welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs at least two values per sample");
    TTestReport r;
    r.n_a = a.size();
    r.n_b = b.size();
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double va = sample_variance(a, ma);
    const double vb = sample_variance(b, mb);
    if (va == 0.0 && vb == 0.0) {
        r.t_stat = r.df = r.p_value = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const double sa = va / static_cast<double>(r.n_a);
    const double sb = vb / static_cast<double>(r.n_b);
    const double se2 = sa + sb;
    r.t_stat = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / (sa * sa / static_cast<double>(r.n_a - 1) + sb * sb / static_cast<double>(r.n_b - 1));
    r.p_value = two_sided_p(r.t_stat, r.df);
    return r;
}

TTestReport paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("paired t-test needs equal sample sizes");
    if (a.size() < 2) throw ValidationError("t-test needs at least two values per sample");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    TTestReport r;
    r.n_a = r.n_b = a.size();
    const double m = mean_of(diff);
    const double v = sample_variance(diff, m);
    if (v == 0.0) {
        r.t_stat = r.df = r.p_value = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.t_stat = m / std::sqrt(v / static_cast<double>(diff.size()));
    r.df = static_cast<double>(diff.size() - 1);
    r.p_value = two_sided_p(r.t_stat, r.df);
    return r;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

bool selected_for_report(const ExperimentSpec& spec, PiVariant variant) {
    if (spec.redundant()) return false;
    if (spec.behavior == Behavior::ActualPurchase && has_demographics(spec.features)) {
        return spec.pi_feature_effective() == (variant == PiVariant::With);
    }
    return true;
}

std::map<AggregateKey, GroupMean> aggregate(std::span<const ScoreRecord> records, const GroupBy& g,
                                            PiVariant variant) {
    if (records.empty()) throw ValidationError("aggregate needs at least one record");
    std::map<AggregateKey, std::pair<double, std::size_t>> sums;
    for (const auto& r : records) {
        if (!selected_for_report(r.spec, variant)) continue;
        AggregateKey key;
        if (g.behavior) key.behavior = r.spec.behavior;
        if (g.category) key.category = r.spec.category;
        if (g.features) key.features = r.spec.features;
        if (g.model) key.model = r.spec.model;
        if (g.base_kind) key.base_kind = r.spec.base.kind;
        auto& s = sums[key];
        s.first += r.cv.mean_f1;
        s.second += 1;
    }
    std::map<AggregateKey, GroupMean> out;
    for (const auto& [key, s] : sums) out[key] = {s.first / static_cast<double>(s.second), s.second};
    return out;
}

AverageTable average_table(std::span<const ScoreRecord> records, LearnerKind model, BaseKind base_kind,
                           const ReportOptions& options) {
    AverageTable t;
    t.model = model;
    t.base_kind = base_kind;
    // Sums per (behavior, category, column) and per (behavior, column).
    double sum[2][kCategories][5] = {};
    std::size_t cnt[2][kCategories][5] = {};
    for (const auto& r : records) {
        if (r.spec.model != model || r.spec.base.kind != base_kind) continue;
        if (!selected_for_report(r.spec, options.pi_variant)) continue;
        const auto b = static_cast<std::size_t>(r.spec.behavior);
        const auto col = static_cast<std::size_t>(r.spec.features);
        sum[b][r.spec.category][col] += r.cv.mean_f1;
        cnt[b][r.spec.category][col] += 1;
    }
    for (std::size_t b = 0; b < 2; ++b) {
        auto& rows = t.cells[b];
        for (int c = 0; c < kCategories; ++c) {
            for (std::size_t col = 0; col < 5; ++col) {
                if (cnt[b][c][col]) rows[1 + c][col] = sum[b][c][col] / static_cast<double>(cnt[b][c][col]);
            }
        }
        for (std::size_t col = 0; col < 5; ++col) {
            bool complete = true;
            double s = 0.0;
            double experiments = 0.0;
            std::size_t n = 0;
            for (int c = 0; c < kCategories; ++c) {
                if (!rows[1 + c][col]) {
                    complete = false;
                    break;
                }
                s += *rows[1 + c][col];
                experiments += sum[b][c][col];
                n += cnt[b][c][col];
            }
            if (!complete) continue;
            rows[0][col] = options.general_average == GeneralAverage::MeanOfCategoryMeans
                               ? s / kCategories
                               : experiments / static_cast<double>(n);
        }
        // Total Average: mean over the five configurations of each row.
        for (auto& row : rows) {
            double s = 0.0;
            bool complete = true;
            for (std::size_t col = 0; col < 5; ++col) {
                if (!row[col]) {
                    complete = false;
                    break;
                }
                s += *row[col];
            }
            if (complete) row[5] = s / 5.0;
        }
    }
    for (std::size_t col = 0; col < 6; ++col) {
        if (t.cells[0][0][col] && t.cells[1][0][col]) {
            t.both_targets[col] = (*t.cells[0][0][col] + *t.cells[1][0][col]) / 2.0;
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Hypotheses
// ---------------------------------------------------------------------------

std::map<std::string, double> base_samples(std::span<const ScoreRecord> records, LearnerKind model, BaseKind base_kind,
                                           FeatureSet features, Behavior behavior, int category, PiVariant variant) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        const auto& s = r.spec;
        if (s.model != model || s.base.kind != base_kind || s.features != features || s.behavior != behavior ||
            s.category != category || !selected_for_report(s, variant)) {
            continue;
        }
        auto& a = acc[s.base.base_id];
        a.first += r.cv.mean_f1;
        a.second += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [id, a] : acc) out[id] = a.first / static_cast<double>(a.second);
    return out;
}

namespace {

std::string group_label(LearnerKind m, BaseKind b, FeatureSet f, Behavior beh, int category) {
    return std::string(learner_code(m)) + "/" + std::string(base_kind_code(b)) + "/" + std::string(feature_set_code(f)) +
           "/" + std::string(behavior_code(beh)) + "/c" + std::to_string(category);
}

}  // namespace

HypothesisSuite hypothesis_suite(std::span<const ScoreRecord> records, const ReportOptions& options) {
    HypothesisSuite suite;
    std::set<std::string> gap_seen;
    auto gap = [&](std::string text) {
        if (gap_seen.insert(text).second) suite.gaps.push_back({std::move(text)});
    };

    for (int h = 1; h <= 3; ++h) {
        for (auto model : kAllLearners) {
            for (auto base : {BaseKind::ProductBased, BaseKind::UserBased}) {
                for (bool slots : {true, false}) {
                    const FeatureSet viewing = slots ? FeatureSet::ViewWeekdaySlot : FeatureSet::ViewWeekday;
                    const FeatureSet combined =
                        slots ? FeatureSet::ViewWeekdaySlotPlusDemo : FeatureSet::ViewWeekdayPlusDemo;
                    const FeatureSet a = h == 1 ? viewing : combined;
                    const FeatureSet b = h == 3 ? viewing : FeatureSet::Demographics;
                    for (auto behavior : {Behavior::ActualPurchase, Behavior::PurchaseIntention}) {
                        for (int c = 0; c < kCategories; ++c) {
                            const auto sa = base_samples(records, model, base, a, behavior, c, options.pi_variant);
                            const auto sb = base_samples(records, model, base, b, behavior, c, options.pi_variant);
                            const auto la = group_label(model, base, a, behavior, c);
                            const auto lb = group_label(model, base, b, behavior, c);
                            bool ok = true;
                            for (const auto* s : {&sa, &sb}) {
                                const auto& label = s == &sa ? la : lb;
                                if (s->empty()) {
                                    gap("missing configuration " + label);
                                    ok = false;
                                } else if (s->size() < 2) {
                                    gap("fewer than two bases for " + label);
                                    ok = false;
                                }
                            }
                            std::vector<double> va, vb;
                            if (ok && options.paired) {
                                for (const auto& [id, v] : sa) {
                                    auto it = sb.find(id);
                                    if (it == sb.end()) continue;
                                    va.push_back(v);
                                    vb.push_back(it->second);
                                }
                                if (va.size() < 2) {
                                    gap("fewer than two paired bases for " + la + " vs " + lb);
                                    ok = false;
                                }
                            } else if (ok) {
                                for (const auto& [id, v] : sa) va.push_back(v);
                                for (const auto& [id, v] : sb) vb.push_back(v);
                            }
                            if (!ok) continue;
                            HypothesisRow row;
                            row.hypothesis = h;
                            row.model = model;
                            row.base_kind = base;
                            row.time_slots = slots;
                            row.behavior = behavior;
                            row.category = c;
                            row.config_a = a;
                            row.config_b = b;
                            row.test = options.paired ? paired_t_test(va, vb) : welch_t_test(va, vb);
                            row.test.group_a = la;
                            row.test.group_b = lb;
                            row.test.category = c;
                            row.test.behavior = behavior;
                            suite.rows.push_back(std::move(row));
                        }
                    }
                }
            }
        }
    }
    return suite;
}

}  // namespace adbench
