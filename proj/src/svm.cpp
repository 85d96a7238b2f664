// Linear soft-margin SVM trained in the dual with two-variable SMO steps and
// second-order working-set selection. The bias is unregularized, so the dual
// keeps its equality constraint and pairs are updated together.

#include "learner_common.hpp"

#include <cstdint>
#include <limits>

namespace adbench {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dual state. `yg[t]` is y_t * (Q alpha - e)_t, the form both selection
/// rules read.
class Smo {
public:
    Smo(const detail::Dataset& data, double c) : data_(data), n_(data.rows), c_(c) {
        alpha_.assign(n_, 0.0);
        w_.assign(data.dims, 0.0);
        sign_.resize(n_);
        yg_.resize(n_);
        diag_.resize(n_);
        up_.resize(n_);
        low_.resize(n_);
        for (std::size_t t = 0; t < n_; ++t) {
            sign_[t] = data.y[t] ? 1.0 : -1.0;
            yg_[t] = -sign_[t];
            diag_[t] = detail::dot(data.row(t), data.row(t), data.dims);
            refresh_status(t);
        }
        active_.resize(n_);
        for (std::size_t t = 0; t < n_; ++t) active_[t] = t;
        if (n_ <= kGramLimit) {
            gram_.resize(n_ * n_);
            for (std::size_t a = 0; a < n_; ++a) {
                for (std::size_t b = a; b < n_; ++b) {
                    const double v = detail::dot(data.row(a), data.row(b), data.dims);
                    gram_[a * n_ + b] = v;
                    gram_[b * n_ + a] = v;
                }
            }
        } else {
            row_i_.resize(n_);
            row_j_.resize(n_);
        }
    }

    /// Runs until the maximal KKT violation drops below `tol` or `max_iter`
    /// pair updates have been made. Returns the update count.
    long long solve(double tol, long long max_iter, long long per_epoch, TrainingTrace* trace, bool& converged) {
        const long long shrink_every = static_cast<long long>(std::min<std::size_t>(n_, 1000));
        long long countdown = shrink_every;
        long long iter = 0;
        converged = false;
        for (; iter < max_iter; ++iter) {
            if (trace && iter % per_epoch == 0) trace->objective.push_back(dual_objective());
            if (--countdown == 0) {
                countdown = shrink_every;
                shrink(tol);
            }
            std::size_t i = 0;
            std::size_t j = 0;
            if (!select(tol, i, j)) {
                if (active_.size() == n_) {
                    converged = true;
                    break;
                }
                // Optimal on the active set only: restore every variable.
                reconstruct();
                countdown = 1;
                if (!select(tol, i, j)) {
                    converged = true;
                    break;
                }
            }
            update(i, j);
        }
        if (active_.size() != n_) reconstruct();
        return iter;
    }

    const std::vector<double>& weights() const { return w_; }

    double dual_objective() const {
        double a = 0.0;
        for (double v : alpha_) a += v;
        return 0.5 * detail::dot(w_.data(), w_.data(), w_.size()) - a;
    }

    double rho() const {
        double ub = kInf;
        double lb = -kInf;
        double free_sum = 0.0;
        std::size_t free_count = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            const double v = yg_[t];
            if (at_upper(t)) {
                if (sign_[t] < 0) ub = std::min(ub, v);
                else lb = std::max(lb, v);
            } else if (at_lower(t)) {
                if (sign_[t] > 0) ub = std::min(ub, v);
                else lb = std::max(lb, v);
            } else {
                ++free_count;
                free_sum += v;
            }
        }
        return free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;
    }

private:
    static constexpr std::size_t kGramLimit = 2048;

    bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
    bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

    void refresh_status(std::size_t t) {
        up_[t] = sign_[t] > 0 ? !at_upper(t) : !at_lower(t);
        low_[t] = sign_[t] > 0 ? !at_lower(t) : !at_upper(t);
    }

    const double* kernel_row(std::size_t r, std::vector<double>& scratch) const {
        if (!gram_.empty()) return gram_.data() + r * n_;
        for (std::size_t t : active_) scratch[t] = detail::dot(data_.row(r), data_.row(t), data_.dims);
        return scratch.data();
    }

    /// Maximal violating pair with second-order choice of j. False when the
    /// active set satisfies the KKT conditions to `tol`.
    bool select(double tol, std::size_t& i, std::size_t& j) {
        double g_max = -kInf;
        std::ptrdiff_t best_i = -1;
        for (std::size_t t : active_) {
            if (up_[t] && -yg_[t] > g_max) {
                g_max = -yg_[t];
                best_i = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (best_i < 0) return false;
        i = static_cast<std::size_t>(best_i);
        k_i_ = kernel_row(i, row_i_);

        double g_max2 = -kInf;
        double best_obj = kInf;
        std::ptrdiff_t best_j = -1;
        const double d_i = diag_[i];
        for (std::size_t t : active_) {
            if (!low_[t]) continue;
            const double v = yg_[t];
            if (v > g_max2) g_max2 = v;
            const double grad_diff = g_max + v;
            if (grad_diff > 0) {
                double quad = d_i + diag_[t] - 2.0 * k_i_[t];
                if (quad <= 0) quad = kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj < best_obj) {
                    best_obj = obj;
                    best_j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        if (best_j < 0 || g_max + g_max2 < tol) return false;
        j = static_cast<std::size_t>(best_j);
        return true;
    }

    void update(std::size_t i, std::size_t j) {
        const double c = c_;
        const double old_ai = alpha_[i];
        const double old_aj = alpha_[j];
        double quad = diag_[i] + diag_[j] - 2.0 * k_i_[j];
        if (quad <= 0) quad = kTau;
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        const double gi = sign_[i] * yg_[i];
        const double gj = sign_[j] * yg_[j];
        if (sign_[i] != sign_[j]) {
            const double delta = (-gi - gj) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) {
                    aj = 0;
                    ai = diff;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = -diff;
            }
            if (diff > 0) {
                if (ai > c) {
                    ai = c;
                    aj = c - diff;
                }
            } else if (aj > c) {
                aj = c;
                ai = c + diff;
            }
        } else {
            const double delta = (gi - gj) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c) {
                if (ai > c) {
                    ai = c;
                    aj = sum - c;
                }
            } else if (aj < 0) {
                aj = 0;
                ai = sum;
            }
            if (sum > c) {
                if (aj > c) {
                    aj = c;
                    ai = sum - c;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = sum;
            }
        }
        refresh_status(i);
        refresh_status(j);

        const double di = (ai - old_ai) * sign_[i];
        const double dj = (aj - old_aj) * sign_[j];
        const double* xi = data_.row(i);
        const double* xj = data_.row(j);
        for (std::size_t f = 0; f < data_.dims; ++f) w_[f] += di * xi[f] + dj * xj[f];
        const double* k_j = kernel_row(j, row_j_);
        for (std::size_t t : active_) yg_[t] += di * k_i_[t] + dj * k_j[t];
    }

    /// Drops variables pinned at a bound that no longer violate optimality
    /// against the current extremes.
    void shrink(double tol) {
        double g_up = -kInf;
        double g_low = -kInf;
        for (std::size_t t : active_) {
            if (up_[t]) g_up = std::max(g_up, -yg_[t]);
            if (low_[t]) g_low = std::max(g_low, yg_[t]);
        }
        if (!unshrunk_ && g_up + g_low <= 10.0 * tol) {
            unshrunk_ = true;
            reconstruct();
        }
        std::size_t kept = 0;
        for (std::size_t t : active_) {
            bool out = false;
            if (at_upper(t)) {
                out = sign_[t] > 0 ? -yg_[t] > g_up : yg_[t] > g_low;
            } else if (at_lower(t)) {
                out = sign_[t] > 0 ? yg_[t] > g_low : -yg_[t] > g_up;
            }
            if (!out) active_[kept++] = t;
        }
        active_.resize(kept);
    }

    /// Recomputes every gradient from w and reactivates all variables.
    void reconstruct() {
        for (std::size_t t = 0; t < n_; ++t) {
            yg_[t] = detail::dot(w_.data(), data_.row(t), data_.dims) - sign_[t];
        }
        active_.resize(n_);
        for (std::size_t t = 0; t < n_; ++t) active_[t] = t;
    }

    const detail::Dataset& data_;
    std::size_t n_;
    double c_;
    std::vector<double> alpha_;
    std::vector<double> w_;
    std::vector<double> sign_;
    std::vector<double> yg_;
    std::vector<double> diag_;
    std::vector<std::uint8_t> up_;
    std::vector<std::uint8_t> low_;
    std::vector<std::size_t> active_;
    std::vector<double> gram_;
    std::vector<double> row_i_;
    std::vector<double> row_j_;
    const double* k_i_ = nullptr;
    bool unshrunk_ = false;
};

}  // namespace

LinearModel train_svm(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                      TrainingTrace* trace) {
    validate_params(params);
    const detail::Dataset data = detail::canonical_dataset(x, y);
    LinearModel model;
    model.kind = LinearKind::SVM;
    model.weights.assign(data.dims, 0.0);

    if (data.positives == 0 || data.positives == data.rows) {
        model.bias = data.positives == 0 ? -1.0 : 1.0;
        if (trace) trace->converged = true;
        return model;
    }

    // One epoch touches every coordinate once on average; a pair step
    // touches two.
    Smo smo(data, params.svm_c);
    const auto per_epoch = static_cast<long long>((data.rows + 1) / 2);
    const long long max_iter = static_cast<long long>(params.svm_max_epochs) * per_epoch;
    bool converged = false;
    const long long iter = smo.solve(params.svm_tolerance, max_iter, per_epoch, trace, converged);

    model.weights = smo.weights();
    model.bias = -smo.rho();
    if (trace) {
        trace->objective.push_back(smo.dual_objective());
        trace->iterations = static_cast<int>(std::min<long long>(iter, std::numeric_limits<int>::max()));
        trace->converged = converged;
    }
    return model;
}

double svm_primal_objective(const LinearModel& model, const FeatureMatrix& x, std::span<const int> y, double c) {
    double hinge = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double s = y[r] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - s * model.decision(x.row(r)));
    }
    return 0.5 * detail::dot(model.weights.data(), model.weights.data(), model.weights.size()) + c * hinge;
}

}  // namespace adbench
