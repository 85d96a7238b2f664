// L2-penalized logistic regression fitted by damped Newton steps with a
// backtracking (Armijo) line search. The bias is the last coordinate and is
// not penalized.

#include "learner_common.hpp"

namespace adbench {

namespace {

double objective_on(const detail::Dataset& d, const std::vector<double>& theta, double l2) {
    const std::size_t dims = d.dims;
    double f = 0.0;
    for (std::size_t r = 0; r < d.rows; ++r) {
        const double z = detail::dot(theta.data(), d.row(r), dims) + theta[dims];
        f += detail::softplus(z) - (d.y[r] ? z : 0.0);
    }
    double penalty = 0.0;
    for (std::size_t j = 0; j < dims; ++j) penalty += theta[j] * theta[j];
    return f + 0.5 * l2 * penalty;
}

/// Solves A x = b for symmetric positive definite A (row-major, n x n) by
/// Cholesky. Returns false if a pivot is not positive.
bool cholesky_solve(std::vector<double> a, std::vector<double>& b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (!(diag > 0.0)) return false;
        const double l_jj = std::sqrt(diag);
        a[j * n + j] = l_jj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / l_jj;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
        b[ii] = v / a[ii * n + ii];
    }
    return true;
}

}  // namespace

LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                         TrainingTrace* trace) {
    validate_params(params);
    const detail::Dataset d = detail::canonical_dataset(x, y);
    const std::size_t dims = d.dims;
    const std::size_t n = dims + 1;
    const double l2 = params.logreg_l2;

    LinearModel model;
    model.kind = LinearKind::Logistic;
    model.weights.assign(dims, 0.0);
    if (d.positives == 0 || d.positives == d.rows) {
        model.bias = detail::clamped_log_odds(static_cast<double>(d.positives) / static_cast<double>(d.rows));
        if (trace) trace->converged = true;
        return model;
    }

    std::vector<double> theta(n, 0.0);
    std::vector<double> grad(n), hess(n * n), step(n), candidate(n), prob(d.rows);
    double f = objective_on(d, theta, l2);
    bool converged = false;
    int it = 0;
    for (; it < params.logreg_max_newton_steps; ++it) {
        if (trace) trace->objective.push_back(f);
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t r = 0; r < d.rows; ++r) {
            const double* xr = d.row(r);
            const double p = detail::sigmoid(detail::dot(theta.data(), xr, dims) + theta[dims]);
            const double resid = p - d.y[r];
            const double s = p * (1.0 - p);
            for (std::size_t j = 0; j < dims; ++j) {
                grad[j] += resid * xr[j];
                const double sxj = s * xr[j];
                for (std::size_t k = 0; k <= j; ++k) hess[j * n + k] += sxj * xr[k];
                hess[dims * n + j] += sxj;
            }
            grad[dims] += resid;
            hess[dims * n + dims] += s;
        }
        double g_inf = 0.0;
        for (std::size_t j = 0; j < dims; ++j) {
            grad[j] += l2 * theta[j];
            hess[j * n + j] += l2;
        }
        for (double g : grad) g_inf = std::max(g_inf, std::abs(g));
        if (g_inf < params.logreg_tolerance) {
            converged = true;
            break;
        }
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) hess[j * n + k] = hess[k * n + j];
        }

        // Newton direction; escalate a ridge if the Hessian is numerically singular.
        double ridge = 0.0;
        double trace_h = 0.0;
        for (std::size_t j = 0; j < n; ++j) trace_h += hess[j * n + j];
        while (true) {
            std::vector<double> a = hess;
            for (std::size_t j = 0; j < n; ++j) a[j * n + j] += ridge;
            for (std::size_t j = 0; j < n; ++j) step[j] = -grad[j];
            if (cholesky_solve(std::move(a), step, n)) break;
            ridge = ridge == 0.0 ? 1e-12 * std::max(trace_h, 1.0) : ridge * 10.0;
            if (ridge > 1e6 * std::max(trace_h, 1.0)) throw ExecutionError("logistic Newton system is singular");
        }

        double slope = 0.0;
        for (std::size_t j = 0; j < n; ++j) slope += grad[j] * step[j];
        double t = 1.0;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < n; ++j) candidate[j] = theta[j] + t * step[j];
            f_new = objective_on(d, candidate, l2);
            if (f_new <= f + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted || !(f_new < f)) {
            // No representable decrease left: the iterate is optimal to
            // working precision.
            converged = true;
            break;
        }
        theta.swap(candidate);
        f = f_new;
    }

    std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(dims), model.weights.begin());
    model.bias = theta[dims];
    if (trace) {
        trace->objective.push_back(f);
        trace->iterations = it;
        trace->converged = converged;
    }
    return model;
}

double logreg_objective(std::span<const double> weights, double bias, const FeatureMatrix& x, std::span<const int> y,
                        double l2) {
    double f = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double z = detail::dot(weights.data(), x.row(r).data(), x.dims) + bias;
        f += detail::softplus(z) - (y[r] ? z : 0.0);
    }
    return f + 0.5 * l2 * detail::dot(weights.data(), weights.data(), weights.size());
}

std::vector<double> logreg_gradient(std::span<const double> weights, double bias, const FeatureMatrix& x,
                                    std::span<const int> y, double l2) {
    std::vector<double> g(x.dims + 1, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const auto row = x.row(r);
        const double resid = detail::sigmoid(detail::dot(weights.data(), row.data(), x.dims) + bias) - y[r];
        for (std::size_t j = 0; j < x.dims; ++j) g[j] += resid * row[j];
        g[x.dims] += resid;
    }
    for (std::size_t j = 0; j < x.dims; ++j) g[j] += l2 * weights[j];
    return g;
}

}  // namespace adbench
