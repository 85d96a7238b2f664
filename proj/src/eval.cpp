#include "adbench/eval.hpp"

#include "adbench/error.hpp"
#include "adbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace adbench {

Confusion confusion_of(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw ValidationError("truth and prediction lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i]) {
            (truth[i] ? c.tp : c.fp) += 1;
        } else {
            (truth[i] ? c.fn : c.tn) += 1;
        }
    }
    return c;
}

Metrics metrics(const Confusion& c) noexcept {
    Metrics m;
    const auto tp = static_cast<double>(c.tp);
    if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_rows, int k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("k must be at least 2");
    if (n_rows < static_cast<std::size_t>(k)) {
        throw ValidationError("cannot split " + std::to_string(n_rows) + " rows into " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> perm(n_rows);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));

    const auto kk = static_cast<std::size_t>(k);
    std::vector<std::vector<std::size_t>> folds(kk);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < kk; ++f) {
        const std::size_t size = n_rows / kk + (f < n_rows % kk ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[f].begin(), folds[f].end());
        pos += size;
    }
    return folds;
}

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
    FeatureMatrix out;
    out.rows = rows.size();
    out.dims = x.dims;
    out.feature_names = x.feature_names;
    out.values.reserve(rows.size() * x.dims);
    for (auto r : rows) {
        const auto row = x.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

namespace {

void standardize_pair(FeatureMatrix& train, FeatureMatrix& test) {
    for (std::size_t c = 0; c < train.dims; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < train.rows; ++r) mean += train.at(r, c);
        mean /= static_cast<double>(train.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < train.rows; ++r) var += (train.at(r, c) - mean) * (train.at(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(train.rows));
        const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t r = 0; r < train.rows; ++r) train.values[r * train.dims + c] = (train.at(r, c) - mean) * scale;
        for (std::size_t r = 0; r < test.rows; ++r) test.values[r * test.dims + c] = (test.at(r, c) - mean) * scale;
    }
}

FoldResult run_fold(const FeatureMatrix& x, std::span<const int> y, LearnerKind learner, const LearnerParams& params,
                    const std::vector<std::vector<std::size_t>>& folds, std::size_t f, bool standardize) {
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    FeatureMatrix x_train = select_rows(x, train_rows);
    FeatureMatrix x_test = select_rows(x, folds[f]);
    if (standardize) standardize_pair(x_train, x_test);
    std::vector<int> y_train, y_test;
    for (auto r : train_rows) y_train.push_back(y[r]);
    for (auto r : folds[f]) y_test.push_back(y[r]);

    const Model model = train(learner, x_train, y_train, params);
    const auto predicted = predict(model, x_test);
    FoldResult result;
    result.fold_index = static_cast<int>(f);
    result.confusion = confusion_of(y_test, predicted);
    result.scores = metrics(result.confusion);
    return result;
}

}  // namespace

CvResult cross_validate(const FeatureMatrix& x, std::span<const int> y, LearnerKind learner,
                        const LearnerParams& params, int k, std::uint64_t seed, const CvOptions& options) {
    if (y.size() != x.rows) throw ValidationError("label count does not match matrix rows");
    const auto folds = kfold_split(x.rows, k, seed);

    CvResult cv;
    cv.folds.resize(folds.size());
    std::exception_ptr failure;
    const auto n_folds = static_cast<std::ptrdiff_t>(folds.size());
#pragma omp parallel for schedule(static, 1) num_threads(std::max(1, options.workers)) if (options.workers > 1)
    for (std::ptrdiff_t f = 0; f < n_folds; ++f) {
        try {
            cv.folds[static_cast<std::size_t>(f)] =
                run_fold(x, y, learner, params, folds, static_cast<std::size_t>(f), options.standardize);
        } catch (...) {
#pragma omp critical(adbench_cv_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    if (options.averaging == Averaging::Pooled) {
        Confusion total;
        for (const auto& f : cv.folds) total += f.confusion;
        const Metrics m = metrics(total);
        cv.mean_precision = m.precision;
        cv.mean_recall = m.recall;
        cv.mean_f1 = m.f1;
    } else {
        for (const auto& f : cv.folds) {
            cv.mean_precision += f.scores.precision;
            cv.mean_recall += f.scores.recall;
            cv.mean_f1 += f.scores.f1;
        }
        const auto n = static_cast<double>(cv.folds.size());
        cv.mean_precision /= n;
        cv.mean_recall /= n;
        cv.mean_f1 /= n;
    }
    return cv;
}

}  // namespace adbench
