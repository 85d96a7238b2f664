#pragma once

#include "adbench/learners.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adbench {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    Confusion& operator+=(const Confusion& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const Confusion&) const = default;
};

Confusion confusion_of(std::span<const int> truth, std::span<const int> predicted);

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool operator==(const Metrics&) const = default;
};

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R); each is 0
/// when its denominator is 0.
Metrics metrics(const Confusion& c) noexcept;

struct FoldResult {
    int fold_index = 0;
    Confusion confusion;
    Metrics scores;
    bool operator==(const FoldResult&) const = default;
};

enum class Averaging : std::uint8_t {
    PerFold,  // arithmetic mean of per-fold metrics (reported statistic)
    Pooled,   // metrics of the summed confusion
};

struct CvResult {
    std::vector<FoldResult> folds;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
    bool operator==(const CvResult&) const = default;
};

/// Shuffled split of 0..n_rows-1 into k folds whose sizes differ by at most
/// one (the first n_rows % k folds are larger). Each fold is sorted.
/// Throws ValidationError unless n_rows >= k >= 2.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_rows, int k, std::uint64_t seed);

struct CvOptions {
    Averaging averaging = Averaging::PerFold;
    /// z-score every column with the training fold's mean and deviation.
    bool standardize = false;
    /// Folds trained concurrently; results do not depend on this.
    int workers = 1;
};

CvResult cross_validate(const FeatureMatrix& x, std::span<const int> y, LearnerKind learner,
                        const LearnerParams& params, int k, std::uint64_t seed, const CvOptions& options = {});

/// Rows `rows` of x, without row keys.
FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows);

}  // namespace adbench
