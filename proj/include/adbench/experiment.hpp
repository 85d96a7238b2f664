#pragma once

#include "adbench/eval.hpp"
#include "adbench/features.hpp"
#include "adbench/learners.hpp"
#include "adbench/targets.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace adbench {

/// One cell of the experiment matrix.
struct ExperimentSpec {
    LearnerKind model = LearnerKind::SVM;
    ModelBase base;
    FeatureSet features = FeatureSet::ViewWeekdaySlot;
    /// Requested PI-feature state. In paper-accounting mode this is toggled
    /// for every configuration; the feature is only present when
    /// pi_feature_effective() holds.
    bool pi_toggle = false;
    Behavior behavior = Behavior::ActualPurchase;
    int category = 0;
    int k = 5;
    std::uint64_t seed = 0;

    bool pi_feature_effective() const noexcept {
        return pi_toggle && has_demographics(features) && behavior == Behavior::ActualPurchase;
    }
    /// Toggled on but without effect: a paper-accounting duplicate.
    bool redundant() const noexcept { return pi_toggle && !pi_feature_effective(); }

    InputConfig input() const noexcept { return {features, pi_feature_effective()}; }

    /// Stable identity, e.g. "gbrt|product|p001|weekday_slot|pi1|AP|c4|k5".
    /// Excludes the seed, which is derived from it.
    std::string identity() const;

    bool operator==(const ExperimentSpec&) const = default;
};

struct ScoreRecord {
    ExperimentSpec spec;
    CvResult cv;
    bool operator==(const ScoreRecord&) const = default;
};

struct FailureRecord {
    ExperimentSpec spec;
    std::string reason;
    bool operator==(const FailureRecord&) const = default;
};

/// Executed experiments, each list sorted by identity.
struct ScoreStore {
    std::vector<ScoreRecord> records;
    std::vector<FailureRecord> failures;
    bool operator==(const ScoreStore&) const = default;
};

// Delimited-text rows of the result store (see docs/result_store.md).

extern const std::string_view kResultsHeader;
extern const std::string_view kFailuresHeader;

std::string format_result_row(const ScoreRecord& record);
std::string format_failure_row(const FailureRecord& record);
/// Throws ParseError (with `file`/`line`) on malformed rows.
ScoreRecord parse_result_row(std::string_view line, const std::string& file = "results.tsv", std::size_t line_no = 0);
FailureRecord parse_failure_row(std::string_view line, const std::string& file = "failures.tsv",
                                std::size_t line_no = 0);

/// Shortest round-trip decimal form of a double; NaN prints as "nan".
std::string format_double(double v);

}  // namespace adbench
