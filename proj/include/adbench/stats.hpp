#pragma once

#include "adbench/experiment.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adbench {

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with `df` degrees of freedom (df > 0, may be
/// fractional).
double student_t_sf(double t, double df);

// ---------------------------------------------------------------------------
// t-tests
// ---------------------------------------------------------------------------

struct TTestReport {
    std::string group_a;
    std::string group_b;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double t_stat = 0.0;  // NaN when both samples are constant
    double df = 0.0;
    double p_value = 1.0;  // two-sided; NaN when both samples are constant
    int category = 0;
    Behavior behavior = Behavior::ActualPurchase;
};

/// Two-sided unequal-variance test. Throws ValidationError if either sample
/// has fewer than two values.
TTestReport welch_t_test(std::span<const double> a, std::span<const double> b);

/// Two-sided paired test on the differences a_i - b_i. NaN when every
/// difference is identical.
TTestReport paired_t_test(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Which PI-feature variant stands for a demographic column when predicting
/// Actual Purchase.
enum class PiVariant : std::uint8_t { With, Without };

struct GroupBy {
    bool behavior = true;
    bool category = true;
    bool features = true;
    bool model = true;
    bool base_kind = true;
};

/// Group key; fields not grouped on are nullopt.
struct AggregateKey {
    std::optional<Behavior> behavior;
    std::optional<int> category;
    std::optional<FeatureSet> features;
    std::optional<LearnerKind> model;
    std::optional<BaseKind> base_kind;
    auto operator<=>(const AggregateKey&) const = default;
};

struct GroupMean {
    double mean_f1 = 0.0;
    std::size_t count = 0;
};

/// Records that stand for a table column: redundant paper-accounting
/// duplicates are dropped, and for demographic inputs predicting Actual
/// Purchase only the chosen PI variant is kept.
bool selected_for_report(const ExperimentSpec& spec, PiVariant variant);

/// Arithmetic mean of mean_f1 within each group of the selected records.
/// Throws ValidationError when `records` is empty.
std::map<AggregateKey, GroupMean> aggregate(std::span<const ScoreRecord> records, const GroupBy& group_by,
                                            PiVariant variant = PiVariant::With);

enum class GeneralAverage : std::uint8_t {
    MeanOfCategoryMeans,  // reported statistic
    MeanOfExperiments,
};

/// One averages table per (model, base kind). Cells are nullopt where the
/// store has no records.
struct AverageTable {
    LearnerKind model = LearnerKind::SVM;
    BaseKind base_kind = BaseKind::ProductBased;
    /// [behavior][row][column]; row 0 = General Average, rows 1..6 =
    /// categories 0..5; columns 0..4 = kAllFeatureSets, column 5 = Total
    /// Average.
    std::array<std::array<std::array<std::optional<double>, 6>, 7>, 2> cells{};
    /// Both-targets Total Average row (mean of the two General Averages).
    std::array<std::optional<double>, 6> both_targets{};
};

struct ReportOptions {
    PiVariant pi_variant = PiVariant::With;
    GeneralAverage general_average = GeneralAverage::MeanOfCategoryMeans;
    bool paired = false;
};

AverageTable average_table(std::span<const ScoreRecord> records, LearnerKind model, BaseKind base_kind,
                           const ReportOptions& options = {});

// ---------------------------------------------------------------------------
// Hypotheses
//   H1: viewing-only vs demographics-only
//   H2: viewing+demographics vs demographics-only
//   H3: viewing+demographics vs viewing-only
// each for the weekday-time-slot and weekday-only viewing variants.
// ---------------------------------------------------------------------------

struct HypothesisRow {
    int hypothesis = 1;
    LearnerKind model = LearnerKind::SVM;
    BaseKind base_kind = BaseKind::ProductBased;
    bool time_slots = true;  // viewing variant
    Behavior behavior = Behavior::ActualPurchase;
    int category = 0;
    FeatureSet config_a = FeatureSet::ViewWeekdaySlot;
    FeatureSet config_b = FeatureSet::Demographics;
    TTestReport test;
};

struct Gap {
    std::string description;
};

struct HypothesisSuite {
    std::vector<HypothesisRow> rows;
    std::vector<Gap> gaps;
};

/// Compares per-base mean F1 samples for every (hypothesis, model, base kind,
/// viewing variant, behavior, category) present in `records`' model and base
/// selection. Missing groups or undersized samples become gaps.
HypothesisSuite hypothesis_suite(std::span<const ScoreRecord> records, const ReportOptions& options = {});

/// Samples for one comparison: per-base mean F1 keyed by base id.
std::map<std::string, double> base_samples(std::span<const ScoreRecord> records, LearnerKind model, BaseKind base_kind,
                                           FeatureSet features, Behavior behavior, int category, PiVariant variant);

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

struct ReportSummary {
    std::vector<std::filesystem::path> files;
    std::vector<Gap> gaps;
};

/// Writes averages_<model>_<base>.tsv (one per model and base kind),
/// pvalues_h<N>_<AP|PI>.tsv (one per hypothesis and behavior), report.json,
/// and gaps.tsv when anything is missing.
ReportSummary write_report(std::span<const ScoreRecord> records, const std::filesystem::path& out_dir,
                           const ReportOptions& options = {});

}  // namespace adbench
