#pragma once

#include "adbench/data_model.hpp"
#include "adbench/eval.hpp"
#include "adbench/experiment.hpp"
#include "adbench/exposure.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adbench {

enum class AccountingMode : std::uint8_t {
    /// Every semantically distinct experiment once; the PI toggle only
    /// exists where the feature can be present.
    Canonical,
    /// Both PI-toggle states for every configuration, target and base,
    /// including toggles that change nothing. Reproduces the published
    /// experiment counts.
    Paper,
};

std::string_view accounting_code(AccountingMode m);  // "canonical" / "paper"

struct MatrixConfig {
    std::vector<LearnerKind> models{kAllLearners.begin(), kAllLearners.end()};
    std::vector<BaseKind> base_kinds{BaseKind::ProductBased, BaseKind::UserBased};
    /// nullopt: every advert-matched product / every user.
    std::optional<std::vector<std::string>> product_ids;
    std::optional<std::vector<std::string>> user_ids;
    std::vector<FeatureSet> feature_sets{kAllFeatureSets.begin(), kAllFeatureSets.end()};
    std::vector<bool> pi_toggles{false, true};
    std::vector<Behavior> behaviors{Behavior::ActualPurchase, Behavior::PurchaseIntention};
    std::vector<int> categories{0, 1, 2, 3, 4, 5};
    int k = 5;
    AccountingMode accounting = AccountingMode::Canonical;
    LearnerParams params;
    Averaging averaging = Averaging::PerFold;
    bool standardize = false;
    std::uint64_t global_seed = 0;
    int workers = 1;
};

/// Structured-text (JSON) form of MatrixConfig. Unknown keys are rejected.
MatrixConfig parse_matrix_config(std::string_view json_text);
std::string matrix_config_to_json(const MatrixConfig& config);

/// Ids the experiment matrix ranges over.
struct BaseUniverse {
    std::vector<std::string> products;  // advert-matched
    std::vector<std::string> users;
};

BaseUniverse universe_of(const Catalog& catalog);

struct EnumerationCounts {
    std::size_t bases = 0;
    std::size_t inputs = 0;  // distinct (base, feature set, PI toggle) triples
    std::size_t targets = 0;  // behaviors x categories
    std::size_t total = 0;
    std::map<LearnerKind, std::size_t> per_model;
    std::map<std::pair<LearnerKind, BaseKind>, std::size_t> per_model_base;
};

struct RunManifest {
    std::uint64_t global_seed = 0;
    std::string catalog_fingerprint;
    AccountingMode accounting = AccountingMode::Canonical;
    std::size_t spec_count = 0;
    EnumerationCounts counts;
    std::string matrix_config_json;
    double wall_seconds = 0.0;
    std::size_t executed = 0;
    std::size_t failed = 0;
    bool complete = false;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest parse_manifest(std::string_view json_text);

struct Enumeration {
    std::vector<ExperimentSpec> specs;
    RunManifest manifest;
};

/// Deterministic, duplicate-free enumeration. Order: base kind, base id,
/// feature set, PI toggle, behavior, category, model. Throws
/// ValidationError on empty selections or unknown base ids.
Enumeration enumerate_experiments(const BaseUniverse& universe, const MatrixConfig& config);
Enumeration enumerate_experiments(const Catalog& catalog, const MatrixConfig& config);

/// Closed-form counts for a universe of the given size (no enumeration).
EnumerationCounts count_experiments(std::size_t n_products, std::size_t n_users, const MatrixConfig& config);

// ---------------------------------------------------------------------------
// Result store
//
//   journal.tsv   append-only log written while running (completion order)
//   results.tsv   successful experiments sorted by identity
//   failures.tsv  failed experiments sorted by identity
//
// finalize() folds the journal into the two sorted tables and removes it.
// ---------------------------------------------------------------------------

class ResultStore {
public:
    explicit ResultStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path results_path() const { return dir_ / "results.tsv"; }
    std::filesystem::path failures_path() const { return dir_ / "failures.tsv"; }
    std::filesystem::path journal_path() const { return dir_ / "journal.tsv"; }

    /// Thread-safe; rows are flushed before returning.
    void append(const std::vector<ScoreRecord>& records, const std::vector<FailureRecord>& failures);

    /// Everything recorded so far (tables plus journal). A torn final
    /// journal line is ignored.
    ScoreStore load() const;
    std::set<std::string> completed_identities() const;

    void finalize();

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
};

struct ProgressEvent {
    std::size_t done = 0;
    std::size_t total = 0;
    std::size_t failed = 0;
    std::string identity;
};

struct RunOptions {
    int workers = 1;
    ResultStore* store = nullptr;
    /// Stop after this many experiments (simulated interruption); the store
    /// is left unfinalized.
    std::optional<std::size_t> max_specs;
    std::function<void(const ProgressEvent&)> progress;
    LearnerParams params;
    CvOptions cv;
};

struct RunContext {
    const CatalogIndex& catalog;
    const ExposureMatrix& exposure;
};

/// Executes every spec once. Specs sharing a feature matrix are grouped;
/// groups run concurrently (OpenMP). Failures are recorded, never thrown.
/// Returns the records executed by this call, sorted by identity.
ScoreStore run_matrix(std::span<const ExperimentSpec> specs, const RunContext& context, const RunOptions& options);

/// One spec at a time, no grouping, no threads. Reference for run_matrix.
ScoreStore run_matrix_serial(std::span<const ExperimentSpec> specs, const RunContext& context,
                             const LearnerParams& params, const CvOptions& cv = {});

/// Runs one spec; throws on failure.
ScoreRecord run_experiment(const ExperimentSpec& spec, const RunContext& context, const LearnerParams& params,
                           const CvOptions& cv = {});

/// Specs of the manifest's matrix not yet in the store. Throws
/// ValidationError when the catalog's fingerprint differs from the
/// manifest's.
std::vector<ExperimentSpec> resume(const RunManifest& manifest, const ResultStore& store, const Catalog& catalog);

}  // namespace adbench
