#include "adbench/runner.hpp"

#include "adbench/error.hpp"
#include "adbench/hashing.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view accounting_code(AccountingMode m) { return m == AccountingMode::Paper ? "paper" : "canonical"; }

namespace {

AccountingMode accounting_from_code(std::string_view code) {
    if (code == "paper") return AccountingMode::Paper;
    if (code == "canonical") return AccountingMode::Canonical;
    throw ValidationError("unknown accounting mode \"" + std::string(code) + "\"");
}

template <typename T, typename F>
std::vector<T> codes_to(const json& arr, const char* key, F from_code) {
    if (!arr.is_array()) throw ValidationError(std::string("config key \"") + key + "\" must be a list");
    std::vector<T> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ValidationError(std::string("config key \"") + key + "\" must list strings");
        const auto parsed = from_code(v.get<std::string>());
        if (!parsed) throw ValidationError(std::string("unknown value \"") + v.get<std::string>() + "\" in \"" + key + "\"");
        out.push_back(*parsed);
    }
    return out;
}

std::optional<std::vector<std::string>> id_list(const json& v, const char* key) {
    if (v.is_null()) return std::nullopt;
    if (v.is_string() && v.get<std::string>() == "all") return std::nullopt;
    if (!v.is_array()) throw ValidationError(std::string("config key \"") + key + "\" must be \"all\" or a list of ids");
    std::vector<std::string> ids;
    for (const auto& id : v) ids.push_back(id.get<std::string>());
    return ids;
}

void check_config(const MatrixConfig& c) {
    auto nonempty = [](bool empty, const char* what) {
        if (empty) throw ValidationError(std::string("empty selection: ") + what);
    };
    nonempty(c.models.empty(), "models");
    nonempty(c.base_kinds.empty(), "base_kinds");
    nonempty(c.feature_sets.empty(), "feature_sets");
    nonempty(c.pi_toggles.empty(), "pi_toggles");
    nonempty(c.behaviors.empty(), "behaviors");
    nonempty(c.categories.empty(), "categories");
    for (int cat : c.categories) {
        if (cat < 0 || cat >= kCategories) throw ValidationError("category out of range: " + std::to_string(cat));
    }
    if (c.k < 2) throw ValidationError("k must be at least 2");
    if (c.workers < 1) throw ValidationError("workers must be at least 1");
    validate_params(c.params);
}

template <typename T>
std::vector<T> dedup_sorted(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

/// (features, stored toggle, behavior) triples one base contributes, in
/// enumeration order.
struct InputPattern {
    FeatureSet features;
    bool toggle;
    Behavior behavior;
};

std::vector<InputPattern> base_pattern(const MatrixConfig& c) {
    const auto features = dedup_sorted(c.feature_sets);
    const auto toggles = dedup_sorted(c.pi_toggles);
    const auto behaviors = dedup_sorted(c.behaviors);
    std::vector<InputPattern> out;
    for (auto f : features) {
        for (bool t : {false, true}) {
            for (auto b : behaviors) {
                const bool effective_possible = has_demographics(f) && b == Behavior::ActualPurchase;
                bool emit = false;
                if (c.accounting == AccountingMode::Paper) {
                    emit = std::find(toggles.begin(), toggles.end(), t) != toggles.end();
                } else {
                    // The stored toggle is the effective state; collapse
                    // requested toggles onto it.
                    for (bool requested : toggles) {
                        if ((requested && effective_possible) == t) emit = true;
                    }
                }
                if (emit) out.push_back({f, t, b});
            }
        }
    }
    return out;
}

std::size_t distinct_inputs(const std::vector<InputPattern>& pattern, AccountingMode mode) {
    std::set<std::pair<FeatureSet, bool>> inputs;
    for (const auto& p : pattern) {
        const bool state = mode == AccountingMode::Paper
                               ? p.toggle
                               : (p.toggle && has_demographics(p.features) && p.behavior == Behavior::ActualPurchase);
        inputs.insert({p.features, state});
    }
    return inputs.size();
}

std::vector<std::string> select_ids(const std::vector<std::string>& all, const std::optional<std::vector<std::string>>& ids,
                                    const char* what) {
    if (!ids) return all;
    std::vector<std::string> out = dedup_sorted(*ids);
    for (const auto& id : out) {
        if (!std::binary_search(all.begin(), all.end(), id)) {
            throw ValidationError(std::string("unknown ") + what + " base id \"" + id + "\"");
        }
    }
    return out;
}

}  // namespace

MatrixConfig parse_matrix_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError("matrix config", 0, e.what());
    }
    if (!doc.is_object()) throw ValidationError("matrix config must be an object");
    MatrixConfig c;
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "models") {
                c.models = codes_to<LearnerKind>(v, "models", learner_from_code);
            } else if (key == "base_kinds") {
                c.base_kinds = codes_to<BaseKind>(v, "base_kinds", base_kind_from_code);
            } else if (key == "product_ids") {
                c.product_ids = id_list(v, "product_ids");
            } else if (key == "user_ids") {
                c.user_ids = id_list(v, "user_ids");
            } else if (key == "feature_sets") {
                c.feature_sets = codes_to<FeatureSet>(v, "feature_sets", feature_set_from_code);
            } else if (key == "pi_toggles") {
                c.pi_toggles = v.get<std::vector<bool>>();
            } else if (key == "behaviors") {
                c.behaviors = codes_to<Behavior>(v, "behaviors", behavior_from_code);
            } else if (key == "categories") {
                c.categories = v.get<std::vector<int>>();
            } else if (key == "k") {
                c.k = v.get<int>();
            } else if (key == "accounting") {
                c.accounting = accounting_from_code(v.get<std::string>());
            } else if (key == "averaging") {
                const auto s = v.get<std::string>();
                if (s == "per_fold") {
                    c.averaging = Averaging::PerFold;
                } else if (s == "pooled") {
                    c.averaging = Averaging::Pooled;
                } else {
                    throw ValidationError("unknown averaging \"" + s + "\"");
                }
            } else if (key == "standardize") {
                c.standardize = v.get<bool>();
            } else if (key == "global_seed") {
                c.global_seed = v.get<std::uint64_t>();
            } else if (key == "workers") {
                c.workers = v.get<int>();
            } else if (key == "params") {
                auto& p = c.params;
                for (const auto& [pk, pv] : v.items()) {
                    if (pk == "svm_c") p.svm_c = pv.get<double>();
                    else if (pk == "svm_tolerance") p.svm_tolerance = pv.get<double>();
                    else if (pk == "svm_max_epochs") p.svm_max_epochs = pv.get<int>();
                    else if (pk == "gbrt_lr") p.gbrt_lr = pv.get<double>();
                    else if (pk == "gbrt_max_depth") p.gbrt_max_depth = pv.get<int>();
                    else if (pk == "gbrt_n_estimators") p.gbrt_n_estimators = pv.get<int>();
                    else if (pk == "gbrt_lambda") p.gbrt_lambda = pv.get<double>();
                    else if (pk == "gbrt_min_child_weight") p.gbrt_min_child_weight = pv.get<double>();
                    else if (pk == "logreg_l2") p.logreg_l2 = pv.get<double>();
                    else if (pk == "logreg_tolerance") p.logreg_tolerance = pv.get<double>();
                    else if (pk == "logreg_max_newton_steps") p.logreg_max_newton_steps = pv.get<int>();
                    else throw ValidationError("unknown learner parameter \"" + pk + "\"");
                }
            } else {
                throw ValidationError("unknown matrix config key \"" + key + "\"");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("matrix config: ") + e.what());
    }
    check_config(c);
    return c;
}

std::string matrix_config_to_json(const MatrixConfig& c) {
    ordered_json doc;
    auto codes = [](const auto& items, auto to_code) {
        ordered_json arr = ordered_json::array();
        for (const auto& i : items) arr.push_back(std::string(to_code(i)));
        return arr;
    };
    doc["models"] = codes(c.models, learner_code);
    doc["base_kinds"] = codes(c.base_kinds, base_kind_code);
    doc["product_ids"] = c.product_ids ? ordered_json(*c.product_ids) : ordered_json("all");
    doc["user_ids"] = c.user_ids ? ordered_json(*c.user_ids) : ordered_json("all");
    doc["feature_sets"] = codes(c.feature_sets, feature_set_code);
    doc["pi_toggles"] = c.pi_toggles;
    doc["behaviors"] = codes(c.behaviors, behavior_code);
    doc["categories"] = c.categories;
    doc["k"] = c.k;
    doc["accounting"] = accounting_code(c.accounting);
    doc["averaging"] = c.averaging == Averaging::PerFold ? "per_fold" : "pooled";
    doc["standardize"] = c.standardize;
    doc["global_seed"] = c.global_seed;
    doc["workers"] = c.workers;
    const auto& p = c.params;
    doc["params"] = {{"svm_c", p.svm_c},
                     {"svm_tolerance", p.svm_tolerance},
                     {"svm_max_epochs", p.svm_max_epochs},
                     {"gbrt_lr", p.gbrt_lr},
                     {"gbrt_max_depth", p.gbrt_max_depth},
                     {"gbrt_n_estimators", p.gbrt_n_estimators},
                     {"gbrt_lambda", p.gbrt_lambda},
                     {"gbrt_min_child_weight", p.gbrt_min_child_weight},
                     {"logreg_l2", p.logreg_l2},
                     {"logreg_tolerance", p.logreg_tolerance},
                     {"logreg_max_newton_steps", p.logreg_max_newton_steps}};
    return doc.dump(2);
}

BaseUniverse universe_of(const Catalog& catalog) {
    BaseUniverse u;
    u.products = catalog.advert_matched_products();
    for (const auto& p : catalog.users) u.users.push_back(p.user_id);
    std::sort(u.users.begin(), u.users.end());
    return u;
}

EnumerationCounts count_experiments(std::size_t n_products, std::size_t n_users, const MatrixConfig& config) {
    check_config(config);
    const auto models = dedup_sorted(config.models);
    const auto kinds = dedup_sorted(config.base_kinds);
    const auto pattern = base_pattern(config);
    const std::size_t per_base_inputs = distinct_inputs(pattern, config.accounting);
    const std::size_t per_base_specs = pattern.size() * dedup_sorted(config.categories).size();

    EnumerationCounts counts;
    counts.targets = dedup_sorted(config.behaviors).size() * dedup_sorted(config.categories).size();
    for (auto kind : kinds) {
        const std::size_t bases = kind == BaseKind::ProductBased ? n_products : n_users;
        counts.bases += bases;
        counts.inputs += bases * per_base_inputs;
        for (auto m : models) {
            counts.per_model[m] += bases * per_base_specs;
            counts.per_model_base[{m, kind}] = bases * per_base_specs;
            counts.total += bases * per_base_specs;
        }
    }
    return counts;
}

Enumeration enumerate_experiments(const BaseUniverse& universe, const MatrixConfig& config) {
    check_config(config);
    const auto models = dedup_sorted(config.models);
    const auto kinds = dedup_sorted(config.base_kinds);
    const auto categories = dedup_sorted(config.categories);
    const auto pattern = base_pattern(config);

    std::vector<ModelBase> bases;
    std::size_t n_products = 0;
    std::size_t n_users = 0;
    for (auto kind : kinds) {
        const auto ids = kind == BaseKind::ProductBased ? select_ids(universe.products, config.product_ids, "product")
                                                        : select_ids(universe.users, config.user_ids, "user");
        (kind == BaseKind::ProductBased ? n_products : n_users) = ids.size();
        for (const auto& id : ids) bases.push_back({kind, id});
    }
    if (bases.empty()) throw ValidationError("empty selection: no model bases");

    Enumeration e;
    e.specs.reserve(bases.size() * pattern.size() * categories.size() * models.size());
    for (const auto& base : bases) {
        for (const auto& p : pattern) {
            for (int cat : categories) {
                for (auto m : models) {
                    ExperimentSpec s;
                    s.model = m;
                    s.base = base;
                    s.features = p.features;
                    s.pi_toggle = p.toggle;
                    s.behavior = p.behavior;
                    s.category = cat;
                    s.k = config.k;
                    s.seed = derive_seed(config.global_seed, s.identity());
                    e.specs.push_back(std::move(s));
                }
            }
        }
    }

    auto& m = e.manifest;
    m.global_seed = config.global_seed;
    m.accounting = config.accounting;
    m.spec_count = e.specs.size();
    m.counts = count_experiments(n_products, n_users, config);
    m.matrix_config_json = matrix_config_to_json(config);
    if (m.counts.total != m.spec_count) {
        throw ExecutionError("enumeration produced " + std::to_string(m.spec_count) + " specs but the count formula gives " +
                             std::to_string(m.counts.total));
    }
    return e;
}

Enumeration enumerate_experiments(const Catalog& catalog, const MatrixConfig& config) {
    Enumeration e = enumerate_experiments(universe_of(catalog), config);
    e.manifest.catalog_fingerprint = catalog_fingerprint(catalog);
    return e;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string manifest_to_json(const RunManifest& m) {
    ordered_json doc;
    doc["global_seed"] = m.global_seed;
    doc["catalog_fingerprint"] = m.catalog_fingerprint;
    doc["accounting"] = accounting_code(m.accounting);
    doc["spec_count"] = m.spec_count;
    doc["counts"] = {{"bases", m.counts.bases},
                     {"inputs", m.counts.inputs},
                     {"targets", m.counts.targets},
                     {"total", m.counts.total}};
    ordered_json per_model = ordered_json::object();
    for (const auto& [k, v] : m.counts.per_model) per_model[std::string(learner_code(k))] = v;
    doc["counts"]["per_model"] = per_model;
    ordered_json per_model_base = ordered_json::array();
    for (const auto& [k, v] : m.counts.per_model_base) {
        per_model_base.push_back({{"model", learner_code(k.first)}, {"base_kind", base_kind_code(k.second)}, {"count", v}});
    }
    doc["counts"]["per_model_base"] = per_model_base;
    doc["matrix_config"] = ordered_json::parse(m.matrix_config_json);
    doc["timing"] = {{"wall_seconds", m.wall_seconds}, {"executed", m.executed}, {"failed", m.failed}};
    doc["complete"] = m.complete;
    return doc.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view json_text) {
    RunManifest m;
    try {
        const ordered_json doc = ordered_json::parse(json_text);
        m.global_seed = doc.at("global_seed").get<std::uint64_t>();
        m.catalog_fingerprint = doc.at("catalog_fingerprint").get<std::string>();
        m.accounting = accounting_from_code(doc.at("accounting").get<std::string>());
        m.spec_count = doc.at("spec_count").get<std::size_t>();
        const auto& c = doc.at("counts");
        m.counts.bases = c.at("bases").get<std::size_t>();
        m.counts.inputs = c.at("inputs").get<std::size_t>();
        m.counts.targets = c.at("targets").get<std::size_t>();
        m.counts.total = c.at("total").get<std::size_t>();
        for (const auto& [k, v] : c.at("per_model").items()) {
            const auto model = learner_from_code(k);
            if (!model) throw ValidationError("manifest: unknown model " + k);
            m.counts.per_model[*model] = v.get<std::size_t>();
        }
        for (const auto& row : c.at("per_model_base")) {
            const auto model = learner_from_code(row.at("model").get<std::string>());
            const auto kind = base_kind_from_code(row.at("base_kind").get<std::string>());
            if (!model || !kind) throw ValidationError("manifest: bad per_model_base entry");
            m.counts.per_model_base[{*model, *kind}] = row.at("count").get<std::size_t>();
        }
        m.matrix_config_json = doc.at("matrix_config").dump(2);
        const auto& t = doc.at("timing");
        m.wall_seconds = t.at("wall_seconds").get<double>();
        m.executed = t.at("executed").get<std::size_t>();
        m.failed = t.at("failed").get<std::size_t>();
        m.complete = doc.at("complete").get<bool>();
    } catch (const json::parse_error& e) {
        throw ParseError("manifest.json", 0, e.what());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest.json: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Result store
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kOkTag = "ok\t";
constexpr std::string_view kFailTag = "fail\t";

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ExecutionError("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw ExecutionError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Complete lines of `text`; a trailing fragment without a newline is
/// dropped.
std::vector<std::string_view> complete_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) break;
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

void read_table(const std::filesystem::path& path, std::string_view header, bool results, ScoreStore& into) {
    if (!std::filesystem::exists(path)) return;
    const std::string text = slurp(path);
    const auto lines = complete_lines(text);
    const std::string file = path.filename().string();
    if (lines.empty() || lines.front() != header) throw ParseError(file, 1, "missing or unexpected header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        if (results) {
            into.records.push_back(parse_result_row(lines[i], file, i + 1));
        } else {
            into.failures.push_back(parse_failure_row(lines[i], file, i + 1));
        }
    }
}

void sort_store(ScoreStore& s) {
    auto by_id = [](const auto& a, const auto& b) { return a.spec.identity() < b.spec.identity(); };
    std::sort(s.records.begin(), s.records.end(), by_id);
    std::sort(s.failures.begin(), s.failures.end(), by_id);
}

}  // namespace

ResultStore::ResultStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ExecutionError("cannot create result store " + dir_.string() + ": " + ec.message());
    // Drop a torn final journal line left by an interrupted writer.
    const auto journal = journal_path();
    if (std::filesystem::exists(journal)) {
        const std::string text = slurp(journal);
        const auto cut = text.rfind('\n');
        const std::size_t keep = cut == std::string::npos ? 0 : cut + 1;
        if (keep != text.size()) std::filesystem::resize_file(journal, keep);
    }
}

void ResultStore::append(const std::vector<ScoreRecord>& records, const std::vector<FailureRecord>& failures) {
    if (records.empty() && failures.empty()) return;
    std::string block;
    for (const auto& r : records) block.append(kOkTag).append(format_result_row(r)).push_back('\n');
    for (const auto& f : failures) block.append(kFailTag).append(format_failure_row(f)).push_back('\n');
    std::lock_guard lock(mutex_);
    std::ofstream out(journal_path(), std::ios::binary | std::ios::app);
    if (!out) throw ExecutionError("cannot open " + journal_path().string());
    out << block;
    out.flush();
    if (!out) throw ExecutionError("append failed for " + journal_path().string());
}

ScoreStore ResultStore::load() const {
    ScoreStore store;
    read_table(results_path(), kResultsHeader, true, store);
    read_table(failures_path(), kFailuresHeader, false, store);
    const std::string text = slurp(journal_path());
    const auto lines = complete_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = lines[i];
        if (line.starts_with(kOkTag)) {
            store.records.push_back(parse_result_row(line.substr(kOkTag.size()), "journal.tsv", i + 1));
        } else if (line.starts_with(kFailTag)) {
            store.failures.push_back(parse_failure_row(line.substr(kFailTag.size()), "journal.tsv", i + 1));
        } else if (!line.empty()) {
            throw ParseError("journal.tsv", i + 1, "unknown journal tag");
        }
    }
    // A spec recorded twice keeps its first entry.
    sort_store(store);
    auto same_id = [](const auto& a, const auto& b) { return a.spec.identity() == b.spec.identity(); };
    store.records.erase(std::unique(store.records.begin(), store.records.end(), same_id), store.records.end());
    store.failures.erase(std::unique(store.failures.begin(), store.failures.end(), same_id), store.failures.end());
    return store;
}

std::set<std::string> ResultStore::completed_identities() const {
    std::set<std::string> ids;
    const ScoreStore s = load();
    for (const auto& r : s.records) ids.insert(r.spec.identity());
    for (const auto& f : s.failures) ids.insert(f.spec.identity());
    return ids;
}

void ResultStore::finalize() {
    std::lock_guard lock(mutex_);
    const ScoreStore s = load();
    std::string results(kResultsHeader);
    results.push_back('\n');
    for (const auto& r : s.records) results.append(format_result_row(r)).push_back('\n');
    std::string failures(kFailuresHeader);
    failures.push_back('\n');
    for (const auto& f : s.failures) failures.append(format_failure_row(f)).push_back('\n');
    write_file(results_path(), results);
    write_file(failures_path(), failures);
    std::filesystem::remove(journal_path());
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

CvResult run_on_matrix(const ExperimentSpec& spec, const FeatureMatrix& x, std::span<const SurveyResponse> responses,
                       const LearnerParams& params, const CvOptions& cv) {
    const auto y = label_vector(responses, spec.behavior, spec.category);
    return cross_validate(x, y, spec.model, params, spec.k, spec.seed, cv);
}

std::string failure_reason(const std::exception& e) { return e.what(); }

}  // namespace

ScoreRecord run_experiment(const ExperimentSpec& spec, const RunContext& context, const LearnerParams& params,
                           const CvOptions& cv) {
    const FeatureMatrix x = build_matrix(context.catalog, context.exposure, spec.base, spec.input(), spec.behavior);
    const auto responses = base_responses(context.catalog, spec.base);
    return {spec, run_on_matrix(spec, x, responses, params, cv)};
}

ScoreStore run_matrix(std::span<const ExperimentSpec> specs, const RunContext& context, const RunOptions& options) {
    if (options.workers < 1) throw ValidationError("workers must be at least 1");
    const std::size_t limit = options.max_specs ? std::min(*options.max_specs, specs.size()) : specs.size();

    // Group specs that share a feature matrix.
    using GroupKey = std::tuple<BaseKind, std::string, FeatureSet, bool, Behavior>;
    std::map<GroupKey, std::vector<std::size_t>> by_key;
    for (std::size_t i = 0; i < limit; ++i) {
        const auto& s = specs[i];
        by_key[{s.base.kind, s.base.base_id, s.features, s.pi_feature_effective(), s.behavior}].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> groups;
    groups.reserve(by_key.size());
    for (const auto& [key, members] : by_key) groups.push_back(&members);

    CvOptions cv = options.cv;
    cv.workers = 1;

    std::vector<std::optional<ScoreRecord>> done(limit);
    std::vector<std::optional<FailureRecord>> failed(limit);
    std::mutex progress_mutex;
    std::size_t n_done = 0;
    std::size_t n_failed = 0;
    std::exception_ptr store_error;

    const auto n_groups = static_cast<std::int64_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(options.workers)
    for (std::int64_t g = 0; g < n_groups; ++g) {
        const auto& members = *groups[static_cast<std::size_t>(g)];
        std::vector<ScoreRecord> group_records;
        std::vector<FailureRecord> group_failures;
        std::optional<FeatureMatrix> x;
        std::vector<SurveyResponse> responses;
        std::string group_error;
        try {
            const auto& first = specs[members.front()];
            x = build_matrix(context.catalog, context.exposure, first.base, first.input(), first.behavior);
            responses = base_responses(context.catalog, first.base);
        } catch (const std::exception& e) {
            group_error = failure_reason(e);
        }
        for (std::size_t i : members) {
            const auto& spec = specs[i];
            if (!x) {
                group_failures.push_back({spec, group_error});
                continue;
            }
            try {
                group_records.push_back({spec, run_on_matrix(spec, *x, responses, options.params, cv)});
            } catch (const std::exception& e) {
                group_failures.push_back({spec, failure_reason(e)});
            }
        }
        try {
            if (options.store) options.store->append(group_records, group_failures);
        } catch (...) {
#pragma omp critical(adbench_store_error)
            if (!store_error) store_error = std::current_exception();
        }
        {
            std::lock_guard lock(progress_mutex);
            n_done += members.size();
            n_failed += group_failures.size();
            if (options.progress) {
                options.progress({n_done, limit, n_failed, specs[members.back()].identity()});
            }
        }
        std::size_t r = 0;
        std::size_t f = 0;
        for (std::size_t i : members) {
            if (r < group_records.size() && group_records[r].spec == specs[i]) {
                done[i] = std::move(group_records[r++]);
            } else {
                failed[i] = std::move(group_failures[f++]);
            }
        }
    }
    if (store_error) std::rethrow_exception(store_error);

    ScoreStore out;
    for (auto& r : done) {
        if (r) out.records.push_back(std::move(*r));
    }
    for (auto& f : failed) {
        if (f) out.failures.push_back(std::move(*f));
    }
    sort_store(out);
    return out;
}

ScoreStore run_matrix_serial(std::span<const ExperimentSpec> specs, const RunContext& context,
                             const LearnerParams& params, const CvOptions& cv) {
    CvOptions serial = cv;
    serial.workers = 1;
    ScoreStore out;
    for (const auto& spec : specs) {
        try {
            out.records.push_back(run_experiment(spec, context, params, serial));
        } catch (const std::exception& e) {
            out.failures.push_back({spec, failure_reason(e)});
        }
    }
    sort_store(out);
    return out;
}

std::vector<ExperimentSpec> resume(const RunManifest& manifest, const ResultStore& store, const Catalog& catalog) {
    const std::string fingerprint = catalog_fingerprint(catalog);
    if (fingerprint != manifest.catalog_fingerprint) {
        throw ValidationError("catalog fingerprint " + fingerprint + " differs from the manifest's " +
                              manifest.catalog_fingerprint + "; the catalog changed since the run started");
    }
    const MatrixConfig config = parse_matrix_config(manifest.matrix_config_json);
    Enumeration e = enumerate_experiments(catalog, config);
    if (e.specs.size() != manifest.spec_count) {
        throw ValidationError("re-enumeration gives " + std::to_string(e.specs.size()) + " specs, manifest records " +
                              std::to_string(manifest.spec_count));
    }
    const auto completed = store.completed_identities();
    std::vector<ExperimentSpec> remaining;
    for (auto& s : e.specs) {
        if (!completed.contains(s.identity())) remaining.push_back(std::move(s));
    }
    return remaining;
}

}  // namespace adbench
