#include "adbench/cli.hpp"

#include "adbench/data_model.hpp"
#include "adbench/error.hpp"
#include "adbench/exposure.hpp"
#include "adbench/runner.hpp"
#include "adbench/stats.hpp"
#include "adbench/synthgen.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace adbench {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExecutionError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExecutionError("cannot write " + path.string());
    out << text;
    if (!out) throw ExecutionError("write failed for " + path.string());
}

json load_json_file(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

/// A command-line value that mirrors a config key (JSON pointer).
struct FlagValue {
    std::string pointer;
    std::string flag;
    json value;
};

/// Applies flags to `doc`. A key already present in the file wins; a
/// differing flag value is reported on `err`.
void merge_flags(json& doc, const std::vector<FlagValue>& flags, std::ostream& err) {
    for (const auto& f : flags) {
        const json::json_pointer ptr(f.pointer);
        if (doc.contains(ptr)) {
            if (doc.at(ptr) != f.value) {
                err << "warning: " << f.flag << " ignored; the config file sets " << f.pointer.substr(1) << " = "
                    << doc.at(ptr).dump() << "\n";
            }
            continue;
        }
        doc[ptr] = f.value;
    }
}

template <typename T>
void collect(CLI::Option* opt, const T& value, std::string pointer, std::vector<FlagValue>& out) {
    if (opt->count() > 0) out.push_back({std::move(pointer), opt->get_name(), json(value)});
}

std::optional<json> synth_section(const json& doc, const fs::path& base_dir) {
    if (!doc.contains("synth")) return std::nullopt;
    const json& s = doc.at("synth");
    if (s.is_string()) {
        fs::path p = s.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        return load_json_file(p);
    }
    return s;
}

Catalog load_catalog(const json& doc, const fs::path& base_dir) {
    const bool has_data = doc.contains("data");
    const bool has_synth = doc.contains("synth");
    if (has_data == has_synth) throw ValidationError("the run config needs exactly one of \"data\" and \"synth\"");
    if (has_data) {
        fs::path dir = doc.at("data").get<std::string>();
        if (dir.is_relative()) dir = base_dir / dir;
        return parse_catalog(CatalogPaths::in_dir(dir));
    }
    return generate_panel(parse_gen_config(synth_section(doc, base_dir)->dump()));
}

void print_counts(std::ostream& out, const EnumerationCounts& c, AccountingMode mode) {
    out << "accounting: " << accounting_code(mode) << "\n";
    out << "bases: " << c.bases << "\n";
    out << "inputs: " << c.inputs << "\n";
    out << "targets: " << c.targets << "\n";
    for (const auto& [model, n] : c.per_model) out << "experiments (" << learner_code(model) << "): " << n << "\n";
    out << "total experiments: " << c.total << "\n";
}

// ---------------------------------------------------------------------------

int cmd_synth(const fs::path& config_path, const std::vector<FlagValue>& flags, const fs::path& out_dir,
              std::ostream& out, std::ostream& err) {
    json doc = config_path.empty() ? json::object() : load_json_file(config_path);
    merge_flags(doc, flags, err);
    const GenConfig config = parse_gen_config(doc.dump());
    const Catalog catalog = generate_panel(config);
    fs::create_directories(out_dir);
    write_catalog(catalog, CatalogPaths::in_dir(out_dir));
    const auto n = row_counts(catalog);
    out << "wrote " << out_dir.string() << ": " << n.users << " users, " << n.products << " products ("
        << n.advert_matched << " advert-matched), " << n.responses << " survey rows, " << n.viewing
        << " viewing rows, " << n.broadcasts << " broadcasts\n";
    out << "fingerprint: " << catalog_fingerprint(catalog) << "\n";
    return kExitOk;
}

int cmd_ingest(const fs::path& dir, std::ostream& out) {
    const Catalog catalog = parse_catalog(CatalogPaths::in_dir(dir));
    const auto n = row_counts(catalog);
    out << "users: " << n.users << "\n";
    out << "products: " << n.products << "\n";
    out << "advert-matched products: " << n.advert_matched << "\n";
    out << "survey rows: " << n.responses << "\n";
    out << "viewing rows: " << n.viewing << "\n";
    out << "broadcasts: " << n.broadcasts << "\n";
    out << "fingerprint: " << catalog_fingerprint(catalog) << "\n";
    return kExitOk;
}

struct RunFlags {
    fs::path config_path;
    std::vector<FlagValue> flags;
    bool dry_run = false;
    std::optional<std::size_t> users;
    std::optional<std::size_t> products;
    bool resume = false;
    bool progress = false;
    std::optional<std::size_t> max_specs;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
    json doc = f.config_path.empty() ? json::object() : load_json_file(f.config_path);
    const fs::path base_dir = f.config_path.empty() ? fs::current_path() : f.config_path.parent_path();
    merge_flags(doc, f.flags, err);

    json matrix = doc.value("matrix", json::object());
    for (const char* key : {"global_seed", "workers"}) {
        if (doc.contains(key)) {
            if (matrix.contains(key) && matrix.at(key) != doc.at(key)) {
                throw ValidationError(std::string("\"") + key + "\" differs between the run config and its matrix");
            }
            matrix[key] = doc.at(key);
        }
    }
    for (const auto& [key, v] : doc.items()) {
        if (key != "data" && key != "synth" && key != "matrix" && key != "out" && key != "global_seed" &&
            key != "workers") {
            throw ValidationError("unknown run config key \"" + key + "\"");
        }
    }
    const MatrixConfig config = parse_matrix_config(matrix.dump());

    if (f.dry_run && (f.users || f.products)) {
        if (!f.users || !f.products) throw ValidationError("--users and --products go together");
        const auto counts = count_experiments(*f.products, *f.users, config);
        print_counts(out, counts, config.accounting);
        return kExitOk;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const Catalog catalog = load_catalog(doc, base_dir);
    Enumeration e = enumerate_experiments(catalog, config);
    print_counts(out, e.manifest.counts, config.accounting);
    if (f.dry_run) return kExitOk;

    if (!doc.contains("out")) throw ValidationError("the run config needs an \"out\" directory");
    fs::path out_dir = doc.at("out").get<std::string>();
    if (out_dir.is_relative()) out_dir = base_dir / out_dir;
    fs::create_directories(out_dir);
    const fs::path manifest_path = out_dir / "manifest.json";

    std::vector<ExperimentSpec> todo;
    RunManifest manifest = e.manifest;
    if (f.resume) {
        manifest = parse_manifest(read_text(manifest_path));
        ResultStore probe(out_dir);
        todo = resume(manifest, probe, catalog);
        out << "resuming: " << todo.size() << " of " << manifest.spec_count << " experiments remain\n";
    } else {
        for (const char* name : {"results.tsv", "failures.tsv", "journal.tsv"}) fs::remove(out_dir / name);
        todo = std::move(e.specs);
        write_text(manifest_path, manifest_to_json(manifest));
    }

    ResultStore store(out_dir);
    const CatalogIndex index(catalog);
    const ExposureMatrix exposure = compute_exposure(catalog.viewing, catalog.broadcasts);
    RunOptions options;
    options.workers = config.workers;
    options.store = &store;
    options.max_specs = f.max_specs;
    options.params = config.params;
    options.cv.averaging = config.averaging;
    options.cv.standardize = config.standardize;
    if (f.progress) {
        options.progress = [&out](const ProgressEvent& ev) {
            json line = {{"done", ev.done}, {"total", ev.total}, {"failed", ev.failed}, {"last", ev.identity}};
            out << line.dump() << "\n" << std::flush;
        };
    }
    const ScoreStore ran = run_matrix(todo, {index, exposure}, options);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.wall_seconds += seconds;
    manifest.executed += ran.records.size() + ran.failures.size();
    manifest.failed += ran.failures.size();
    const bool interrupted = f.max_specs && *f.max_specs < todo.size();
    if (!interrupted) {
        store.finalize();
        manifest.complete = true;
    }
    write_text(manifest_path, manifest_to_json(manifest));
    out << "executed " << ran.records.size() + ran.failures.size() << " experiments (" << ran.failures.size()
        << " failed) in " << seconds << " s\n";
    if (interrupted) out << "stopped early; continue with --resume\n";
    return kExitOk;
}

int cmd_report(const fs::path& store_dir, const fs::path& out_dir, const ReportOptions& options, std::ostream& out,
               std::ostream& err) {
    if (!fs::exists(store_dir / "results.tsv") && !fs::exists(store_dir / "journal.tsv")) {
        throw ExecutionError("no result store in " + store_dir.string());
    }
    const ScoreStore store = ResultStore(store_dir).load();
    if (store.records.empty()) throw ValidationError("the result store holds no successful experiments");
    const ReportSummary summary = write_report(store.records, out_dir, options);
    for (const auto& path : summary.files) out << "wrote " << path.string() << "\n";
    if (!summary.gaps.empty()) {
        err << summary.gaps.size() << " gap(s); see " << (out_dir / "gaps.tsv").string() << "\n";
        return kExitGap;
    }
    return kExitOk;
}

std::vector<double> tsv_column(const std::string& text, const std::string& name, const std::string& file) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(file, 1, "empty file");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, '\t')) header.push_back(cell);
    }
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(file + ": no column \"" + name + "\"");
    const auto col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, '\t')) cells.push_back(cell);
        if (col >= cells.size()) throw ParseError(file, line_no, "missing column \"" + name + "\"");
        if (cells[col].empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cells[col], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != cells[col].size()) throw ParseError(file, line_no, "not a number: \"" + cells[col] + "\"");
        values.push_back(v);
    }
    return values;
}

int cmd_ttest(const fs::path& input, const std::string& col_a, const std::string& col_b, bool paired,
              std::ostream& out) {
    const std::string text = read_text(input);
    const auto a = tsv_column(text, col_a, input.filename().string());
    const auto b = tsv_column(text, col_b, input.filename().string());
    TTestReport r = paired ? paired_t_test(a, b) : welch_t_test(a, b);
    out << "test\t" << (paired ? "paired" : "welch") << "\n";
    out << "n_a\t" << r.n_a << "\n";
    out << "n_b\t" << r.n_b << "\n";
    out << "t\t" << format_double(r.t_stat) << "\n";
    out << "df\t" << format_double(r.df) << "\n";
    out << "p\t" << format_double(r.p_value) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Benchmark advert exposure against demographics for purchase prediction", "adbench"};
    app.require_subcommand(1);
    app.allow_windows_style_options(false);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel");
    std::string synth_config;
    std::string synth_out;
    std::uint64_t synth_seed = 0;
    std::size_t synth_users = 0;
    std::size_t synth_products = 0;
    std::size_t synth_matched = 0;
    double synth_beta_exposure = 0.0;
    synth->add_option("--config", synth_config, "Generator config (JSON)");
    synth->add_option("--out", synth_out, "Directory for the five panel files")->required();
    auto* o_seed = synth->add_option("--seed", synth_seed, "Generator seed");
    auto* o_users = synth->add_option("--n-users", synth_users, "Number of users");
    auto* o_products = synth->add_option("--n-products", synth_products, "Number of products");
    auto* o_matched = synth->add_option("--n-advert-matched", synth_matched, "Products with adverts");
    auto* o_beta = synth->add_option("--beta-exposure", synth_beta_exposure, "Log-odds per 100 s of exposure");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a panel and print its fingerprint");
    std::string ingest_dir;
    ingest->add_option("--data", ingest_dir, "Directory holding the five panel files")->required();

    // run
    auto* run = app.add_subcommand("run", "Enumerate and execute the experiment matrix");
    RunFlags rf;
    std::string run_config;
    std::string run_data;
    std::string run_synth;
    std::string run_out;
    std::uint64_t run_seed = 0;
    int run_workers = 1;
    std::string run_accounting;
    int run_k = 5;
    std::vector<std::string> run_models;
    std::size_t users = 0;
    std::size_t products = 0;
    std::size_t max_specs = 0;
    run->add_option("--config", run_config, "Run config (JSON)");
    auto* r_data = run->add_option("--data", run_data, "Panel directory");
    auto* r_synth = run->add_option("--synth", run_synth, "Generator config to build the panel from");
    auto* r_out = run->add_option("--out", run_out, "Result store directory");
    auto* r_seed = run->add_option("--global-seed", run_seed, "Seed every experiment seed derives from");
    auto* r_workers = run->add_option("--workers", run_workers, "Concurrent workers");
    auto* r_acc = run->add_option("--accounting", run_accounting, "canonical or paper");
    auto* r_k = run->add_option("--k", run_k, "Cross-validation folds");
    auto* r_models = run->add_option("--models", run_models, "Subset of svm, gbrt, logreg")->delimiter(',');
    run->add_flag("--dry-run", rf.dry_run, "Print the enumeration counts and stop");
    auto* r_users = run->add_option("--users", users, "Dry run: number of users (no data needed)");
    auto* r_products = run->add_option("--products", products, "Dry run: number of advert-matched products");
    run->add_flag("--resume", rf.resume, "Continue an interrupted run in --out");
    run->add_flag("--progress", rf.progress, "Emit JSON-lines progress on stdout");
    auto* r_max = run->add_option("--max-specs", max_specs, "Stop after this many experiments");

    // report
    auto* report = app.add_subcommand("report", "Average and p-value tables from a result store");
    std::string report_store;
    std::string report_out;
    std::string pi_variant = "with";
    std::string general_average = "category_means";
    bool report_paired = false;
    report->add_option("--store", report_store, "Result store directory")->required();
    report->add_option("--out", report_out, "Directory for the tables")->required();
    report->add_option("--pi-variant", pi_variant, "with or without the PI feature")
        ->check(CLI::IsMember({"with", "without"}));
    report->add_option("--general-average", general_average, "category_means or experiments")
        ->check(CLI::IsMember({"category_means", "experiments"}));
    report->add_flag("--paired", report_paired, "Paired instead of Welch t-tests");

    // ttest
    auto* ttest = app.add_subcommand("ttest", "Two-sample t-test on two columns of a TSV file");
    std::string ttest_input;
    std::string col_a;
    std::string col_b;
    bool ttest_paired = false;
    ttest->add_option("--input", ttest_input, "Tab-separated file with a header row")->required();
    ttest->add_option("--col-a", col_a, "First column")->required();
    ttest->add_option("--col-b", col_b, "Second column")->required();
    ttest->add_flag("--paired", ttest_paired, "Paired test");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) {
            std::vector<FlagValue> flags;
            collect(o_seed, synth_seed, "/seed", flags);
            collect(o_users, synth_users, "/n_users", flags);
            collect(o_products, synth_products, "/n_products", flags);
            collect(o_matched, synth_matched, "/n_advert_matched", flags);
            collect(o_beta, synth_beta_exposure, "/beta_exposure", flags);
            return cmd_synth(synth_config, flags, synth_out, out, err);
        }
        if (*ingest) return cmd_ingest(ingest_dir, out);
        if (*run) {
            rf.config_path = run_config;
            collect(r_data, run_data, "/data", rf.flags);
            collect(r_synth, run_synth, "/synth", rf.flags);
            collect(r_out, run_out, "/out", rf.flags);
            collect(r_seed, run_seed, "/global_seed", rf.flags);
            collect(r_workers, run_workers, "/workers", rf.flags);
            collect(r_acc, run_accounting, "/matrix/accounting", rf.flags);
            collect(r_k, run_k, "/matrix/k", rf.flags);
            collect(r_models, run_models, "/matrix/models", rf.flags);
            if (r_users->count()) rf.users = users;
            if (r_products->count()) rf.products = products;
            if (r_max->count()) rf.max_specs = max_specs;
            if (rf.resume && rf.dry_run) throw ValidationError("--resume and --dry-run are exclusive");
            return cmd_run(rf, out, err);
        }
        if (*report) {
            ReportOptions options;
            options.pi_variant = pi_variant == "with" ? PiVariant::With : PiVariant::Without;
            options.general_average = general_average == "category_means" ? GeneralAverage::MeanOfCategoryMeans
                                                                          : GeneralAverage::MeanOfExperiments;
            options.paired = report_paired;
            return cmd_report(report_store, report_out, options, out, err);
        }
        if (*ttest) return cmd_ttest(ttest_input, col_a, col_b, ttest_paired, out);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const CalibrationError& e) {
        err << "calibration error: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const json::exception& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitExecution;
    }
    return kExitUsage;
}

}  // namespace adbench
