#include "adbench/cli.hpp"
#include "adbench/data_model.hpp"
#include "adbench/runner.hpp"
#include "fixtures.hpp"

#include "doctest.h"

#include <sstream>

using namespace adbench;
using adbench::testing::read_text;
using adbench::testing::TempDir;
using adbench::testing::write_text;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = run_cli(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

const char* const kTables[] = {"users.tsv", "products.tsv", "survey.tsv", "viewing.tsv", "broadcasts.tsv"};

/// Small panel plus a run config restricted to a cheap matrix.
void prepare_run(const TempDir& dir) {
    REQUIRE(cli({"synth", "--out", (dir / "panel").string(), "--n-users", "20", "--n-products", "3",
                 "--n-advert-matched", "3", "--seed", "3"})
                .code == kExitOk);
    write_text(dir / "run.json", R"({
  "data": "panel",
  "out": "store",
  "global_seed": 5,
  "matrix": {
    "models": ["logreg", "gbrt"],
    "base_kinds": ["product"],
    "feature_sets": ["weekday", "demographics", "weekday+demographics"],
    "categories": [1, 4]
  }
})");
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"bogus"}).code == kExitUsage);
    CHECK(cli({"synth"}).code == kExitUsage);
    CHECK(cli({"report", "--store", "x", "--out", "y", "--pi-variant", "maybe"}).code == kExitUsage);
}

TEST_CASE("synth writes five files deterministically") {
    TempDir dir("cli-synth");
    write_text(dir / "gen.json", R"({"n_users": 15, "n_products": 4, "n_advert_matched": 2, "seed": 8})");
    const auto a = cli({"synth", "--config", (dir / "gen.json").string(), "--out", (dir / "a").string()});
    const auto b = cli({"synth", "--config", (dir / "gen.json").string(), "--out", (dir / "b").string()});
    REQUIRE(a.code == kExitOk);
    REQUIRE(b.code == kExitOk);
    for (const char* t : kTables) CHECK(read_text(dir / "a" / t) == read_text(dir / "b" / t));
    const auto c = parse_catalog(CatalogPaths::in_dir(dir / "a"));
    CHECK(c.users.size() == 15);
    CHECK(c.advert_matched_products().size() == 2);

    // Config file wins over a conflicting flag, with a warning.
    const auto w = cli({"synth", "--config", (dir / "gen.json").string(), "--out", (dir / "w").string(),
                        "--n-users", "9"});
    CHECK(w.code == kExitOk);
    CHECK(w.err.find("n_users") != std::string::npos);
    CHECK(parse_catalog(CatalogPaths::in_dir(dir / "w")).users.size() == 15);
}

TEST_CASE("synth error codes") {
    TempDir dir("cli-synth-err");
    write_text(dir / "bad.json", R"({"ap_rates": [0.5, 0.0, 0.5, 0.0]})");
    const auto cal = cli({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()});
    CHECK(cal.code == kExitCalibration);
    CHECK(cal.err.find("calibration") != std::string::npos);
    write_text(dir / "unknown.json", R"({"users": 4})");
    CHECK(cli({"synth", "--config", (dir / "unknown.json").string(), "--out", (dir / "x").string()}).code ==
          kExitValidation);
    write_text(dir / "broken.json", "{");
    CHECK(cli({"synth", "--config", (dir / "broken.json").string(), "--out", (dir / "x").string()}).code ==
          kExitParse);
}

TEST_CASE("ingest validates and fingerprints") {
    TempDir dir("cli-ingest");
    REQUIRE(cli({"synth", "--out", (dir / "p").string(), "--n-users", "5"}).code == kExitOk);
    const auto ok = cli({"ingest", "--data", (dir / "p").string()});
    CHECK(ok.code == kExitOk);
    const auto fp = catalog_fingerprint(parse_catalog(CatalogPaths::in_dir(dir / "p")));
    CHECK(ok.out.find("fingerprint: " + fp) != std::string::npos);

    auto survey = read_text(dir / "p" / "survey.tsv");
    write_text(dir / "p" / "survey.tsv", survey + "u001\tp001\tNo\tNo\tNo\n");
    CHECK(cli({"ingest", "--data", (dir / "p").string()}).code == kExitParse);
    write_text(dir / "p" / "survey.tsv", survey + "u001\tp001\tNo\tNo\tNo\tNo\n");
    const auto dup = cli({"ingest", "--data", (dir / "p").string()});
    CHECK(dup.code == kExitValidation);
    CHECK(dup.err.find("survey.tsv") != std::string::npos);
}

TEST_CASE("dry run prints the full-scale counts in paper accounting") {
    const auto r = cli({"run", "--dry-run", "--accounting", "paper", "--users", "3000", "--products", "36"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("inputs: 30360\n") != std::string::npos);
    CHECK(r.out.find("experiments (svm): 364320\n") != std::string::npos);
    CHECK(r.out.find("total experiments: 1092960\n") != std::string::npos);
}

TEST_CASE("run, resume and report end to end") {
    TempDir dir("cli-run");
    prepare_run(dir);
    const auto run = cli({"run", "--config", (dir / "run.json").string()});
    REQUIRE(run.code == kExitOk);
    const auto manifest = parse_manifest(read_text(dir / "store" / "manifest.json"));
    CHECK(manifest.complete);
    CHECK(run.out.find("total experiments: " + std::to_string(manifest.spec_count)) != std::string::npos);
    CHECK(manifest.executed == manifest.spec_count);

    // Interrupted run into a second store, then resumed.
    write_text(dir / "run2.json", R"({"data": "panel", "out": "store2", "global_seed": 5, "matrix": )" +
                                      manifest.matrix_config_json + "}");
    const auto cut = cli({"run", "--config", (dir / "run2.json").string(), "--max-specs", "7", "--progress"});
    CHECK(cut.code == kExitOk);
    CHECK(cut.out.find("{\"done\":") != std::string::npos);
    CHECK_FALSE(parse_manifest(read_text(dir / "store2" / "manifest.json")).complete);
    CHECK(cli({"run", "--config", (dir / "run2.json").string(), "--resume"}).code == kExitOk);
    CHECK(read_text(dir / "store2" / "results.tsv") == read_text(dir / "store" / "results.tsv"));

    // The matrix is only product-based, so user-based columns are gaps.
    const auto rep = cli({"report", "--store", (dir / "store").string(), "--out", (dir / "rep").string()});
    CHECK(rep.code == kExitGap);
    CHECK(std::filesystem::exists(dir / "rep" / "gaps.tsv"));
    CHECK(std::filesystem::exists(dir / "rep" / "averages_gbrt_product.tsv"));
    CHECK(std::filesystem::exists(dir / "rep" / "pvalues_h3_PI.tsv"));
    const auto again = cli({"report", "--store", (dir / "store").string(), "--out", (dir / "rep2").string()});
    CHECK(again.code == kExitGap);
    for (const char* f : {"averages_logreg_product.tsv", "pvalues_h1_AP.tsv", "report.json", "gaps.tsv"}) {
        CHECK(read_text(dir / "rep" / f) == read_text(dir / "rep2" / f));
    }

    CHECK(cli({"report", "--store", (dir / "nowhere").string(), "--out", (dir / "r3").string()}).code != kExitOk);
}

TEST_CASE("run input errors") {
    TempDir dir("cli-run-err");
    write_text(dir / "both.json", R"({"data": "a", "synth": {}, "out": "s"})");
    CHECK(cli({"run", "--config", (dir / "both.json").string()}).code == kExitValidation);
    write_text(dir / "key.json", R"({"data": "a", "out": "s", "matrix": {"modles": []}})");
    CHECK(cli({"run", "--config", (dir / "key.json").string()}).code == kExitValidation);
    CHECK(cli({"run", "--data", (dir / "missing").string(), "--out", (dir / "s").string()}).code == kExitParse);
}

TEST_CASE("ttest on two columns") {
    TempDir dir("cli-ttest");
    write_text(dir / "scores.tsv", "a\tb\n0.5\t0.2\n0.6\t0.3\n0.7\t0.25\n0.55\t0.35\n");
    const auto r = cli({"ttest", "--input", (dir / "scores.tsv").string(), "--col-a", "a", "--col-b", "b"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("test\twelch\n") != std::string::npos);
    CHECK(r.out.find("\np\t") != std::string::npos);
    const auto p = cli({"ttest", "--input", (dir / "scores.tsv").string(), "--col-a", "a", "--col-b", "b", "--paired"});
    CHECK(p.out.find("test\tpaired\n") != std::string::npos);
    CHECK(cli({"ttest", "--input", (dir / "scores.tsv").string(), "--col-a", "a", "--col-b", "z"}).code ==
          kExitValidation);
    write_text(dir / "flat.tsv", "a\tb\n1\t2\n1\t2\n");
    const auto flat = cli({"ttest", "--input", (dir / "flat.tsv").string(), "--col-a", "a", "--col-b", "b"});
    CHECK(flat.code == kExitOk);
    CHECK(flat.out.find("\np\tnan") != std::string::npos);
}
