// Serial reference vs parallel kernel timings on a synthetic panel.
//
//   bench_kernels [--users N] [--products N] [--workers N] [--repeats N]

#include "adbench/exposure.hpp"
#include "adbench/runner.hpp"
#include "adbench/synthgen.hpp"

#include <chrono>
#include <iostream>

#include "CLI11.hpp"

using namespace adbench;

namespace {

template <typename F>
double best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const std::string& kernel, double serial, double parallel, bool same) {
    std::cout << kernel << "\t" << serial << "\t" << parallel << "\t" << serial / parallel << "\t"
              << (same ? "identical" : "DIFFERENT") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs parallel kernel benchmark"};
    std::size_t users = 200;
    std::size_t products = 6;
    int workers = 4;
    int repeats = 3;
    app.add_option("--users", users, "Panel users");
    app.add_option("--products", products, "Advert-matched products");
    app.add_option("--workers", workers, "Parallel workers");
    app.add_option("--repeats", repeats, "Timed repetitions (best is reported)");
    CLI11_PARSE(app, argc, argv);

    GenConfig g;
    g.n_users = users;
    g.n_products = products;
    g.n_advert_matched = products;
    g.beta_exposure = 0.5;
    const Catalog catalog = generate_panel(g);
    std::cout << "viewing rows: " << catalog.viewing.size() << ", broadcasts: " << catalog.broadcasts.size()
              << "\n";
    std::cout << "kernel\tserial_s\tparallel_s\tspeedup\tcheck\n";

    ExposureMatrix serial_ex, parallel_ex;
    const double es = best_of(repeats, [&] { serial_ex = compute_exposure_reference(catalog.viewing, catalog.broadcasts); });
    const double ep = best_of(repeats, [&] { parallel_ex = compute_exposure(catalog.viewing, catalog.broadcasts); });
    row("exposure", es, ep, format_exposure_table(serial_ex) == format_exposure_table(parallel_ex));

    const CatalogIndex index(catalog);
    const RunContext context{index, parallel_ex};
    MatrixConfig m;
    m.base_kinds = {BaseKind::ProductBased};
    m.categories = {4};
    const auto e = enumerate_experiments(catalog, m);
    ScoreStore serial_run, parallel_run;
    const double rs = best_of(1, [&] { serial_run = run_matrix_serial(e.specs, context, m.params); });
    RunOptions o;
    o.workers = workers;
    const double rp = best_of(1, [&] { parallel_run = run_matrix(e.specs, context, o); });
    row("matrix (" + std::to_string(e.specs.size()) + " experiments)", rs, rp,
        serial_run.records == parallel_run.records);
    return 0;
}
