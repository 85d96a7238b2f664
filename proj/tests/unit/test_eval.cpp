#include "adbench/error.hpp"
#include "adbench/eval.hpp"
#include "fixtures.hpp"

#include "doctest.h"

#include <set>

using namespace adbench;

TEST_CASE("metrics on every confusion matrix with total <= 12") {
    std::size_t checked = 0;
    for (std::size_t total = 0; total <= 12; ++total) {
        for (std::size_t tp = 0; tp <= total; ++tp) {
            for (std::size_t fp = 0; tp + fp <= total; ++fp) {
                for (std::size_t fn = 0; tp + fp + fn <= total; ++fn) {
                    const Confusion c{tp, fp, total - tp - fp - fn, fn};
                    const Metrics m = metrics(c);
                    const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
                    const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
                    const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
                    CHECK(m.precision == p);
                    CHECK(m.recall == r);
                    CHECK(m.f1 == f);
                    ++checked;
                }
            }
        }
    }
    CHECK(checked == 1820);
}

TEST_CASE("zero-division cases map to zero") {
    CHECK(metrics({0, 0, 5, 0}) == Metrics{0, 0, 0});
    CHECK(metrics({0, 3, 0, 0}) == Metrics{0, 0, 0});
    CHECK(metrics({0, 0, 0, 3}) == Metrics{0, 0, 0});
    CHECK(metrics({}) == Metrics{0, 0, 0});
}

TEST_CASE("confusion counts") {
    const std::vector<int> truth{1, 1, 0, 0, 1};
    const std::vector<int> pred{1, 0, 1, 0, 1};
    CHECK(confusion_of(truth, pred) == Confusion{2, 1, 1, 1});
}

TEST_CASE("k-fold split partitions the rows") {
    for (std::size_t n : {5u, 10u, 17u, 200u}) {
        for (int k : {2, 5}) {
            const auto folds = kfold_split(n, k, 42);
            REQUIRE(folds.size() == static_cast<std::size_t>(k));
            std::set<std::size_t> all;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const std::size_t want = n / k + (f < n % k ? 1 : 0);
                CHECK(folds[f].size() == want);
                CHECK(std::is_sorted(folds[f].begin(), folds[f].end()));
                all.insert(folds[f].begin(), folds[f].end());
            }
            CHECK(all.size() == n);
            CHECK(*all.rbegin() == n - 1);
        }
    }
    CHECK(kfold_split(20, 5, 1) == kfold_split(20, 5, 1));
    CHECK(kfold_split(20, 5, 1) != kfold_split(20, 5, 2));
    CHECK_THROWS_AS(kfold_split(4, 5, 1), ValidationError);
    CHECK_THROWS_AS(kfold_split(4, 1, 1), ValidationError);
}

TEST_CASE("cross-validation aggregates per fold and is deterministic") {
    Rng rng(21);
    const auto prob = testing::random_problem(rng, 50, 3);
    for (auto learner : kAllLearners) {
        const auto a = cross_validate(prob.x, prob.y, learner, {}, 5, 9);
        REQUIRE(a.folds.size() == 5);
        double sum_f1 = 0.0;
        std::size_t rows = 0;
        for (const auto& f : a.folds) {
            sum_f1 += f.scores.f1;
            rows += f.confusion.total();
            CHECK(f.scores == metrics(f.confusion));
        }
        CHECK(rows == 50);
        CHECK(a.mean_f1 == doctest::Approx(sum_f1 / 5.0).epsilon(1e-15));
        CvOptions parallel;
        parallel.workers = 4;
        CHECK(cross_validate(prob.x, prob.y, learner, {}, 5, 9, parallel) == a);

        CvOptions pooled;
        pooled.averaging = Averaging::Pooled;
        const auto b = cross_validate(prob.x, prob.y, learner, {}, 5, 9, pooled);
        Confusion total;
        for (const auto& f : b.folds) total += f.confusion;
        CHECK(b.mean_f1 == metrics(total).f1);
    }
}

TEST_CASE("a learnable problem scores well") {
    Rng rng(22);
    const auto prob = testing::random_problem(rng, 200, 2);
    for (auto learner : kAllLearners) {
        CvOptions o;
        o.standardize = true;
        CHECK(cross_validate(prob.x, prob.y, learner, {}, 5, 3, o).mean_f1 > 0.7);
    }
}

TEST_CASE("select_rows copies values") {
    const auto x = testing::matrix_of(3, 2, {1, 2, 3, 4, 5, 6});
    const std::vector<std::size_t> rows{2, 0};
    const auto s = select_rows(x, rows);
    CHECK(s.rows == 2);
    CHECK(s.values == std::vector<double>{5, 6, 1, 2});
}
