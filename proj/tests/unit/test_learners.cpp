#include "adbench/error.hpp"
#include "adbench/learners.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "doctest.h"

#include <cmath>
#include <numeric>

using namespace adbench;
using adbench::testing::matrix_of;
using adbench::testing::random_problem;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("learner codes") {
    for (auto k : kAllLearners) CHECK(learner_from_code(learner_code(k)) == k);
    CHECK_FALSE(learner_from_code("SVM"));
}

TEST_CASE("parameter validation") {
    LearnerParams p;
    CHECK_NOTHROW(validate_params(p));
    p.svm_c = 0;
    CHECK_THROWS_AS(validate_params(p), ValidationError);
    p = {};
    p.gbrt_max_depth = 0;
    CHECK_THROWS_AS(validate_params(p), ValidationError);
    p = {};
    p.gbrt_min_child_weight = -1;
    CHECK_THROWS_AS(validate_params(p), ValidationError);
    p = {};
    p.logreg_l2 = std::nan("");
    CHECK_THROWS_AS(validate_params(p), ValidationError);
}

TEST_CASE("training input is checked") {
    const auto x = matrix_of(2, 1, {0.0, 1.0});
    const std::vector<int> bad_len{1};
    const std::vector<int> bad_label{0, 2};
    for (auto k : kAllLearners) {
        CHECK_THROWS_AS(train(k, x, bad_len, {}), ValidationError);
        CHECK_THROWS_AS(train(k, x, bad_label, {}), ValidationError);
    }
}

TEST_CASE("logistic gradient matches central finite differences") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto rows = 5 + rng.below(36);
        const auto dims = 1 + rng.below(8);
        const auto prob = random_problem(rng, rows, dims, 1.0 + 2.0 * rng.uniform());
        std::vector<double> w(dims);
        for (double& v : w) v = rng.normal();
        const double b = rng.normal();
        const double l2 = 0.1 + 3.0 * rng.uniform();
        const auto analytic = logreg_gradient(w, b, prob.x, prob.y, l2);
        const auto numeric = oracle::logreg_numeric_gradient(w, b, prob.x, prob.y, l2);
        REQUIRE(analytic.size() == dims + 1);
        std::vector<double> diff(analytic.size());
        for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = analytic[k] - numeric[k];
        CHECK(inf_norm(diff) <= 1e-5 * std::max(inf_norm(numeric), 1e-300));
    }
}

TEST_CASE("logistic regression reaches a stationary point") {
    Rng rng(12);
    for (int i = 0; i < 10; ++i) {
        const auto prob = random_problem(rng, 60, 4);
        TrainingTrace trace;
        const auto m = train_logreg(prob.x, prob.y, {}, &trace);
        CHECK(trace.converged);
        const auto g = logreg_gradient(m.weights, m.bias, prob.x, prob.y, 1.0);
        CHECK(inf_norm(g) <= 1e-6);
        for (std::size_t k = 1; k < trace.objective.size(); ++k) CHECK(trace.objective[k] <= trace.objective[k - 1]);
    }
}

TEST_CASE("SVM primal objective is within 1% of the projected-gradient oracle") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        const auto rows = 8 + rng.below(33);
        const auto dims = 1 + rng.below(6);
        const auto prob = random_problem(rng, rows, dims);
        const double c = 0.1 + 2.0 * rng.uniform();
        LearnerParams p;
        p.svm_c = c;
        const auto model = train_svm(prob.x, prob.y, p);
        const double ours = svm_primal_objective(model, prob.x, prob.y, c);
        const auto ref = oracle::svm_projected_gradient(prob.x, prob.y, c, 20000);
        INFO("instance " << i << " rows " << rows << " dims " << dims);
        CHECK(ref.primal - ref.dual <= 1e-3 * ref.primal);
        CHECK(std::abs(ours - ref.primal) <= 0.01 * ref.primal);
        CHECK(ours == doctest::Approx(oracle::svm_primal(model.weights, model.bias, prob.x, prob.y, c)));
    }
}

TEST_CASE("SVM separates a separable problem and reports convergence") {
    const auto x = matrix_of(4, 1, {-2.0, -1.0, 1.0, 2.0});
    const std::vector<int> y{0, 0, 1, 1};
    TrainingTrace trace;
    const auto m = train_svm(x, y, {}, &trace);
    CHECK(trace.converged);
    CHECK(predict(m, x) == y);
    CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("GBRT single stump has leaf weights -G/(H + lambda)") {
    // Rows already in canonical order (by feature, then label).
    const auto x = matrix_of(6, 1, {0, 0, 0, 1, 1, 1});
    const std::vector<int> y{0, 0, 1, 1, 1, 1};
    LearnerParams p;
    p.gbrt_n_estimators = 1;
    p.gbrt_max_depth = 1;
    p.gbrt_min_child_weight = 0.0;
    p.gbrt_lambda = 1.0;
    const auto model = train_gbrt(x, y, p);

    const double base = std::log(4.0 / 2.0);
    CHECK(model.base_score == doctest::Approx(base).epsilon(1e-15));
    const double p0 = sigmoid(model.base_score);
    double g_left = 0, h_left = 0, g_right = 0, h_right = 0;
    for (std::size_t r = 0; r < 6; ++r) {
        const double g = p0 - y[r];
        const double h = p0 * (1.0 - p0);
        if (x.at(r, 0) < 0.5) {
            g_left += g;
            h_left += h;
        } else {
            g_right += g;
            h_right += h;
        }
    }
    REQUIRE(model.trees.size() == 1);
    const Tree& t = model.trees[0];
    REQUIRE(t.size() == 3);
    CHECK(t[0].feature == 0);
    CHECK(t[0].threshold == 0.5);
    CHECK(t[t[0].left].weight == -g_left / (h_left + p.gbrt_lambda));
    CHECK(t[t[0].right].weight == -g_right / (h_right + p.gbrt_lambda));
    CHECK(tree_depth(t) == 1);
}

TEST_CASE("GBRT stump on a balanced set") {
    const auto x = matrix_of(4, 1, {0, 0, 1, 1});
    const std::vector<int> y{0, 0, 1, 1};
    LearnerParams p;
    p.gbrt_n_estimators = 1;
    p.gbrt_max_depth = 1;
    p.gbrt_min_child_weight = 0.0;
    const auto model = train_gbrt(x, y, p);
    CHECK(model.base_score == 0.0);
    // g = +-0.5, h = 0.25 per row: leaves -(1)/(0.5 + 1) and +1/1.5.
    CHECK(model.trees[0][1].weight == -1.0 / 1.5);
    CHECK(model.trees[0][2].weight == 1.0 / 1.5);
}

TEST_CASE("GBRT training log-loss never increases") {
    Rng rng(14);
    for (int i = 0; i < 10; ++i) {
        const auto prob = random_problem(rng, 30 + rng.below(70), 1 + rng.below(6));
        TrainingTrace trace;
        const auto model = train_gbrt(prob.x, prob.y, {}, &trace);
        REQUIRE(trace.objective.size() == 101);
        for (std::size_t k = 1; k < trace.objective.size(); ++k) CHECK(trace.objective[k] <= trace.objective[k - 1]);
        CHECK(log_loss(model, prob.x, prob.y) == doctest::Approx(trace.objective.back()).epsilon(1e-12));
        for (const auto& tree : model.trees) CHECK(tree_depth(tree) <= 3);
    }
}

TEST_CASE("GBRT respects min child weight") {
    const auto x = matrix_of(4, 1, {0, 0, 1, 1});
    const std::vector<int> y{0, 0, 1, 1};
    LearnerParams p;
    p.gbrt_n_estimators = 1;
    p.gbrt_min_child_weight = 0.6;  // each side has hessian 0.5
    const auto model = train_gbrt(x, y, p);
    CHECK(model.trees[0].size() == 1);
}

TEST_CASE("single-class labels give a constant predictor") {
    const auto x = matrix_of(3, 2, {1, 2, 3, 4, 5, 6});
    for (int cls : {0, 1}) {
        const std::vector<int> y(3, cls);
        for (auto k : kAllLearners) {
            const auto m = train(k, x, y, {});
            CHECK(predict(m, x) == y);
        }
    }
}

TEST_CASE("row order does not change the fitted model") {
    Rng rng(15);
    for (int i = 0; i < 5; ++i) {
        const auto prob = random_problem(rng, 40, 3);
        std::vector<std::size_t> perm(prob.x.rows);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span(perm));
        FeatureMatrix xs = prob.x;
        std::vector<int> ys(prob.y.size());
        for (std::size_t r = 0; r < perm.size(); ++r) {
            for (std::size_t f = 0; f < xs.dims; ++f) xs.values[r * xs.dims + f] = prob.x.at(perm[r], f);
            ys[r] = prob.y[perm[r]];
        }
        for (auto k : kAllLearners) CHECK(train(k, prob.x, prob.y, {}) == train(k, xs, ys, {}));
    }
}

TEST_CASE("model text round trips") {
    Rng rng(16);
    const auto prob = random_problem(rng, 30, 3);
    for (auto k : kAllLearners) {
        const Model m = train(k, prob.x, prob.y, {});
        const auto text = serialize_model(m);
        CHECK(parse_model(text) == m);
        CHECK(serialize_model(parse_model(text)) == text);
    }
    CHECK_THROWS_AS(parse_model("linear svm 2\nbias 0\nweights 1"), ValidationError);
    CHECK_THROWS_AS(parse_model("forest 1"), ValidationError);
}

TEST_CASE("prediction checks dimensions") {
    const auto x = matrix_of(2, 1, {0.0, 1.0});
    const std::vector<int> y{0, 1};
    const auto m = train(LearnerKind::Logistic, x, y, {});
    CHECK_THROWS_AS(predict(m, matrix_of(1, 2, {0, 0})), ValidationError);
}
