#include "adbench/targets.hpp"
#include "fixtures.hpp"

#include "doctest.h"

using namespace adbench;

TEST_CASE("the four answer patterns map to their categories") {
    CHECK(categorize(true, false) == CategorySet::of({0, 5}));
    CHECK(categorize(false, false) == CategorySet::of({1, 5}));
    CHECK(categorize(false, true) == CategorySet::of({2, 4}));
    CHECK(categorize(true, true) == CategorySet::of({3, 4}));
    for (bool jan : {false, true}) {
        for (bool mar : {false, true}) {
            const auto s = categorize(jan, mar);
            CHECK(s.size() == 2);
            CHECK(s.contains(4) != s.contains(5));
            CHECK(s.contains(4) == mar);
        }
    }
    CHECK_FALSE(CategorySet{}.contains(-1));
    CHECK_FALSE(CategorySet::of({0}).contains(6));
}

TEST_CASE("behavior codes") {
    CHECK(behavior_code(Behavior::ActualPurchase) == "AP");
    CHECK(behavior_name(Behavior::PurchaseIntention) == "Purchase Intention");
    CHECK(behavior_from_code("PI") == Behavior::PurchaseIntention);
    CHECK_FALSE(behavior_from_code("ap"));
}

TEST_CASE("waves pick the behavior's answers") {
    const SurveyResponse r{"u", "p", true, false, false, true};
    CHECK(waves(r, Behavior::PurchaseIntention) == std::pair{true, false});
    CHECK(waves(r, Behavior::ActualPurchase) == std::pair{false, true});
}

TEST_CASE("labels and counts agree; union categories add up") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Catalog c = testing::random_catalog(rng);
        for (auto b : {Behavior::ActualPurchase, Behavior::PurchaseIntention}) {
            const auto n = category_counts(c.responses, b);
            CHECK(n[4] == n[2] + n[3]);
            CHECK(n[5] == n[0] + n[1]);
            CHECK(n[4] + n[5] == c.responses.size());
            const auto d = category_distribution(c.responses, b);
            for (int k = 0; k < kCategories; ++k) {
                const auto y = label_vector(c.responses, b, k);
                std::size_t ones = 0;
                for (int v : y) ones += static_cast<std::size_t>(v);
                CHECK(ones == n[k]);
                CHECK(d[k] == doctest::Approx(static_cast<double>(n[k]) / static_cast<double>(c.responses.size())));
            }
        }
    }
}
