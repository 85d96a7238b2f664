#include "adbench/targets.hpp"

#include "adbench/error.hpp"

namespace adbench {

std::string_view behavior_code(Behavior b) { return b == Behavior::ActualPurchase ? "AP" : "PI"; }

std::string_view behavior_name(Behavior b) {
    return b == Behavior::ActualPurchase ? "Actual Purchase" : "Purchase Intention";
}

std::optional<Behavior> behavior_from_code(std::string_view code) {
    if (code == "AP") return Behavior::ActualPurchase;
    if (code == "PI") return Behavior::PurchaseIntention;
    return std::nullopt;
}

std::pair<bool, bool> waves(const SurveyResponse& r, Behavior behavior) noexcept {
    if (behavior == Behavior::ActualPurchase) return {r.ap_jan, r.ap_mar};
    return {r.pi_jan, r.pi_mar};
}

std::vector<int> label_vector(std::span<const SurveyResponse> responses, Behavior behavior, int category) {
    if (category < 0 || category >= kCategories) throw ValidationError("category out of range");
    std::vector<int> labels;
    labels.reserve(responses.size());
    for (const auto& r : responses) {
        const auto [jan, mar] = waves(r, behavior);
        labels.push_back(categorize(jan, mar).contains(category) ? 1 : 0);
    }
    return labels;
}

std::array<std::size_t, kCategories> category_counts(std::span<const SurveyResponse> responses, Behavior behavior) {
    std::array<std::size_t, kCategories> counts{};
    for (const auto& r : responses) {
        const auto [jan, mar] = waves(r, behavior);
        const auto set = categorize(jan, mar);
        for (int c = 0; c < kCategories; ++c) counts[c] += set.contains(c) ? 1 : 0;
    }
    return counts;
}

std::array<double, kCategories> category_distribution(std::span<const SurveyResponse> responses, Behavior behavior) {
    if (responses.empty()) throw ValidationError("category_distribution needs at least one response");
    const auto counts = category_counts(responses, behavior);
    std::array<double, kCategories> frac{};
    for (int c = 0; c < kCategories; ++c) {
        frac[c] = static_cast<double>(counts[c]) / static_cast<double>(responses.size());
    }
    return frac;
}

}  // namespace adbench
