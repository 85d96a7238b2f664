#pragma once

#include "adbench/data_model.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace adbench {

enum class Behavior : std::uint8_t { ActualPurchase, PurchaseIntention };

constexpr int kCategories = 6;

std::string_view behavior_code(Behavior b);  // "AP" / "PI"
std::string_view behavior_name(Behavior b);  // "Actual Purchase" / "Purchase Intention"
std::optional<Behavior> behavior_from_code(std::string_view code);

/// Categories a (January, March) answer pair belongs to.
///   0: Yes,No   1: No,No   2: No,Yes   3: Yes,Yes
///   4: any,Yes  5: any,No
/// Exactly one of 0..3 is set, plus 4 or 5.
class CategorySet {
public:
    constexpr CategorySet() = default;

    constexpr bool contains(int category) const noexcept {
        return category >= 0 && category < kCategories && ((bits_ >> category) & 1u);
    }
    constexpr std::uint8_t bits() const noexcept { return bits_; }
    constexpr int size() const noexcept { return std::popcount(bits_); }

    constexpr bool operator==(const CategorySet&) const = default;

    static constexpr CategorySet of(std::initializer_list<int> members) {
        CategorySet s;
        for (int m : members) s.bits_ = static_cast<std::uint8_t>(s.bits_ | (1u << m));
        return s;
    }

private:
    std::uint8_t bits_ = 0;
};

constexpr CategorySet categorize(bool jan, bool mar) noexcept {
    if (jan && !mar) return CategorySet::of({0, 5});
    if (!jan && !mar) return CategorySet::of({1, 5});
    if (!jan && mar) return CategorySet::of({2, 4});
    return CategorySet::of({3, 4});
}

/// Wave answers of one response for the given behavior.
std::pair<bool, bool> waves(const SurveyResponse& r, Behavior behavior) noexcept;

/// 1 where `category` is in categorize(waves(r, behavior)), in input order.
std::vector<int> label_vector(std::span<const SurveyResponse> responses, Behavior behavior, int category);

/// Fraction of rows whose category set contains each category.
std::array<double, kCategories> category_distribution(std::span<const SurveyResponse> responses, Behavior behavior);

/// Row counts per category (same membership rule).
std::array<std::size_t, kCategories> category_counts(std::span<const SurveyResponse> responses, Behavior behavior);

}  // namespace adbench
