#pragma once

#include "adbench/data_model.hpp"
#include "adbench/exposure.hpp"
#include "adbench/targets.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adbench {

/// Which feature blocks a model sees.
enum class FeatureSet : std::uint8_t {
    ViewWeekdaySlot,
    ViewWeekday,
    Demographics,
    ViewWeekdaySlotPlusDemo,
    ViewWeekdayPlusDemo,
};

constexpr std::array<FeatureSet, 5> kAllFeatureSets{FeatureSet::ViewWeekdaySlot, FeatureSet::ViewWeekday,
                                                    FeatureSet::Demographics, FeatureSet::ViewWeekdaySlotPlusDemo,
                                                    FeatureSet::ViewWeekdayPlusDemo};

constexpr bool has_demographics(FeatureSet s) noexcept {
    return s == FeatureSet::Demographics || s == FeatureSet::ViewWeekdaySlotPlusDemo ||
           s == FeatureSet::ViewWeekdayPlusDemo;
}
constexpr bool has_viewing(FeatureSet s) noexcept { return s != FeatureSet::Demographics; }
constexpr bool has_slots(FeatureSet s) noexcept {
    return s == FeatureSet::ViewWeekdaySlot || s == FeatureSet::ViewWeekdaySlotPlusDemo;
}

std::string_view feature_set_code(FeatureSet s);   // weekday_slot, weekday, demographics, ...
std::string_view feature_set_label(FeatureSet s);  // human-readable column title
std::optional<FeatureSet> feature_set_from_code(std::string_view code);

struct InputConfig {
    FeatureSet features = FeatureSet::ViewWeekdaySlot;
    /// Append the January purchase-intention answer. Only meaningful with a
    /// demographic block and an Actual Purchase target.
    bool include_pi_feature = false;

    bool operator==(const InputConfig&) const = default;
};

/// dims(features) + (include_pi_feature ? 1 : 0)
std::size_t feature_dims(const InputConfig& config);

enum class BaseKind : std::uint8_t { ProductBased, UserBased };

std::string_view base_kind_code(BaseKind k);  // "product" / "user"
std::optional<BaseKind> base_kind_from_code(std::string_view code);

/// ProductBased: one row per user for a fixed product.
/// UserBased: one row per advert-matched product for a fixed user.
struct ModelBase {
    BaseKind kind = BaseKind::ProductBased;
    std::string base_id;

    bool operator==(const ModelBase&) const = default;
};

/// Dense row-major matrix with row provenance and column names.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> values;
    std::vector<std::pair<std::string, std::string>> row_keys;  // (user_id, product_id)
    std::vector<std::string> feature_names;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * dims, dims}; }
    double at(std::size_t r, std::size_t c) const { return values[r * dims + c]; }
};

constexpr std::size_t kDemographicDims = 25;

/// Concatenated one-hot blocks: age(5) sex(2) marital(3) parental(2)
/// income(13), each in survey listing order.
std::array<double, kDemographicDims> encode_demographics(const DemographicProfile& profile);
std::vector<std::string> demographic_feature_names();

/// Rows sorted by (user_id, product_id). Throws ValidationError for an
/// unknown base id, a user-based base on a catalog with no advert-matched
/// products, or a PI feature requested while predicting purchase intention
/// (or without a demographic block).
FeatureMatrix build_matrix(const CatalogIndex& catalog, const ExposureMatrix& exposure, const ModelBase& base,
                           const InputConfig& config, Behavior target_behavior);

/// Survey rows for a base, in the same order as build_matrix's rows.
std::vector<SurveyResponse> base_responses(const CatalogIndex& catalog, const ModelBase& base);

/// Header = feature names; one row per matrix row, prefixed by its keys.
std::string format_matrix_table(const FeatureMatrix& matrix);

}  // namespace adbench
