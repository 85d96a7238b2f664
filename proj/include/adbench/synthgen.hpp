#pragma once

#include "adbench/data_model.hpp"
#include "adbench/features.hpp"
#include "adbench/targets.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace adbench {

/// Shares of the four base categories (Yes/No, No/No, No/Yes, Yes/Yes).
using BaseCategoryRates = std::array<double, 4>;

constexpr BaseCategoryRates kDefaultApRates{0.06, 0.76, 0.07, 0.10};
constexpr BaseCategoryRates kDefaultPiRates{0.08, 0.58, 0.08, 0.26};

struct GenConfig {
    std::size_t n_users = 200;
    std::size_t n_products = 6;
    std::size_t n_advert_matched = 6;
    int n_days = 28;
    std::string start_date = "2024-01-08";  // a Monday
    int n_channels = 5;
    double spots_per_day = 6.0;  // broadcasts per advert-matched product
    double primetime_share = 0.6;  // share of broadcasts aired 19:00-23:00

    /// Log-odds per 100 s of exposure to the product's adverts.
    double beta_exposure = 0.0;
    /// Log-odds per demographic one-hot dimension (encode_demographics order).
    std::array<double, kDemographicDims> beta_demo{};

    BaseCategoryRates ap_rates = kDefaultApRates;
    BaseCategoryRates pi_rates = kDefaultPiRates;
    /// Probability that the March answer copies January. nullopt: derived
    /// from the rates so that with zero effects all four shares are met.
    std::optional<double> wave_persistence;

    std::uint64_t seed = 1;

    bool operator==(const GenConfig&) const = default;
};

/// Throws ValidationError on out-of-range fields.
void validate_gen_config(const GenConfig& config);

/// Structured-text (JSON) form. Unknown keys are rejected; missing keys
/// keep their defaults.
GenConfig parse_gen_config(std::string_view json_text);
std::string gen_config_to_json(const GenConfig& config);

/// Wave model for one behavior.
struct WaveModel {
    double jan_rate = 0.0;
    double mar_rate = 0.0;
    double persistence = 0.0;
    double fresh_rate = 0.0;  // positive rate of the non-persistent March draw
};

/// Throws CalibrationError when the rates admit no persistence/fresh-rate
/// pair.
WaveModel wave_model(const BaseCategoryRates& rates, std::optional<double> persistence);

/// Intercept a with mean(sigmoid(a + score_i)) within 0.005 of `target`, by
/// bisection (at most 100 steps). Throws CalibrationError if the target is
/// outside (0, 1) or the search does not converge.
double calibrate_intercept(std::span<const double> scores, double target);

/// Calibrated intercepts of the four logistic draws.
struct Intercepts {
    double ap_jan = 0.0;
    double ap_fresh = 0.0;
    double pi_jan = 0.0;
    double pi_fresh = 0.0;
};

Intercepts calibrate_intercepts(const GenConfig& config);

/// Deterministic per seed. Draw order: demographics, broadcasts, viewing,
/// then survey answers user-major and product-minor (AP January, AP March,
/// PI January, PI March). The result is canonical and valid.
Catalog generate_panel(const GenConfig& config);

}  // namespace adbench
