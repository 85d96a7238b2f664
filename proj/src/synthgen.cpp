#include "adbench/synthgen.hpp"

#include "adbench/error.hpp"
#include "adbench/exposure.hpp"
#include "adbench/rng.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace adbench {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string padded_id(char prefix, std::size_t i, std::size_t n) {
    const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i + 1);
    return buf;
}

void check_rates(const BaseCategoryRates& r, const char* what) {
    double sum = 0.0;
    for (double v : r) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + " rates must lie in [0, 1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 0.05) {
        throw ValidationError(std::string(what) + " rates must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

}  // namespace

void validate_gen_config(const GenConfig& c) {
    if (c.n_users < 1) throw ValidationError("n_users must be positive");
    if (c.n_products < 1) throw ValidationError("n_products must be positive");
    if (c.n_advert_matched > c.n_products) throw ValidationError("n_advert_matched exceeds n_products");
    if (c.n_days < 1 || c.n_days > 366) throw ValidationError("n_days must be in 1..366");
    if (c.n_channels < 1) throw ValidationError("n_channels must be positive");
    if (!(c.spots_per_day >= 0.0)) throw ValidationError("spots_per_day must be non-negative");
    if (!(c.primetime_share >= 0.0 && c.primetime_share <= 1.0)) {
        throw ValidationError("primetime_share must lie in [0, 1]");
    }
    if (!std::isfinite(c.beta_exposure)) throw ValidationError("beta_exposure must be finite");
    for (double b : c.beta_demo) {
        if (!std::isfinite(b)) throw ValidationError("beta_demo must be finite");
    }
    if (!parse_timestamp(c.start_date + "T00:00")) throw ValidationError("start_date must be YYYY-MM-DD");
    check_rates(c.ap_rates, "ap");
    check_rates(c.pi_rates, "pi");
    if (c.wave_persistence && !(*c.wave_persistence >= 0.0 && *c.wave_persistence < 1.0)) {
        throw ValidationError("wave_persistence must lie in [0, 1)");
    }
}

GenConfig parse_gen_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError("synth config", 0, e.what());
    }
    if (!doc.is_object()) throw ValidationError("synth config must be an object");
    GenConfig c;
    auto rates = [](const json& v, const char* key) {
        const auto r = v.get<std::vector<double>>();
        if (r.size() != 4) throw ValidationError(std::string(key) + " needs 4 base-category shares");
        return BaseCategoryRates{r[0], r[1], r[2], r[3]};
    };
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "n_users") c.n_users = v.get<std::size_t>();
            else if (key == "n_products") c.n_products = v.get<std::size_t>();
            else if (key == "n_advert_matched") c.n_advert_matched = v.get<std::size_t>();
            else if (key == "n_days") c.n_days = v.get<int>();
            else if (key == "start_date") c.start_date = v.get<std::string>();
            else if (key == "n_channels") c.n_channels = v.get<int>();
            else if (key == "spots_per_day") c.spots_per_day = v.get<double>();
            else if (key == "primetime_share") c.primetime_share = v.get<double>();
            else if (key == "beta_exposure") c.beta_exposure = v.get<double>();
            else if (key == "beta_demo") {
                const auto b = v.get<std::vector<double>>();
                if (b.size() != kDemographicDims) {
                    throw ValidationError("beta_demo needs " + std::to_string(kDemographicDims) + " values");
                }
                std::copy(b.begin(), b.end(), c.beta_demo.begin());
            } else if (key == "ap_rates") c.ap_rates = rates(v, "ap_rates");
            else if (key == "pi_rates") c.pi_rates = rates(v, "pi_rates");
            else if (key == "wave_persistence") {
                if (v.is_null()) c.wave_persistence.reset();
                else c.wave_persistence = v.get<double>();
            } else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else throw ValidationError("unknown synth config key \"" + key + "\"");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
    validate_gen_config(c);
    return c;
}

std::string gen_config_to_json(const GenConfig& c) {
    ordered_json doc;
    doc["n_users"] = c.n_users;
    doc["n_products"] = c.n_products;
    doc["n_advert_matched"] = c.n_advert_matched;
    doc["n_days"] = c.n_days;
    doc["start_date"] = c.start_date;
    doc["n_channels"] = c.n_channels;
    doc["spots_per_day"] = c.spots_per_day;
    doc["primetime_share"] = c.primetime_share;
    doc["beta_exposure"] = c.beta_exposure;
    doc["beta_demo"] = c.beta_demo;
    doc["ap_rates"] = c.ap_rates;
    doc["pi_rates"] = c.pi_rates;
    doc["wave_persistence"] = c.wave_persistence ? ordered_json(*c.wave_persistence) : ordered_json(nullptr);
    doc["seed"] = c.seed;
    return doc.dump(2) + "\n";
}

WaveModel wave_model(const BaseCategoryRates& rates, std::optional<double> persistence) {
    double sum = 0.0;
    for (double v : rates) sum += v;
    if (!(sum > 0.0)) throw CalibrationError("category rates sum to zero");
    const double r0 = rates[0] / sum;
    const double r1 = rates[1] / sum;
    const double r2 = rates[2] / sum;
    const double r3 = rates[3] / sum;

    WaveModel m;
    m.jan_rate = r0 + r3;
    m.mar_rate = r2 + r3;
    if (m.jan_rate <= 0.0 || m.jan_rate >= 1.0) {
        throw CalibrationError("January positive rate " + std::to_string(m.jan_rate) + " is not inside (0, 1)");
    }
    if (persistence) {
        m.persistence = *persistence;
    } else {
        m.persistence = r3 / (r0 + r3) - r2 / (r1 + r2);
        if (m.persistence < 0.0) {
            throw CalibrationError("category rates imply negative wave persistence (" + std::to_string(m.persistence) +
                                   ")");
        }
    }
    m.fresh_rate = (m.mar_rate - m.persistence * m.jan_rate) / (1.0 - m.persistence);
    if (!(m.fresh_rate > 0.0 && m.fresh_rate < 1.0)) {
        throw CalibrationError("March rate " + std::to_string(m.mar_rate) + " cannot be reached with persistence " +
                               std::to_string(m.persistence));
    }
    return m;
}

double calibrate_intercept(std::span<const double> scores, double target) {
    if (!(target > 0.0 && target < 1.0)) {
        throw CalibrationError("target rate " + std::to_string(target) + " is not inside (0, 1)");
    }
    if (scores.empty()) throw CalibrationError("no rows to calibrate on");
    auto rate = [&](double a) {
        double s = 0.0;
        for (double x : scores) s += logistic(a + x);
        return s / static_cast<double>(scores.size());
    };
    double lo = -50.0;
    double hi = 50.0;
    double mid = 0.0;
    for (int step = 0; step < 100; ++step) {
        mid = 0.5 * (lo + hi);
        const double r = rate(mid);
        if (std::abs(r - target) < 1e-12) break;
        (r < target ? lo : hi) = mid;
    }
    const double achieved = rate(mid);
    if (std::abs(achieved - target) > 0.005) {
        throw CalibrationError("intercept search reached rate " + std::to_string(achieved) + " for target " +
                               std::to_string(target));
    }
    return mid;
}

namespace {

struct Draft {
    Catalog catalog;
    std::vector<double> scores;  // user-major, product-minor
    Rng rng{0};
};

Draft draft_panel(const GenConfig& c) {
    validate_gen_config(c);
    Draft d;
    d.rng = Rng(c.seed);
    Rng& rng = d.rng;
    Catalog& cat = d.catalog;

    cat.users.reserve(c.n_users);
    for (std::size_t i = 0; i < c.n_users; ++i) {
        DemographicProfile p;
        p.user_id = padded_id('u', i, c.n_users);
        p.age = static_cast<AgeBracket>(rng.below(enum_size<AgeBracket>()));
        p.sex = static_cast<Sex>(rng.below(enum_size<Sex>()));
        p.marital = static_cast<MaritalStatus>(rng.below(enum_size<MaritalStatus>()));
        p.parental = static_cast<ParentalStatus>(rng.below(enum_size<ParentalStatus>()));
        p.income = static_cast<IncomeBracket>(rng.below(enum_size<IncomeBracket>()));
        cat.users.push_back(std::move(p));
    }
    for (std::size_t j = 0; j < c.n_products; ++j) cat.products.push_back(padded_id('p', j, c.n_products));

    const std::int64_t day0 = parse_timestamp(c.start_date + "T00:00")->minutes;
    auto channel = [&](std::uint64_t k) { return "ch" + std::to_string(k + 1); };

    constexpr std::int64_t kDurations[] = {15, 30, 60};
    const auto whole_spots = static_cast<std::int64_t>(std::floor(c.spots_per_day));
    const double extra_spot = c.spots_per_day - static_cast<double>(whole_spots);
    for (std::size_t j = 0; j < c.n_advert_matched; ++j) {
        for (int day = 0; day < c.n_days; ++day) {
            const std::int64_t spots = whole_spots + (rng.bernoulli(extra_spot) ? 1 : 0);
            for (std::int64_t s = 0; s < spots; ++s) {
                AdBroadcast b;
                b.product_id = cat.products[j];
                b.duration_s = kDurations[rng.below(3)];
                std::int64_t minute_of_day = 0;
                if (rng.bernoulli(c.primetime_share)) {
                    minute_of_day = 19 * 60 + static_cast<std::int64_t>(rng.below(4 * 60));
                } else {
                    // 06:00-19:00 or 23:00-24:00
                    const auto m = static_cast<std::int64_t>(rng.below(14 * 60));
                    minute_of_day = m < 13 * 60 ? 6 * 60 + m : 23 * 60 + (m - 13 * 60);
                }
                b.start = {day0 + day * 1440 + minute_of_day};
                b.channel = channel(rng.below(static_cast<std::uint64_t>(c.n_channels)));
                cat.broadcasts.push_back(std::move(b));
            }
        }
    }

    // Viewing: at most one session per clock hour, so sessions never
    // overlap. Hourly propensity is log-normal across users and three times
    // higher in primetime.
    for (const auto& user : cat.users) {
        const double propensity = std::min(0.3, 0.06 * std::exp(0.8 * rng.normal()));
        const auto favourite = rng.below(static_cast<std::uint64_t>(c.n_channels));
        for (int day = 0; day < c.n_days; ++day) {
            for (int hour = 6; hour < 24; ++hour) {
                const bool prime = hour >= 19 && hour < 23;
                const double p = std::min(0.95, propensity * (prime ? 3.0 : 1.0));
                if (!rng.bernoulli(p)) continue;
                ViewingRecord v;
                v.user_id = user.user_id;
                const auto offset = static_cast<std::int64_t>(rng.below(10));
                v.start = {day0 + day * 1440 + hour * 60 + offset};
                v.duration_s = (10 + static_cast<std::int64_t>(rng.below(40))) * 60 +
                               static_cast<std::int64_t>(rng.below(60));
                v.channel =
                    channel(rng.bernoulli(0.5) ? favourite : rng.below(static_cast<std::uint64_t>(c.n_channels)));
                cat.viewing.push_back(std::move(v));
            }
        }
    }

    const ExposureMatrix exposure = compute_exposure(cat.viewing, cat.broadcasts);
    d.scores.reserve(c.n_users * c.n_products);
    for (const auto& user : cat.users) {
        const auto demo = encode_demographics(user);
        double demo_score = 0.0;
        for (std::size_t k = 0; k < kDemographicDims; ++k) demo_score += c.beta_demo[k] * demo[k];
        for (const auto& product : cat.products) {
            const double seconds = static_cast<double>(exposure.pair_total(user.user_id, product));
            d.scores.push_back(demo_score + c.beta_exposure * seconds / 100.0);
        }
    }
    return d;
}

Intercepts intercepts_for(const GenConfig& c, std::span<const double> scores) {
    const WaveModel ap = wave_model(c.ap_rates, c.wave_persistence);
    const WaveModel pi = wave_model(c.pi_rates, c.wave_persistence);
    return {calibrate_intercept(scores, ap.jan_rate), calibrate_intercept(scores, ap.fresh_rate),
            calibrate_intercept(scores, pi.jan_rate), calibrate_intercept(scores, pi.fresh_rate)};
}

}  // namespace

Intercepts calibrate_intercepts(const GenConfig& config) {
    const Draft d = draft_panel(config);
    return intercepts_for(config, d.scores);
}

Catalog generate_panel(const GenConfig& config) {
    Draft d = draft_panel(config);
    const Intercepts a = intercepts_for(config, d.scores);
    const WaveModel ap = wave_model(config.ap_rates, config.wave_persistence);
    const WaveModel pi = wave_model(config.pi_rates, config.wave_persistence);
    Rng& rng = d.rng;
    Catalog& cat = d.catalog;

    // Every draw is taken whether or not it is used, so the stream position
    // of a row does not depend on earlier answers.
    auto waves_of = [&](double score, double a_jan, double a_fresh, double persistence) {
        const bool jan = rng.uniform() < logistic(a_jan + score);
        const bool keep = rng.uniform() < persistence;
        const bool fresh = rng.uniform() < logistic(a_fresh + score);
        return std::pair{jan, keep ? jan : fresh};
    };

    std::size_t row = 0;
    cat.responses.reserve(d.scores.size());
    for (const auto& user : cat.users) {
        for (const auto& product : cat.products) {
            const double s = d.scores[row++];
            SurveyResponse r;
            r.user_id = user.user_id;
            r.product_id = product;
            std::tie(r.ap_jan, r.ap_mar) = waves_of(s, a.ap_jan, a.ap_fresh, ap.persistence);
            std::tie(r.pi_jan, r.pi_mar) = waves_of(s, a.pi_jan, a.pi_fresh, pi.persistence);
            cat.responses.push_back(std::move(r));
        }
    }
    canonicalize(cat);
    validate_catalog(cat);
    return cat;
}

}  // namespace adbench
