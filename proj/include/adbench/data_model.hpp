#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adbench {

// ---------------------------------------------------------------------------
// Demographic answer sets. Enumerator order and the label spellings are the
// survey answer lists, in listing order; the one-hot encoding and the file
// format both depend on them.
// ---------------------------------------------------------------------------

enum class AgeBracket : std::uint8_t { Age18To25, Age26To35, Age36To45, Age46To55, Age56Plus };
enum class Sex : std::uint8_t { Male, Female };
enum class MaritalStatus : std::uint8_t { Single, Married, DivorcedOrWidowed };
enum class ParentalStatus : std::uint8_t { Parent, NotParent };
enum class IncomeBracket : std::uint8_t {
    NotDisclosed,
    NoIncome,
    Under1M,
    From1MTo2M,
    From2MTo3M,
    From3MTo4M,
    From4MTo5M,
    From5MTo6M,
    From6MTo7M,
    From7MTo10M,
    From10MTo15M,
    From15MTo20M,
    Over20M,
};

template <typename E>
struct EnumLabels;

template <>
struct EnumLabels<AgeBracket> {
    static constexpr std::array<std::string_view, 5> values{
        "18 to 25 years old", "26 to 35 years old", "36 to 45 years old", "46 to 55 years old", "56 or older"};
};
template <>
struct EnumLabels<Sex> {
    static constexpr std::array<std::string_view, 2> values{"Male", "Female"};
};
template <>
struct EnumLabels<MaritalStatus> {
    static constexpr std::array<std::string_view, 3> values{"Single", "Married", "Divorced or Widowed"};
};
template <>
struct EnumLabels<ParentalStatus> {
    static constexpr std::array<std::string_view, 2> values{"Parent", "Not a Parent"};
};
template <>
struct EnumLabels<IncomeBracket> {
    static constexpr std::array<std::string_view, 13> values{
        "Not disclosed",
        "No Income",
        "Under 1,000,000 yen",
        "From 1,000,000 yen to 2,000,000 yen",
        "From 2,000,000 yen to 3,000,000 yen",
        "From 3,000,000 yen to 4,000,000 yen",
        "From 4,000,000 yen to 5,000,000 yen",
        "From 5,000,000 yen to 6,000,000 yen",
        "From 6,000,000 yen to 7,000,000 yen",
        "From 7,000,000 yen to 10,000,000 yen",
        "From 10,000,000 yen to 15,000,000 yen",
        "From 15,000,000 yen to 20,000,000 yen",
        "Over 20,000,000 yen",
    };
};

template <typename E>
constexpr std::size_t enum_size() {
    return EnumLabels<E>::values.size();
}

template <typename E>
constexpr std::string_view to_label(E value) {
    return EnumLabels<E>::values[static_cast<std::size_t>(value)];
}

template <typename E>
std::optional<E> from_label(std::string_view text) {
    const auto& labels = EnumLabels<E>::values;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == text) return static_cast<E>(i);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Time. Local wall-clock, minute resolution, no time zone.
// ---------------------------------------------------------------------------

/// Minutes since 1970-01-01T00:00 on the local clock.
struct Timestamp {
    std::int64_t minutes = 0;

    std::int64_t seconds() const noexcept { return minutes * 60; }
    auto operator<=>(const Timestamp&) const = default;
};

/// "YYYY-MM-DDTHH:MM". Returns nullopt on any deviation from that shape or
/// on an invalid calendar date.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Weekday of a second count since the epoch; Monday = 0.
int weekday_of(std::int64_t epoch_seconds);
/// Seconds since local midnight.
int clock_seconds_of(std::int64_t epoch_seconds);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct DemographicProfile {
    std::string user_id;
    AgeBracket age = AgeBracket::Age18To25;
    Sex sex = Sex::Male;
    MaritalStatus marital = MaritalStatus::Single;
    ParentalStatus parental = ParentalStatus::Parent;
    IncomeBracket income = IncomeBracket::NotDisclosed;

    bool operator==(const DemographicProfile&) const = default;
};

struct SurveyResponse {
    std::string user_id;
    std::string product_id;
    bool pi_jan = false;
    bool pi_mar = false;
    bool ap_jan = false;
    bool ap_mar = false;

    bool operator==(const SurveyResponse&) const = default;
};

struct ViewingRecord {
    std::string user_id;
    Timestamp start;
    std::int64_t duration_s = 0;
    std::string channel;

    std::int64_t begin_s() const noexcept { return start.seconds(); }
    std::int64_t end_s() const noexcept { return start.seconds() + duration_s; }
    bool operator==(const ViewingRecord&) const = default;
};

struct AdBroadcast {
    std::string product_id;
    Timestamp start;
    std::int64_t duration_s = 0;
    std::string channel;

    std::int64_t begin_s() const noexcept { return start.seconds(); }
    std::int64_t end_s() const noexcept { return start.seconds() + duration_s; }
    bool operator==(const AdBroadcast&) const = default;
};

/// The whole panel. A Catalog returned by parse_catalog, generate_panel or
/// canonicalize() is sorted by primary keys and satisfies every invariant
/// checked by validate_catalog.
struct Catalog {
    std::vector<DemographicProfile> users;
    std::vector<std::string> products;
    std::vector<SurveyResponse> responses;
    std::vector<ViewingRecord> viewing;
    std::vector<AdBroadcast> broadcasts;

    /// Products with at least one broadcast, sorted.
    std::vector<std::string> advert_matched_products() const;

    bool operator==(const Catalog&) const = default;
};

/// Sorts every table by its primary key (the file order written by
/// write_catalog).
void canonicalize(Catalog& catalog);

/// Throws ValidationError on any invariant violation: duplicate keys,
/// dangling foreign keys, missing or duplicate survey pairs, overlapping
/// viewing intervals, negative or zero durations, ids containing tabs or
/// line breaks.
void validate_catalog(const Catalog& catalog);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

struct CatalogPaths {
    std::filesystem::path users;
    std::filesystem::path products;
    std::filesystem::path survey;
    std::filesystem::path viewing;
    std::filesystem::path broadcasts;

    /// users.tsv, products.tsv, survey.tsv, viewing.tsv, broadcasts.tsv.
    static CatalogPaths in_dir(const std::filesystem::path& dir);
};

struct RowCounts {
    std::size_t users = 0;
    std::size_t products = 0;
    std::size_t responses = 0;
    std::size_t viewing = 0;
    std::size_t broadcasts = 0;
    std::size_t advert_matched = 0;
};

RowCounts row_counts(const Catalog& catalog);

/// Reads and validates the five tables. Errors are ParseError (malformed
/// row) or ValidationError (invariant), both naming file and line.
Catalog parse_catalog(const CatalogPaths& paths);

/// Writes the five tables in canonical order. Throws Error if a path cannot
/// be written.
void write_catalog(const Catalog& catalog, const CatalogPaths& paths);

/// In-memory forms of the five tables, exactly the bytes write_catalog emits.
struct CatalogText {
    std::string users;
    std::string products;
    std::string survey;
    std::string viewing;
    std::string broadcasts;
};

CatalogText serialize_catalog(const Catalog& catalog);
Catalog parse_catalog_text(const CatalogText& text, const CatalogPaths& names = CatalogPaths::in_dir(""));

/// Content hash over the canonical serialization (16 hex digits).
std::string catalog_fingerprint(const Catalog& catalog);

// ---------------------------------------------------------------------------
// Lookup index over a validated catalog.
// ---------------------------------------------------------------------------

class CatalogIndex {
public:
    explicit CatalogIndex(const Catalog& catalog);

    const Catalog& catalog() const noexcept { return *catalog_; }

    std::optional<std::size_t> user_pos(std::string_view user_id) const;
    std::optional<std::size_t> product_pos(std::string_view product_id) const;

    const DemographicProfile& user(std::size_t pos) const { return catalog_->users[pos]; }
    const std::string& product(std::size_t pos) const { return catalog_->products[pos]; }
    std::size_t user_count() const noexcept { return catalog_->users.size(); }
    std::size_t product_count() const noexcept { return catalog_->products.size(); }

    /// Survey row for (user_pos, product_pos).
    const SurveyResponse& response(std::size_t user_pos, std::size_t product_pos) const;

    const std::vector<std::string>& advert_matched() const noexcept { return advert_matched_; }

private:
    const Catalog* catalog_;
    std::unordered_map<std::string, std::size_t> users_;
    std::unordered_map<std::string, std::size_t> products_;
    std::vector<std::size_t> response_at_;  // user_pos * n_products + product_pos
    std::vector<std::string> advert_matched_;
};

}  // namespace adbench
