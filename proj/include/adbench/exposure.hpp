#pragma once

#include "adbench/data_model.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

namespace adbench {

enum class TimeSlot : std::uint8_t { Primetime = 0, NonPrimetime = 1 };

constexpr int kWeekdays = 7;
constexpr int kSlots = 2;
constexpr int kExposureCells = kWeekdays * kSlots;

/// Primetime iff 19:00:00 <= t < 23:00:00. `clock_seconds` is seconds since
/// local midnight.
constexpr TimeSlot slot_of(int clock_seconds) noexcept {
    return (clock_seconds >= 19 * 3600 && clock_seconds < 23 * 3600) ? TimeSlot::Primetime : TimeSlot::NonPrimetime;
}

/// Cell index within a 14-cell block: weekday-major, Primetime first
/// (Monday Primetime, Monday Non-Primetime, Tuesday Primetime, ...).
constexpr int cell_index(int weekday, TimeSlot slot) noexcept { return weekday * kSlots + static_cast<int>(slot); }

using ExposureCells = std::array<std::int64_t, kExposureCells>;

/// Accumulated advert seconds per (user, product, weekday, slot). Absent
/// (user, product) pairs read as all zeros.
class ExposureMatrix {
public:
    using Key = std::pair<std::string, std::string>;  // (user_id, product_id)

    const ExposureCells& cells(const std::string& user_id, const std::string& product_id) const;
    std::int64_t at(const std::string& user_id, const std::string& product_id, int weekday, TimeSlot slot) const {
        return cells(user_id, product_id)[cell_index(weekday, slot)];
    }
    std::int64_t weekday_total(const std::string& user_id, const std::string& product_id, int weekday) const;
    std::int64_t pair_total(const std::string& user_id, const std::string& product_id) const;
    std::int64_t grand_total() const;

    void add(const std::string& user_id, const std::string& product_id, int cell, std::int64_t seconds);
    void merge(const ExposureMatrix& other);

    const std::map<Key, ExposureCells>& entries() const noexcept { return entries_; }
    bool operator==(const ExposureMatrix&) const = default;

private:
    std::map<Key, ExposureCells> entries_;
};

/// Joins viewing with broadcasts on channel and temporal overlap. Each
/// (viewing, broadcast) pair contributes its overlap seconds to the weekday
/// and slot of the overlap start. Parallel over users (OpenMP).
ExposureMatrix compute_exposure(std::span<const ViewingRecord> viewing, std::span<const AdBroadcast> broadcasts);

/// Serial nested-loop join over every (viewing, broadcast) pair. Kept as the
/// reference the indexed kernel is tested and benchmarked against.
ExposureMatrix compute_exposure_reference(std::span<const ViewingRecord> viewing,
                                          std::span<const AdBroadcast> broadcasts);

/// Audit table: user_id, product_id, weekday, slot, seconds (non-zero cells).
std::string format_exposure_table(const ExposureMatrix& matrix);

}  // namespace adbench
