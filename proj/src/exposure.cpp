#include "adbench/exposure.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adbench {

namespace {

const ExposureCells kZeroCells{};

constexpr std::string_view kWeekdayNames[kWeekdays] = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                                       "Friday", "Saturday", "Sunday"};

struct Overlap {
    std::int64_t start;
    std::int64_t seconds;
};

inline Overlap overlap_of(const ViewingRecord& v, const AdBroadcast& b) {
    const std::int64_t lo = std::max(v.begin_s(), b.begin_s());
    const std::int64_t hi = std::min(v.end_s(), b.end_s());
    return {lo, hi - lo};
}

inline int attributed_cell(std::int64_t overlap_start) {
    return cell_index(weekday_of(overlap_start), slot_of(clock_seconds_of(overlap_start)));
}

/// Broadcasts of one channel sorted by start, with the longest duration so a
/// window query can bound its left edge.
struct ChannelSchedule {
    std::vector<const AdBroadcast*> by_start;
    std::int64_t max_duration = 0;
};

}  // namespace

const ExposureCells& ExposureMatrix::cells(const std::string& user_id, const std::string& product_id) const {
    auto it = entries_.find(Key{user_id, product_id});
    return it == entries_.end() ? kZeroCells : it->second;
}

std::int64_t ExposureMatrix::weekday_total(const std::string& user_id, const std::string& product_id,
                                           int weekday) const {
    const auto& c = cells(user_id, product_id);
    return c[cell_index(weekday, TimeSlot::Primetime)] + c[cell_index(weekday, TimeSlot::NonPrimetime)];
}

std::int64_t ExposureMatrix::pair_total(const std::string& user_id, const std::string& product_id) const {
    std::int64_t total = 0;
    for (auto v : cells(user_id, product_id)) total += v;
    return total;
}

std::int64_t ExposureMatrix::grand_total() const {
    std::int64_t total = 0;
    for (const auto& [key, c] : entries_) {
        for (auto v : c) total += v;
    }
    return total;
}

void ExposureMatrix::add(const std::string& user_id, const std::string& product_id, int cell, std::int64_t seconds) {
    if (seconds == 0) return;
    auto [it, inserted] = entries_.try_emplace(Key{user_id, product_id});
    if (inserted) it->second.fill(0);
    it->second[cell] += seconds;
}

void ExposureMatrix::merge(const ExposureMatrix& other) {
    for (const auto& [key, c] : other.entries_) {
        auto [it, inserted] = entries_.try_emplace(key);
        if (inserted) it->second.fill(0);
        for (int i = 0; i < kExposureCells; ++i) it->second[i] += c[i];
    }
}

ExposureMatrix compute_exposure(std::span<const ViewingRecord> viewing, std::span<const AdBroadcast> broadcasts) {
    std::unordered_map<std::string, ChannelSchedule> schedules;
    for (const auto& b : broadcasts) {
        auto& s = schedules[b.channel];
        s.by_start.push_back(&b);
        s.max_duration = std::max(s.max_duration, b.duration_s);
    }
    for (auto& [channel, s] : schedules) {
        std::sort(s.by_start.begin(), s.by_start.end(),
                  [](const AdBroadcast* a, const AdBroadcast* b) { return a->begin_s() < b->begin_s(); });
    }

    // Partition viewing records by user so each thread owns whole users.
    std::vector<std::size_t> order(viewing.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return viewing[a].user_id < viewing[b].user_id; });
    std::vector<std::size_t> user_begin;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || viewing[order[k]].user_id != viewing[order[k - 1]].user_id) user_begin.push_back(k);
    }
    user_begin.push_back(order.size());
    const auto n_users = static_cast<std::ptrdiff_t>(user_begin.size() - 1);

    std::vector<ExposureMatrix> partial;
#pragma omp parallel
    {
#ifdef _OPENMP
#pragma omp single
        partial.resize(static_cast<std::size_t>(omp_get_num_threads()));
        ExposureMatrix& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#else
        partial.resize(1);
        ExposureMatrix& local = partial[0];
#endif
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t u = 0; u < n_users; ++u) {
            for (std::size_t k = user_begin[u]; k < user_begin[u + 1]; ++k) {
                const ViewingRecord& v = viewing[order[k]];
                if (v.duration_s <= 0) continue;
                auto it = schedules.find(v.channel);
                if (it == schedules.end()) continue;
                const auto& s = it->second;
                // Broadcasts that can overlap start in (v.begin - max_duration, v.end).
                const std::int64_t earliest = v.begin_s() - s.max_duration;
                auto first = std::upper_bound(s.by_start.begin(), s.by_start.end(), earliest,
                                              [](std::int64_t t, const AdBroadcast* b) { return t < b->begin_s(); });
                for (auto b = first; b != s.by_start.end() && (*b)->begin_s() < v.end_s(); ++b) {
                    const Overlap o = overlap_of(v, **b);
                    if (o.seconds > 0) local.add(v.user_id, (*b)->product_id, attributed_cell(o.start), o.seconds);
                }
            }
        }
    }
    ExposureMatrix result;
    for (const auto& p : partial) result.merge(p);
    return result;
}

ExposureMatrix compute_exposure_reference(std::span<const ViewingRecord> viewing,
                                          std::span<const AdBroadcast> broadcasts) {
    ExposureMatrix result;
    for (const auto& v : viewing) {
        for (const auto& b : broadcasts) {
            if (v.channel != b.channel) continue;
            const Overlap o = overlap_of(v, b);
            if (o.seconds > 0) result.add(v.user_id, b.product_id, attributed_cell(o.start), o.seconds);
        }
    }
    return result;
}

std::string format_exposure_table(const ExposureMatrix& matrix) {
    std::string out = "user_id\tproduct_id\tweekday\tslot\tseconds\n";
    for (const auto& [key, cells] : matrix.entries()) {
        for (int w = 0; w < kWeekdays; ++w) {
            for (int s = 0; s < kSlots; ++s) {
                const auto v = cells[cell_index(w, static_cast<TimeSlot>(s))];
                if (v == 0) continue;
                out.append(key.first).append("\t").append(key.second).append("\t").append(kWeekdayNames[w]);
                out.append(s == 0 ? "\tPrimetime\t" : "\tNonPrimetime\t").append(std::to_string(v)).push_back('\n');
            }
        }
    }
    return out;
}

}  // namespace adbench
