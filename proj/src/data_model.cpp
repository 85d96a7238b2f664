#include "adbench/data_model.hpp"

#include "adbench/error.hpp"
#include "adbench/hashing.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace adbench {

namespace {

constexpr std::string_view kUsersHeader = "user_id\tage\tsex\tmarital_status\tparental_status\tincome";
constexpr std::string_view kProductsHeader = "product_id";
constexpr std::string_view kSurveyHeader = "user_id\tproduct_id\tpi_jan\tpi_mar\tap_jan\tap_mar";
constexpr std::string_view kViewingHeader = "user_id\tstart\tduration_s\tchannel";
constexpr std::string_view kBroadcastsHeader = "product_id\tstart\tduration_s\tchannel";

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
}

/// Iterates lines of a table; yields (line_number, fields). Line 1 is the
/// header, which is checked here.
class TableReader {
public:
    TableReader(std::string_view text, std::string file, std::string_view header, std::size_t columns)
        : text_(text), file_(std::move(file)), columns_(columns) {
        std::string_view first;
        if (!next_line(first)) throw ParseError(file_, 1, "missing header row");
        if (first != header) throw ParseError(file_, 1, "unexpected header (want \"" + std::string(header) + "\")");
    }

    bool next(std::vector<std::string_view>& fields) {
        std::string_view line;
        while (next_line(line)) {
            if (line.empty()) {
                // Only a trailing empty line is tolerated.
                if (pos_ >= text_.size()) return false;
                throw ParseError(file_, line_, "empty row");
            }
            fields = split_tabs(line);
            if (fields.size() != columns_) {
                throw ParseError(file_, line_,
                                 "expected " + std::to_string(columns_) + " fields, got " + std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_; }
    const std::string& file() const noexcept { return file_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, line_, what); }

private:
    bool next_line(std::string_view& out) {
        if (pos_ >= text_.size()) return false;
        auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) nl = text_.size();
        out = text_.substr(pos_, nl - pos_);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos_ = nl + 1;
        ++line_;
        return true;
    }

    std::string_view text_;
    std::string file_;
    std::size_t columns_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

std::string parse_id(const TableReader& r, std::string_view field, const char* what) {
    if (field.empty()) r.fail(std::string("empty ") + what);
    return std::string(field);
}

template <typename E>
E parse_enum(const TableReader& r, std::string_view field, const char* what) {
    auto v = from_label<E>(field);
    if (!v) r.fail(std::string("unknown ") + what + " \"" + std::string(field) + "\"");
    return *v;
}

bool parse_yes_no(const TableReader& r, std::string_view field, const char* what) {
    if (field == "Yes") return true;
    if (field == "No") return false;
    r.fail(std::string(what) + " must be Yes or No, got \"" + std::string(field) + "\"");
}

std::int64_t parse_seconds(const TableReader& r, std::string_view field) {
    std::int64_t v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty()) r.fail("bad duration \"" + std::string(field) + "\"");
    return v;
}

Timestamp parse_time(const TableReader& r, std::string_view field) {
    auto t = parse_timestamp(field);
    if (!t) r.fail("bad timestamp \"" + std::string(field) + "\" (want YYYY-MM-DDTHH:MM)");
    return *t;
}

const char* yes_no(bool b) { return b ? "Yes" : "No"; }

bool bad_id(std::string_view id) {
    return id.empty() || id.find_first_of("\t\r\n") != std::string_view::npos;
}

/// Source positions of records (1-based file lines), parallel to the
/// catalog's vectors. Empty when validating an in-memory catalog.
struct SourceLines {
    std::vector<std::size_t> users, products, responses, viewing, broadcasts;
};

[[noreturn]] void reject(const std::string& file, const std::vector<std::size_t>* lines, std::size_t index,
                         const std::string& what) {
    if (lines && index < lines->size()) throw ValidationError(file, (*lines)[index], what);
    throw ValidationError(file, 0, what + " (record " + std::to_string(index) + ")");
}

void validate_impl(const Catalog& c, const CatalogPaths& names, const SourceLines* src) {
    const std::string users_file = names.users.string();
    const std::string products_file = names.products.string();
    const std::string survey_file = names.survey.string();
    const std::string viewing_file = names.viewing.string();
    const std::string broadcasts_file = names.broadcasts.string();

    std::unordered_map<std::string_view, std::size_t> user_pos;
    for (std::size_t i = 0; i < c.users.size(); ++i) {
        const auto& id = c.users[i].user_id;
        if (bad_id(id)) reject(users_file, src ? &src->users : nullptr, i, "invalid user_id");
        if (!user_pos.emplace(id, i).second) {
            reject(users_file, src ? &src->users : nullptr, i, "duplicate user_id " + id);
        }
    }
    std::unordered_map<std::string_view, std::size_t> product_pos;
    for (std::size_t i = 0; i < c.products.size(); ++i) {
        const auto& id = c.products[i];
        if (bad_id(id)) reject(products_file, src ? &src->products : nullptr, i, "invalid product_id");
        if (!product_pos.emplace(id, i).second) {
            reject(products_file, src ? &src->products : nullptr, i, "duplicate product_id " + id);
        }
    }

    const std::size_t n_products = c.products.size();
    std::vector<char> seen(c.users.size() * n_products, 0);
    for (std::size_t i = 0; i < c.responses.size(); ++i) {
        const auto& r = c.responses[i];
        const auto* lines = src ? &src->responses : nullptr;
        auto u = user_pos.find(r.user_id);
        if (u == user_pos.end()) reject(survey_file, lines, i, "unknown user_id " + r.user_id);
        auto p = product_pos.find(r.product_id);
        if (p == product_pos.end()) reject(survey_file, lines, i, "unknown product_id " + r.product_id);
        auto& slot = seen[u->second * n_products + p->second];
        if (slot) reject(survey_file, lines, i, "duplicate survey row (" + r.user_id + ", " + r.product_id + ")");
        slot = 1;
    }
    for (std::size_t u = 0; u < c.users.size(); ++u) {
        for (std::size_t p = 0; p < n_products; ++p) {
            if (!seen[u * n_products + p]) {
                throw ValidationError(survey_file, 0,
                                      "missing survey row (" + c.users[u].user_id + ", " + c.products[p] + ")");
            }
        }
    }

    for (std::size_t i = 0; i < c.broadcasts.size(); ++i) {
        const auto& b = c.broadcasts[i];
        const auto* lines = src ? &src->broadcasts : nullptr;
        if (!product_pos.contains(b.product_id)) reject(broadcasts_file, lines, i, "unknown product_id " + b.product_id);
        if (b.duration_s <= 0) reject(broadcasts_file, lines, i, "broadcast duration must be positive");
        if (bad_id(b.channel)) reject(broadcasts_file, lines, i, "invalid channel");
    }

    for (std::size_t i = 0; i < c.viewing.size(); ++i) {
        const auto& v = c.viewing[i];
        const auto* lines = src ? &src->viewing : nullptr;
        if (!user_pos.contains(v.user_id)) reject(viewing_file, lines, i, "unknown user_id " + v.user_id);
        if (v.duration_s < 0) reject(viewing_file, lines, i, "viewing duration must be non-negative");
        if (bad_id(v.channel)) reject(viewing_file, lines, i, "invalid channel");
    }
    // Overlap check per user over start-sorted records.
    std::vector<std::size_t> order(c.viewing.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& va = c.viewing[a];
        const auto& vb = c.viewing[b];
        return std::tie(va.user_id, va.start, a) < std::tie(vb.user_id, vb.start, b);
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto& prev = c.viewing[order[k - 1]];
        const auto& cur = c.viewing[order[k]];
        if (prev.user_id == cur.user_id && prev.end_s() > cur.begin_s()) {
            reject(viewing_file, src ? &src->viewing : nullptr, std::max(order[k - 1], order[k]),
                   "overlapping viewing intervals for user " + cur.user_id);
        }
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << bytes;
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    // YYYY-MM-DDTHH:MM
    if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        const char* b = s.data() + pos;
        for (std::size_t i = 0; i < len; ++i) {
            if (b[i] < '0' || b[i] > '9') return false;
        }
        auto [ptr, ec] = std::from_chars(b, b + len, out);
        return ec == std::errc() && ptr == b + len;
    };
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (!num(0, 4, y) || !num(5, 2, mo) || !num(8, 2, d) || !num(11, 2, h) || !num(14, 2, mi)) return std::nullopt;
    if (h > 23 || mi > 59) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return Timestamp{static_cast<std::int64_t>(days) * 1440 + h * 60 + mi};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const std::int64_t day_index = t.minutes >= 0 ? t.minutes / 1440 : -((-t.minutes + 1439) / 1440);
    const int minute_of_day = static_cast<int>(t.minutes - day_index * 1440);
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), minute_of_day / 60,
                  minute_of_day % 60);
    return buf;
}

int weekday_of(std::int64_t epoch_seconds) {
    using namespace std::chrono;
    const std::int64_t day_index = epoch_seconds >= 0 ? epoch_seconds / 86400 : -((-epoch_seconds + 86399) / 86400);
    // iso_encoding: Monday = 1 ... Sunday = 7
    return static_cast<int>(weekday{sys_days{days{day_index}}}.iso_encoding()) - 1;
}

int clock_seconds_of(std::int64_t epoch_seconds) {
    const std::int64_t r = epoch_seconds % 86400;
    return static_cast<int>(r < 0 ? r + 86400 : r);
}

std::vector<std::string> Catalog::advert_matched_products() const {
    std::set<std::string> matched;
    for (const auto& b : broadcasts) matched.insert(b.product_id);
    return {matched.begin(), matched.end()};
}

void canonicalize(Catalog& c) {
    std::sort(c.users.begin(), c.users.end(),
              [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
    std::sort(c.products.begin(), c.products.end());
    std::sort(c.responses.begin(), c.responses.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user_id, a.product_id) < std::tie(b.user_id, b.product_id);
    });
    std::sort(c.viewing.begin(), c.viewing.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user_id, a.start, a.duration_s, a.channel) <
               std::tie(b.user_id, b.start, b.duration_s, b.channel);
    });
    std::sort(c.broadcasts.begin(), c.broadcasts.end(), [](const auto& a, const auto& b) {
        return std::tie(a.product_id, a.start, a.channel, a.duration_s) <
               std::tie(b.product_id, b.start, b.channel, b.duration_s);
    });
}

void validate_catalog(const Catalog& catalog) { validate_impl(catalog, CatalogPaths::in_dir(""), nullptr); }

CatalogPaths CatalogPaths::in_dir(const std::filesystem::path& dir) {
    return {dir / "users.tsv", dir / "products.tsv", dir / "survey.tsv", dir / "viewing.tsv", dir / "broadcasts.tsv"};
}

RowCounts row_counts(const Catalog& c) {
    return {c.users.size(),   c.products.size(),   c.responses.size(),
            c.viewing.size(), c.broadcasts.size(), c.advert_matched_products().size()};
}

CatalogText serialize_catalog(const Catalog& input) {
    Catalog c = input;
    canonicalize(c);
    CatalogText t;
    {
        std::string& s = t.users;
        s.append(kUsersHeader).push_back('\n');
        for (const auto& u : c.users) {
            s.append(u.user_id).append("\t").append(to_label(u.age)).append("\t").append(to_label(u.sex));
            s.append("\t").append(to_label(u.marital)).append("\t").append(to_label(u.parental));
            s.append("\t").append(to_label(u.income)).push_back('\n');
        }
    }
    {
        std::string& s = t.products;
        s.append(kProductsHeader).push_back('\n');
        for (const auto& p : c.products) s.append(p).push_back('\n');
    }
    {
        std::string& s = t.survey;
        s.append(kSurveyHeader).push_back('\n');
        for (const auto& r : c.responses) {
            s.append(r.user_id).append("\t").append(r.product_id);
            for (bool b : {r.pi_jan, r.pi_mar, r.ap_jan, r.ap_mar}) s.append("\t").append(yes_no(b));
            s.push_back('\n');
        }
    }
    {
        std::string& s = t.viewing;
        s.append(kViewingHeader).push_back('\n');
        for (const auto& v : c.viewing) {
            s.append(v.user_id).append("\t").append(format_timestamp(v.start)).append("\t");
            s.append(std::to_string(v.duration_s)).append("\t").append(v.channel).push_back('\n');
        }
    }
    {
        std::string& s = t.broadcasts;
        s.append(kBroadcastsHeader).push_back('\n');
        for (const auto& b : c.broadcasts) {
            s.append(b.product_id).append("\t").append(format_timestamp(b.start)).append("\t");
            s.append(std::to_string(b.duration_s)).append("\t").append(b.channel).push_back('\n');
        }
    }
    return t;
}

Catalog parse_catalog_text(const CatalogText& text, const CatalogPaths& names) {
    Catalog c;
    SourceLines lines;
    std::vector<std::string_view> f;
    {
        TableReader r(text.users, names.users.string(), kUsersHeader, 6);
        while (r.next(f)) {
            DemographicProfile p;
            p.user_id = parse_id(r, f[0], "user_id");
            p.age = parse_enum<AgeBracket>(r, f[1], "age");
            p.sex = parse_enum<Sex>(r, f[2], "sex");
            p.marital = parse_enum<MaritalStatus>(r, f[3], "marital_status");
            p.parental = parse_enum<ParentalStatus>(r, f[4], "parental_status");
            p.income = parse_enum<IncomeBracket>(r, f[5], "income");
            c.users.push_back(std::move(p));
            lines.users.push_back(r.line());
        }
    }
    {
        TableReader r(text.products, names.products.string(), kProductsHeader, 1);
        while (r.next(f)) {
            c.products.push_back(parse_id(r, f[0], "product_id"));
            lines.products.push_back(r.line());
        }
    }
    {
        TableReader r(text.survey, names.survey.string(), kSurveyHeader, 6);
        while (r.next(f)) {
            SurveyResponse s;
            s.user_id = parse_id(r, f[0], "user_id");
            s.product_id = parse_id(r, f[1], "product_id");
            s.pi_jan = parse_yes_no(r, f[2], "pi_jan");
            s.pi_mar = parse_yes_no(r, f[3], "pi_mar");
            s.ap_jan = parse_yes_no(r, f[4], "ap_jan");
            s.ap_mar = parse_yes_no(r, f[5], "ap_mar");
            c.responses.push_back(std::move(s));
            lines.responses.push_back(r.line());
        }
    }
    {
        TableReader r(text.viewing, names.viewing.string(), kViewingHeader, 4);
        while (r.next(f)) {
            ViewingRecord v;
            v.user_id = parse_id(r, f[0], "user_id");
            v.start = parse_time(r, f[1]);
            v.duration_s = parse_seconds(r, f[2]);
            v.channel = parse_id(r, f[3], "channel");
            c.viewing.push_back(std::move(v));
            lines.viewing.push_back(r.line());
        }
    }
    {
        TableReader r(text.broadcasts, names.broadcasts.string(), kBroadcastsHeader, 4);
        while (r.next(f)) {
            AdBroadcast b;
            b.product_id = parse_id(r, f[0], "product_id");
            b.start = parse_time(r, f[1]);
            b.duration_s = parse_seconds(r, f[2]);
            b.channel = parse_id(r, f[3], "channel");
            c.broadcasts.push_back(std::move(b));
            lines.broadcasts.push_back(r.line());
        }
    }
    validate_impl(c, names, &lines);
    canonicalize(c);
    return c;
}

Catalog parse_catalog(const CatalogPaths& paths) {
    CatalogText text{read_file(paths.users), read_file(paths.products), read_file(paths.survey),
                     read_file(paths.viewing), read_file(paths.broadcasts)};
    return parse_catalog_text(text, paths);
}

void write_catalog(const Catalog& catalog, const CatalogPaths& paths) {
    const auto text = serialize_catalog(catalog);
    write_file(paths.users, text.users);
    write_file(paths.products, text.products);
    write_file(paths.survey, text.survey);
    write_file(paths.viewing, text.viewing);
    write_file(paths.broadcasts, text.broadcasts);
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string catalog_fingerprint(const Catalog& catalog) {
    const auto t = serialize_catalog(catalog);
    std::uint64_t h = kFnvOffset;
    for (const std::string* table : {&t.users, &t.products, &t.survey, &t.viewing, &t.broadcasts}) {
        h = fnv1a(*table, h);
        h = fnv1a(std::string_view("\x1e", 1), h);  // table separator
    }
    return to_hex(h);
}

// ---------------------------------------------------------------------------

CatalogIndex::CatalogIndex(const Catalog& catalog) : catalog_(&catalog) {
    for (std::size_t i = 0; i < catalog.users.size(); ++i) users_.emplace(catalog.users[i].user_id, i);
    for (std::size_t i = 0; i < catalog.products.size(); ++i) products_.emplace(catalog.products[i], i);
    const std::size_t np = catalog.products.size();
    response_at_.assign(catalog.users.size() * np, SIZE_MAX);
    for (std::size_t i = 0; i < catalog.responses.size(); ++i) {
        const auto& r = catalog.responses[i];
        auto u = users_.find(r.user_id);
        auto p = products_.find(r.product_id);
        if (u == users_.end() || p == products_.end()) throw ValidationError("survey row references unknown key");
        response_at_[u->second * np + p->second] = i;
    }
    for (std::size_t k = 0; k < response_at_.size(); ++k) {
        if (response_at_[k] == SIZE_MAX) throw ValidationError("catalog has an incomplete survey panel");
    }
    advert_matched_ = catalog.advert_matched_products();
}

std::optional<std::size_t> CatalogIndex::user_pos(std::string_view user_id) const {
    auto it = users_.find(std::string(user_id));
    if (it == users_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> CatalogIndex::product_pos(std::string_view product_id) const {
    auto it = products_.find(std::string(product_id));
    if (it == products_.end()) return std::nullopt;
    return it->second;
}

const SurveyResponse& CatalogIndex::response(std::size_t user_pos, std::size_t product_pos) const {
    return catalog_->responses[response_at_[user_pos * catalog_->products.size() + product_pos]];
}

}  // namespace adbench
