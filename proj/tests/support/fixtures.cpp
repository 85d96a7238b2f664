#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace adbench::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("adbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

namespace {

const char* const kIdParts[] = {"a", "B", "z9", " sp", "x-y", "\xc3\xa9", "#", "q.r", "0"};

std::string random_id(Rng& rng, const std::string& prefix, std::size_t index, bool awkward) {
    std::string id = prefix + std::to_string(index);
    if (awkward) {
        const auto n = rng.below(3);
        for (std::uint64_t i = 0; i < n; ++i) id += kIdParts[rng.below(std::size(kIdParts))];
    }
    return id;
}

template <typename E>
E random_enum(Rng& rng) {
    return static_cast<E>(rng.below(enum_size<E>()));
}

}  // namespace

Catalog random_catalog(Rng& rng, const RandomCatalogShape& shape) {
    Catalog c;
    const std::size_t n_users = 1 + rng.below(shape.max_users);
    const std::size_t n_products = 1 + rng.below(shape.max_products);
    for (std::size_t u = 0; u < n_users; ++u) {
        DemographicProfile p;
        p.user_id = random_id(rng, "u", u, shape.awkward_ids);
        p.age = random_enum<AgeBracket>(rng);
        p.sex = random_enum<Sex>(rng);
        p.marital = random_enum<MaritalStatus>(rng);
        p.parental = random_enum<ParentalStatus>(rng);
        p.income = random_enum<IncomeBracket>(rng);
        c.users.push_back(p);
    }
    for (std::size_t p = 0; p < n_products; ++p) c.products.push_back(random_id(rng, "p", p, shape.awkward_ids));
    for (const auto& u : c.users) {
        for (const auto& p : c.products) {
            c.responses.push_back({u.user_id, p, rng.bernoulli(0.3), rng.bernoulli(0.3), rng.bernoulli(0.2),
                                   rng.bernoulli(0.2)});
        }
    }
    const std::int64_t day0 = parse_timestamp("2024-01-08T00:00")->minutes;
    const std::int64_t span = static_cast<std::int64_t>(shape.n_days) * 1440;
    auto channel = [&] { return "ch" + std::to_string(1 + rng.below(static_cast<std::uint64_t>(shape.n_channels))); };
    for (const auto& u : c.users) {
        // Non-overlapping sessions: sorted distinct start minutes, each
        // session ending no later than the next start.
        const std::size_t k = rng.below(shape.max_viewing_per_user + 1);
        std::vector<std::int64_t> starts;
        for (std::size_t i = 0; i < k; ++i) starts.push_back(day0 + static_cast<std::int64_t>(rng.below(span)));
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const std::int64_t room = (i + 1 < starts.size() ? starts[i + 1] - starts[i] : 240) * 60;
            const auto dur = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::min<std::int64_t>(room, 4 * 3600)) + 1));
            c.viewing.push_back({u.user_id, Timestamp{starts[i]}, dur, channel()});
        }
    }
    const std::size_t n_b = rng.below(shape.max_broadcasts + 1);
    for (std::size_t i = 0; i < n_b; ++i) {
        const auto& p = c.products[rng.below(c.products.size())];
        const std::int64_t durations[] = {15, 30, 60, 90};
        c.broadcasts.push_back(
            {p, Timestamp{day0 + static_cast<std::int64_t>(rng.below(span))}, durations[rng.below(4)], channel()});
    }
    // Arbitrary order: the library must not rely on input order.
    rng.shuffle(std::span(c.users));
    rng.shuffle(std::span(c.responses));
    rng.shuffle(std::span(c.viewing));
    rng.shuffle(std::span(c.broadcasts));
    return c;
}

LabeledMatrix random_problem(Rng& rng, std::size_t rows, std::size_t dims, double scale) {
    LabeledMatrix out;
    out.x.rows = rows;
    out.x.dims = dims;
    out.x.values.resize(rows * dims);
    for (double& v : out.x.values) v = scale * rng.normal();
    std::vector<double> w(dims);
    for (double& v : w) v = rng.normal();
    out.y.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double m = 0.3 * rng.normal();
        for (std::size_t f = 0; f < dims; ++f) m += w[f] * out.x.values[r * dims + f] / scale;
        out.y[r] = m > 0 ? 1 : 0;
    }
    if (rows >= 2) {
        out.y[0] = 1;
        out.y[1] = 0;
    }
    for (std::size_t f = 0; f < dims; ++f) out.x.feature_names.push_back("f" + std::to_string(f));
    return out;
}

FeatureMatrix matrix_of(std::size_t rows, std::size_t dims, std::vector<double> values) {
    if (values.size() != rows * dims) throw std::invalid_argument("matrix_of: size mismatch");
    FeatureMatrix m;
    m.rows = rows;
    m.dims = dims;
    m.values = std::move(values);
    for (std::size_t f = 0; f < dims; ++f) m.feature_names.push_back("f" + std::to_string(f));
    return m;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace adbench::testing
