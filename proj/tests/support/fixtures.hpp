#pragma once

#include "adbench/data_model.hpp"
#include "adbench/features.hpp"
#include "adbench/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adbench::testing {

/// Fresh empty directory under the system temp dir; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct RandomCatalogShape {
    std::size_t max_users = 6;
    std::size_t max_products = 4;
    std::size_t max_viewing_per_user = 5;
    std::size_t max_broadcasts = 12;
    int n_channels = 3;
    int n_days = 9;
    /// Ids with spaces, punctuation and non-ASCII bytes.
    bool awkward_ids = true;
};

/// Valid catalog with random shape and contents, in arbitrary row order.
Catalog random_catalog(Rng& rng, const RandomCatalogShape& shape = {});

/// rows x dims matrix of N(0, scale) entries with labels from a noisy
/// linear rule; both classes present whenever rows >= 2.
struct LabeledMatrix {
    FeatureMatrix x;
    std::vector<int> y;
};
LabeledMatrix random_problem(Rng& rng, std::size_t rows, std::size_t dims, double scale = 1.0);

FeatureMatrix matrix_of(std::size_t rows, std::size_t dims, std::vector<double> values);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace adbench::testing
