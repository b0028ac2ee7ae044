#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "tonalseg/imaging.hpp"

namespace tonalseg {

inline constexpr std::size_t kLevels = 256;

/// Tolerance on the total mass of a Pmf and on the final value of a Cdf.
inline constexpr double kMassTolerance = 1e-9;

struct Histogram {
    std::array<std::uint64_t, kLevels> counts{};

    std::uint64_t total() const noexcept;
    bool operator==(const Histogram&) const = default;
};

/// Normalized histogram. Construction validates non-negative finite mass
/// summing to one within kMassTolerance.
class Pmf {
public:
    explicit Pmf(const std::array<double, kLevels>& mass);

    const std::array<double, kLevels>& mass() const noexcept { return mass_; }
    double operator[](std::size_t level) const { return mass_[level]; }
    bool operator==(const Pmf&) const = default;

private:
    std::array<double, kLevels> mass_;
};

/// Cumulative distribution over gray levels: non-decreasing, in [0,1],
/// last entry one within kMassTolerance.
class Cdf {
public:
    explicit Cdf(const std::array<double, kLevels>& cum);

    const std::array<double, kLevels>& cum() const noexcept { return cum_; }
    double operator[](std::size_t level) const { return cum_[level]; }
    bool operator==(const Cdf&) const = default;

private:
    std::array<double, kLevels> cum_;
};

/// Gray-level lookup table; non-decreasing.
class LevelMap {
public:
    explicit LevelMap(const std::array<std::uint8_t, kLevels>& table);
    static LevelMap identity();

    const std::array<std::uint8_t, kLevels>& table() const noexcept { return table_; }
    std::uint8_t operator[](std::size_t level) const { return table_[level]; }
    bool operator==(const LevelMap&) const = default;

private:
    std::array<std::uint8_t, kLevels> table_;
};

/// Averaged training-set distribution used as the matching target.
struct ReferenceHistogram {
    Pmf pmf;
    std::size_t source_images = 0;
    std::string created;
};

Histogram compute_histogram(const GrayImage& img);

/// Throws EmptyHistogram when every count is zero.
Pmf to_pmf(const Histogram& h);

/// Prefix sums of the mass. The last entry is pinned to exactly 1 and
/// round-off above 1 is clipped.
Cdf to_cdf(const Pmf& p);

/// Normalizes each histogram, then takes the bin-wise mean of the Pmfs.
/// Throws EmptyList / EmptyHistogram.
ReferenceHistogram average_reference(std::span<const Histogram> histograms,
                                     std::string created = {});

/// For each level g, the smallest level g' minimizing
/// |reference[g'] - target[g]|.
LevelMap build_level_map(const Cdf& target, const Cdf& reference);

GrayImage apply_level_map(const GrayImage& img, const LevelMap& map);

/// Histogram specification of one image against the reference.
GrayImage specify(const GrayImage& img, const ReferenceHistogram& reference);

/// Total variation distance, 0.5 * sum |a - b|.
double drift_score(const Pmf& a, const Pmf& b);

/// Sup-norm distance between two CDFs.
double cdf_distance(const Cdf& a, const Cdf& b);

// Reference file: {"bins": [256 reals], "source_images": n, "created": "..."}.
std::string reference_to_json(const ReferenceHistogram& ref);
ReferenceHistogram reference_from_json(std::string_view text);
void save_reference(const ReferenceHistogram& ref, const std::filesystem::path& path);
ReferenceHistogram load_reference(const std::filesystem::path& path);

/// Current UTC time as ISO-8601, e.g. "2024-01-31T12:00:00Z".
std::string utc_timestamp();

}  // namespace tonalseg
