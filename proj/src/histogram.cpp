#include "tonalseg/histogram.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tonalseg {

using json = nlohmann::json;

std::uint64_t Histogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Pmf::Pmf(const std::array<double, kLevels>& mass) : mass_(mass) {
    double sum = 0.0;
    for (double m : mass_) {
        if (!std::isfinite(m) || m < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "pmf mass must be finite and non-negative");
        }
        sum += m;
    }
    if (std::abs(sum - 1.0) > kMassTolerance) {
        throw Error(ErrorCode::InvalidArgument,
                    "pmf mass sums to " + std::to_string(sum) + ", expected 1");
    }
}

Cdf::Cdf(const std::array<double, kLevels>& cum) : cum_(cum) {
    double prev = 0.0;
    for (double c : cum_) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "cdf values must lie in [0,1]");
        }
        if (c < prev) throw Error(ErrorCode::InvalidArgument, "cdf must be non-decreasing");
        prev = c;
    }
    if (std::abs(cum_.back() - 1.0) > kMassTolerance) {
        throw Error(ErrorCode::InvalidArgument, "cdf must end at 1");
    }
}

LevelMap::LevelMap(const std::array<std::uint8_t, kLevels>& table) : table_(table) {
    if (!std::is_sorted(table_.begin(), table_.end())) {
        throw Error(ErrorCode::InvalidArgument, "level map must be non-decreasing");
    }
}

LevelMap LevelMap::identity() {
    std::array<std::uint8_t, kLevels> table{};
    std::iota(table.begin(), table.end(), std::uint8_t{0});
    return LevelMap(table);
}

Histogram compute_histogram(const GrayImage& img) {
    Histogram h;
    for (std::uint8_t v : img.pixels()) ++h.counts[v];
    return h;
}

Pmf to_pmf(const Histogram& h) {
    const std::uint64_t total = h.total();
    if (total == 0) throw Error(ErrorCode::EmptyHistogram, "histogram has no samples");
    std::array<double, kLevels> mass{};
    const auto denom = static_cast<double>(total);
    for (std::size_t g = 0; g < kLevels; ++g) {
        mass[g] = static_cast<double>(h.counts[g]) / denom;
    }
    return Pmf(mass);
}

Cdf to_cdf(const Pmf& p) {
    std::array<double, kLevels> cum{};
    double running = 0.0;
    for (std::size_t g = 0; g < kLevels; ++g) {
        running += p[g];
        cum[g] = std::min(running, 1.0);
    }
    cum.back() = 1.0;
    return Cdf(cum);
}

ReferenceHistogram average_reference(std::span<const Histogram> histograms, std::string created) {
    if (histograms.empty()) {
        throw Error(ErrorCode::EmptyList, "cannot average an empty list of histograms");
    }
    std::array<double, kLevels> sum{};
    for (const Histogram& h : histograms) {
        const Pmf p = to_pmf(h);
        for (std::size_t g = 0; g < kLevels; ++g) sum[g] += p[g];
    }
    const auto n = static_cast<double>(histograms.size());
    for (double& m : sum) m /= n;
    return ReferenceHistogram{Pmf(sum), histograms.size(), std::move(created)};
}

LevelMap build_level_map(const Cdf& target, const Cdf& reference) {
    // |reference[g'] - x| is non-increasing up to the first g' with
    // reference[g'] >= x and non-decreasing from there, so only two
    // candidates need checking: that index and the start of the plateau
    // just below it.
    const auto& ref = reference.cum();
    std::array<std::uint8_t, kLevels> table{};
    for (std::size_t g = 0; g < kLevels; ++g) {
        const double x = target[g];
        const auto above = std::lower_bound(ref.begin(), ref.end(), x);
        std::size_t best = 0;
        if (above == ref.begin()) {
            best = 0;
        } else {
            const double below_value = *std::prev(above);
            const auto below = std::lower_bound(ref.begin(), ref.end(), below_value);
            best = static_cast<std::size_t>(std::distance(ref.begin(), below));
            if (above != ref.end() && (*above - x) < (x - below_value)) {
                best = static_cast<std::size_t>(std::distance(ref.begin(), above));
            }
        }
        table[g] = static_cast<std::uint8_t>(best);
    }
    return LevelMap(table);
}

GrayImage apply_level_map(const GrayImage& img, const LevelMap& map) {
    std::vector<std::uint8_t> out(img.pixel_count());
    std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                   [&map](std::uint8_t v) { return map[v]; });
    return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage specify(const GrayImage& img, const ReferenceHistogram& reference) {
    const Cdf target = to_cdf(to_pmf(compute_histogram(img)));
    return apply_level_map(img, build_level_map(target, to_cdf(reference.pmf)));
}

double drift_score(const Pmf& a, const Pmf& b) {
    double sum = 0.0;
    for (std::size_t g = 0; g < kLevels; ++g) sum += std::abs(a[g] - b[g]);
    return std::clamp(0.5 * sum, 0.0, 1.0);
}

double cdf_distance(const Cdf& a, const Cdf& b) {
    double worst = 0.0;
    for (std::size_t g = 0; g < kLevels; ++g) worst = std::max(worst, std::abs(a[g] - b[g]));
    return worst;
}

std::string reference_to_json(const ReferenceHistogram& ref) {
    json doc;
    doc["bins"] = ref.pmf.mass();
    doc["source_images"] = ref.source_images;
    doc["created"] = ref.created;
    return doc.dump(2) + "\n";
}

ReferenceHistogram reference_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("reference is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("bins") || !doc["bins"].is_array()) {
        throw Error(ErrorCode::FormatError, "reference needs a \"bins\" array");
    }
    const json& bins = doc["bins"];
    if (bins.size() != kLevels) {
        throw Error(ErrorCode::FormatError,
                    "reference has " + std::to_string(bins.size()) + " bins, expected 256");
    }
    std::array<double, kLevels> mass{};
    for (std::size_t g = 0; g < kLevels; ++g) {
        if (!bins[g].is_number()) throw Error(ErrorCode::FormatError, "bins must be numbers");
        mass[g] = bins[g].get<double>();
    }

    ReferenceHistogram ref{[&] {
        try {
            return Pmf(mass);
        } catch (const Error& e) {
            throw Error(ErrorCode::FormatError, std::string("reference bins: ") + e.what());
        }
    }(), 0, {}};
    if (doc.contains("source_images")) {
        if (!doc["source_images"].is_number_unsigned()) {
            throw Error(ErrorCode::FormatError, "source_images must be a non-negative integer");
        }
        ref.source_images = doc["source_images"].get<std::size_t>();
    }
    if (doc.contains("created")) {
        if (!doc["created"].is_string()) throw Error(ErrorCode::FormatError, "created must be a string");
        ref.created = doc["created"].get<std::string>();
    }
    return ref;
}

void save_reference(const ReferenceHistogram& ref, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << reference_to_json(ref);
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

ReferenceHistogram load_reference(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return reference_from_json(buf.str());
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace tonalseg
