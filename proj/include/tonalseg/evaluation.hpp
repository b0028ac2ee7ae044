#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tonalseg/imaging.hpp"

namespace tonalseg {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Mean with a 95% normal-approximation half-width.
struct MeanCI {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;
};

struct PairScore {
    double dice = 0.0;
    double iou = 0.0;
    ConfusionCounts counts;
};

struct ImageRecord {
    std::string image_id;
    double dice = 0.0;
    double iou = 0.0;
    ConfusionCounts counts;
};

/// Per-image rows sorted by image id, plus aggregates over those rows.
struct EvalReport {
    std::vector<ImageRecord> records;
    MeanCI dice;
    MeanCI iou;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// Both return 1.0 when neither mask has foreground.
double dice(const ConfusionCounts& c) noexcept;
double iou(const ConfusionCounts& c) noexcept;

/// mean and 1.96 * s / sqrt(n) with the n-1 sample deviation; half-width
/// is zero for a single value. Throws EmptyList.
MeanCI aggregate(std::span<const double> values);

/// TP yellow, TN black, FP green, FN red.
RgbImage render_overlay(const BinaryMask& pred, const BinaryMask& gt);

inline constexpr Rgb kColorTP{255, 255, 0};
inline constexpr Rgb kColorTN{0, 0, 0};
inline constexpr Rgb kColorFP{0, 255, 0};
inline constexpr Rgb kColorFN{255, 0, 0};

PairScore evaluate_pair(const BinaryMask& pred, const BinaryMask& gt);

/// Sorts records by id and fills the aggregates. Throws EmptyList.
EvalReport make_report(std::vector<ImageRecord> records);

std::string report_to_json(const EvalReport& report);

/// Fixed-width table with "mean ± half-width" cells at 3 decimals.
std::string format_table(const EvalReport& report, const std::string& title);

}  // namespace tonalseg
