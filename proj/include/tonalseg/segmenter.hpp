#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "tonalseg/histogram.hpp"
#include "tonalseg/imaging.hpp"
#include "tonalseg/manifest.hpp"

namespace tonalseg {

struct OtsuThreshold {};
struct FixedThreshold {
    int level = 127;
};
using ThresholdMode = std::variant<OtsuThreshold, FixedThreshold>;

/// "otsu" or an integer level in [0,255].
ThresholdMode parse_threshold_mode(std::string_view text);

struct SegmenterConfig {
    ThresholdMode threshold = OtsuThreshold{};
    std::size_t min_component_size = 0;
    std::optional<std::size_t> keep_largest_k;
    bool apply_specification = false;
    std::optional<ReferenceHistogram> reference;

    void validate() const;
};

/// Level maximizing between-class variance for the split {<= t} / {> t}.
/// Ties go to the smallest level; an image with a single level returns it.
int otsu_threshold(const GrayImage& img);
int otsu_threshold(const Histogram& h);

/// Foreground where pixel > level.
BinaryMask apply_threshold(const GrayImage& img, int level);

/// Removes 8-connected foreground components smaller than min_size, then
/// optionally keeps only the k largest (ties to the component whose first
/// pixel in raster order comes first).
BinaryMask clean_mask(const BinaryMask& mask, std::size_t min_size,
                      std::optional<std::size_t> keep_largest_k = std::nullopt);

BinaryMask predict(const GrayImage& img, const SegmenterConfig& cfg);

/// Fixed level with the best mean training Dice. When several levels tie,
/// the lower median of the tied levels is returned so the cut sits inside
/// the gap between the classes rather than on one edge of it.
int calibrate_threshold(std::span<const GrayImage> images, std::span<const BinaryMask> masks);

/// Reads <dir>/<image_id>.png for every manifest entry and checks it against
/// the entry's mask (or image) dimensions.
/// Throws MissingPrediction / DimensionMismatch naming the id.
std::map<std::string, BinaryMask> load_external_predictions(const std::filesystem::path& dir,
                                                            const Manifest& manifest);

std::filesystem::path prediction_path(const std::filesystem::path& dir, std::string_view image_id);

}  // namespace tonalseg
