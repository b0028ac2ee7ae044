#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tonalseg/error.hpp"

namespace tonalseg {

struct RasterSize {
    int width = 0;
    int height = 0;

    std::size_t area() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool operator==(const RasterSize&) const = default;
};

std::string to_string(RasterSize size);

/// Row-major single-channel raster. Derived types add their own value
/// invariants on top of the shape check done here.
template <typename T>
class Raster {
public:
    using value_type = T;

    RasterSize size() const noexcept { return size_; }
    int width() const noexcept { return size_.width; }
    int height() const noexcept { return size_.height; }
    std::size_t pixel_count() const noexcept { return data_.size(); }

    std::span<const T> values() const noexcept { return data_; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    const T& at(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
                     static_cast<std::size_t>(x)];
    }

    bool operator==(const Raster&) const = default;

protected:
    Raster(RasterSize size, std::vector<T> data) : size_(size), data_(std::move(data)) {
        if (size_.width < 1 || size_.height < 1) {
            throw Error(ErrorCode::InvalidArgument,
                        "raster dimensions must be positive, got " + to_string(size_));
        }
        if (data_.size() != size_.area()) {
            throw Error(ErrorCode::InvalidArgument,
                        "raster of " + to_string(size_) + " needs " +
                            std::to_string(size_.area()) + " values, got " +
                            std::to_string(data_.size()));
        }
    }

    RasterSize size_;
    std::vector<T> data_;
};

/// 8-bit intensity image, levels 0..255.
class GrayImage : public Raster<std::uint8_t> {
public:
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
        : Raster({width, height}, std::move(pixels)) {}

    static GrayImage filled(int width, int height, std::uint8_t level) {
        return GrayImage(width, height,
                         std::vector<std::uint8_t>(RasterSize{width, height}.area(), level));
    }

    std::span<const std::uint8_t> pixels() const noexcept { return values(); }
};

/// Labels are 0 (background) or 1 (foreground).
class BinaryMask : public Raster<std::uint8_t> {
public:
    BinaryMask(int width, int height, std::vector<std::uint8_t> labels);

    static BinaryMask filled(int width, int height, bool foreground) {
        return BinaryMask(width, height,
                          std::vector<std::uint8_t>(RasterSize{width, height}.area(),
                                                    foreground ? 1 : 0));
    }

    std::span<const std::uint8_t> labels() const noexcept { return values(); }
    std::size_t foreground_count() const noexcept;
};

/// Per-pixel foreground probabilities in [0,1].
class ProbMap : public Raster<double> {
public:
    ProbMap(int width, int height, std::vector<double> probs);

    std::span<const double> probs() const noexcept { return values(); }
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

class RgbImage : public Raster<Rgb> {
public:
    RgbImage(int width, int height, std::vector<Rgb> pixels)
        : Raster({width, height}, std::move(pixels)) {}

    std::span<const Rgb> pixels() const noexcept { return values(); }
};

/// Integer-rounded Rec.601 luma: round(0.299 r + 0.587 g + 0.114 b).
std::uint8_t luma(Rgb c) noexcept;

/// Foreground where the gray level is above 127.
BinaryMask binarize(const GrayImage& img);

/// Renders a mask as {0,255}.
GrayImage mask_to_gray(const BinaryMask& mask);

/// Scales levels to probabilities v/255.
ProbMap gray_to_probs(const GrayImage& img);

// PNG I/O. Gray and RGB(A)/palette 8-bit files are accepted; RGB is
// reduced with luma() and alpha is ignored.
GrayImage load_gray(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);
ProbMap load_prob_map(const std::filesystem::path& path);
RasterSize probe_size(const std::filesystem::path& path);

void save_gray(const GrayImage& img, const std::filesystem::path& path);
void save_rgb(const RgbImage& img, const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace tonalseg
