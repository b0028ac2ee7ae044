#include "tonalseg/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace tonalseg {

namespace fs = std::filesystem;

std::string to_string(RasterSize size) {
    return std::to_string(size.width) + "x" + std::to_string(size.height);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> labels)
    : Raster({width, height}, std::move(labels)) {
    for (auto v : data_) {
        if (v > 1) {
            throw Error(ErrorCode::InvalidArgument, "mask labels must be 0 or 1");
        }
    }
}

std::size_t BinaryMask::foreground_count() const noexcept {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ProbMap::ProbMap(int width, int height, std::vector<double> probs)
    : Raster({width, height}, std::move(probs)) {
    for (double p : data_) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "probabilities must lie in [0,1]");
        }
    }
}

std::uint8_t luma(Rgb c) noexcept {
    // Weights scaled by 1000 keep the rounding exact: floor((299r + 587g + 114b + 500) / 1000).
    const unsigned weighted = 299u * c.r + 587u * c.g + 114u * c.b;
    return static_cast<std::uint8_t>((weighted + 500u) / 1000u);
}

BinaryMask binarize(const GrayImage& img) {
    std::vector<std::uint8_t> labels(img.pixel_count());
    std::transform(img.pixels().begin(), img.pixels().end(), labels.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v > 127 ? 1 : 0); });
    return BinaryMask(img.width(), img.height(), std::move(labels));
}

GrayImage mask_to_gray(const BinaryMask& mask) {
    std::vector<std::uint8_t> pixels(mask.pixel_count());
    std::transform(mask.labels().begin(), mask.labels().end(), pixels.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    return GrayImage(mask.width(), mask.height(), std::move(pixels));
}

ProbMap gray_to_probs(const GrayImage& img) {
    std::vector<double> probs(img.pixel_count());
    std::transform(img.pixels().begin(), img.pixels().end(), probs.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return ProbMap(img.width(), img.height(), std::move(probs));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorSink {
    char message[256] = "libpng error";
};

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    std::snprintf(sink->message, sizeof sink->message, "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

enum class DecodeStatus { Ok, LibpngError, BadDepth };

// Everything libpng touches after setjmp lives in this caller-owned struct,
// so a longjmp never skips a destructor.
struct DecodeState {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;
    std::vector<png_bytep> rows;
};

DecodeStatus decode_png(std::FILE* fp, bool header_only, DecodeState& st, PngErrorSink& sink) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
    if (!png) return DecodeStatus::LibpngError;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return DecodeStatus::LibpngError;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return DecodeStatus::LibpngError;
    }

    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &st.width, &st.height, &st.bit_depth, &st.color_type, nullptr,
                 nullptr, nullptr);

    if (header_only) {
        png_destroy_read_struct(&png, &info, nullptr);
        return DecodeStatus::Ok;
    }
    if (st.color_type != PNG_COLOR_TYPE_PALETTE && st.bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        return DecodeStatus::BadDepth;
    }
    if (st.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (st.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    st.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    st.data.resize(stride * st.height);
    st.rows.resize(st.height);
    for (png_uint_32 y = 0; y < st.height; ++y) st.rows[y] = st.data.data() + y * stride;
    png_read_image(png, st.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return DecodeStatus::Ok;
}

FilePtr open_png_for_read(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw Error(ErrorCode::FileNotFound, "no such file: " + path.string());
    }
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());

    png_byte sig[8] = {};
    if (std::fread(sig, 1, sizeof sig, fp.get()) != sizeof sig || png_sig_cmp(sig, 0, 8) != 0) {
        throw Error(ErrorCode::DecodeError, "not a PNG file: " + path.string());
    }
    return fp;
}

DecodeState read_png(const fs::path& path, bool header_only) {
    FilePtr fp = open_png_for_read(path);
    DecodeState st;
    PngErrorSink sink;
    switch (decode_png(fp.get(), header_only, st, sink)) {
        case DecodeStatus::Ok: break;
        case DecodeStatus::LibpngError:
            throw Error(ErrorCode::DecodeError, path.string() + ": " + sink.message);
        case DecodeStatus::BadDepth:
            throw Error(ErrorCode::UnsupportedDepth,
                        path.string() + ": bit depth " + std::to_string(st.bit_depth) +
                            " is not 8");
    }
    return st;
}

void write_png(const fs::path& path, int width, int height, int color_type,
               std::span<const std::uint8_t> interleaved) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());

    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t stride = channels * static_cast<std::size_t>(width);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (std::size_t y = 0; y < rows.size(); ++y) {
        rows[y] = const_cast<png_bytep>(interleaved.data() + y * stride);
    }

    PngErrorSink sink;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
    if (!png) throw Error(ErrorCode::IoError, "libpng write init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::IoError, "libpng write init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, path.string() + ": " + sink.message);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    if (std::fflush(fp.get()) != 0 || std::ferror(fp.get())) {
        throw Error(ErrorCode::IoError, "write failed: " + path.string());
    }
}

}  // namespace

RasterSize probe_size(const fs::path& path) {
    const DecodeState st = read_png(path, true);
    return {static_cast<int>(st.width), static_cast<int>(st.height)};
}

GrayImage load_gray(const fs::path& path) {
    DecodeState st = read_png(path, false);
    const auto w = static_cast<int>(st.width);
    const auto h = static_cast<int>(st.height);
    if (st.channels == 1) return GrayImage(w, h, std::move(st.data));

    std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const std::uint8_t* px = st.data.data() + 3 * i;
        gray[i] = luma({px[0], px[1], px[2]});
    }
    return GrayImage(w, h, std::move(gray));
}

BinaryMask load_mask(const fs::path& path) { return binarize(load_gray(path)); }

ProbMap load_prob_map(const fs::path& path) { return gray_to_probs(load_gray(path)); }

void save_gray(const GrayImage& img, const fs::path& path) {
    write_png(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, img.pixels());
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
    save_gray(mask_to_gray(mask), path);
}

void save_rgb(const RgbImage& img, const fs::path& path) {
    std::vector<std::uint8_t> interleaved;
    interleaved.reserve(3 * img.pixel_count());
    for (const Rgb& c : img.pixels()) {
        interleaved.push_back(c.r);
        interleaved.push_back(c.g);
        interleaved.push_back(c.b);
    }
    write_png(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, interleaved);
}

}  // namespace tonalseg
