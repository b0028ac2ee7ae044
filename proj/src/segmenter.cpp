#include "tonalseg/segmenter.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <vector>

#include "tonalseg/evaluation.hpp"

namespace tonalseg {

namespace fs = std::filesystem;

ThresholdMode parse_threshold_mode(std::string_view text) {
    if (text == "otsu") return OtsuThreshold{};
    int level = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), level);
    if (ec != std::errc{} || ptr != text.data() + text.size() || level < 0 || level > 255) {
        throw Error(ErrorCode::InvalidArgument,
                    "threshold must be 'otsu' or a level in [0,255], got '" + std::string(text) + "'");
    }
    return FixedThreshold{level};
}

void SegmenterConfig::validate() const {
    if (const auto* fixed = std::get_if<FixedThreshold>(&threshold)) {
        if (fixed->level < 0 || fixed->level > 255) {
            throw Error(ErrorCode::InvalidArgument, "fixed threshold must lie in [0,255]");
        }
    }
    if (keep_largest_k && *keep_largest_k == 0) {
        throw Error(ErrorCode::InvalidArgument, "keep_largest_k must be positive");
    }
    if (apply_specification && !reference) {
        throw Error(ErrorCode::InvalidArgument, "histogram specification needs a reference");
    }
}

int otsu_threshold(const Histogram& h) {
    const std::uint64_t n = h.total();
    const auto distinct = std::count_if(h.counts.begin(), h.counts.end(),
                                        [](std::uint64_t c) { return c > 0; });
    if (distinct <= 1) {
        const auto it = std::find_if(h.counts.begin(), h.counts.end(),
                                     [](std::uint64_t c) { return c > 0; });
        return it == h.counts.end() ? 0 : static_cast<int>(it - h.counts.begin());
    }

    // Products below stay under 255 * n^2 < 2^63.
    if (n >= (std::uint64_t{1} << 27)) {
        throw Error(ErrorCode::InvalidArgument, "otsu_threshold supports fewer than 2^27 pixels");
    }
    std::int64_t sum_all = 0;
    for (std::size_t g = 0; g < kLevels; ++g) sum_all += static_cast<std::int64_t>(g * h.counts[g]);

    // Between-class variance up to the constant factor 1/N^2:
    // (S n0 - N s0)^2 / (n0 (N - n0)).
    int best_level = 0;
    double best_score = -1.0;
    std::uint64_t n0 = 0;
    std::int64_t s0 = 0;
    for (std::size_t t = 0; t < kLevels; ++t) {
        n0 += h.counts[t];
        s0 += static_cast<std::int64_t>(t * h.counts[t]);
        double score = 0.0;
        if (n0 > 0 && n0 < n) {
            const auto diff = static_cast<double>(sum_all * static_cast<std::int64_t>(n0) -
                                                  static_cast<std::int64_t>(n) * s0);
            score = diff * diff / (static_cast<double>(n0) * static_cast<double>(n - n0));
        }
        if (score > best_score) {
            best_score = score;
            best_level = static_cast<int>(t);
        }
    }
    return best_level;
}

int otsu_threshold(const GrayImage& img) { return otsu_threshold(compute_histogram(img)); }

BinaryMask apply_threshold(const GrayImage& img, int level) {
    if (level < 0 || level > 255) {
        throw Error(ErrorCode::InvalidArgument, "threshold level must lie in [0,255]");
    }
    std::vector<std::uint8_t> labels(img.pixel_count());
    std::transform(img.pixels().begin(), img.pixels().end(), labels.begin(),
                   [level](std::uint8_t v) { return static_cast<std::uint8_t>(v > level ? 1 : 0); });
    return BinaryMask(img.width(), img.height(), std::move(labels));
}

namespace {

struct Component {
    std::size_t first_pixel = 0;
    std::size_t size = 0;
};

// Labels 8-connected foreground components; ids follow raster order of
// each component's first pixel. Returns per-pixel ids (0 = background,
// component k has id k+1).
std::vector<std::uint32_t> label_components(const BinaryMask& mask, std::vector<Component>& comps) {
    const int w = mask.width();
    const int h = mask.height();
    const auto labels = mask.labels();
    std::vector<std::uint32_t> ids(labels.size(), 0);
    std::vector<std::size_t> stack;

    for (std::size_t start = 0; start < labels.size(); ++start) {
        if (!labels[start] || ids[start]) continue;
        const auto id = static_cast<std::uint32_t>(comps.size() + 1);
        Component comp{start, 0};
        ids[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++comp.size;
            const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
            const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx =
                        static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                        static_cast<std::size_t>(nx);
                    if (labels[nidx] && !ids[nidx]) {
                        ids[nidx] = id;
                        stack.push_back(nidx);
                    }
                }
            }
        }
        comps.push_back(comp);
    }
    return ids;
}

}  // namespace

BinaryMask clean_mask(const BinaryMask& mask, std::size_t min_size,
                      std::optional<std::size_t> keep_largest_k) {
    std::vector<Component> comps;
    const std::vector<std::uint32_t> ids = label_components(mask, comps);

    std::vector<std::size_t> survivors;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        if (comps[k].size >= min_size) survivors.push_back(k);
    }
    if (keep_largest_k && survivors.size() > *keep_largest_k) {
        std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
            if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
            return comps[a].first_pixel < comps[b].first_pixel;
        });
        survivors.resize(*keep_largest_k);
    }

    std::vector<std::uint8_t> keep(comps.size() + 1, 0);
    for (std::size_t k : survivors) keep[k + 1] = 1;
    std::vector<std::uint8_t> out(ids.size());
    std::transform(ids.begin(), ids.end(), out.begin(), [&](std::uint32_t id) { return keep[id]; });
    return BinaryMask(mask.width(), mask.height(), std::move(out));
}

BinaryMask predict(const GrayImage& img, const SegmenterConfig& cfg) {
    cfg.validate();
    const GrayImage input = cfg.apply_specification ? specify(img, *cfg.reference) : img;
    const int level = std::visit(
        [&](const auto& mode) -> int {
            if constexpr (std::is_same_v<std::decay_t<decltype(mode)>, OtsuThreshold>) {
                return otsu_threshold(input);
            } else {
                return mode.level;
            }
        },
        cfg.threshold);
    BinaryMask mask = apply_threshold(input, level);
    if (cfg.min_component_size > 0 || cfg.keep_largest_k) {
        mask = clean_mask(mask, cfg.min_component_size, cfg.keep_largest_k);
    }
    return mask;
}

int calibrate_threshold(std::span<const GrayImage> images, std::span<const BinaryMask> masks) {
    if (images.empty()) throw Error(ErrorCode::EmptyList, "no calibration images");
    if (images.size() != masks.size()) {
        throw Error(ErrorCode::DimensionMismatch, "calibration needs one mask per image");
    }

    std::vector<double> dice_sum(kLevels, 0.0);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].size() != masks[i].size()) {
            throw Error(ErrorCode::DimensionMismatch, "calibration image " + std::to_string(i) +
                                                          " does not match its mask");
        }
        // Per-level counts of foreground and background pixels.
        std::array<std::uint64_t, kLevels> fg{};
        std::array<std::uint64_t, kLevels> bg{};
        const auto px = images[i].pixels();
        const auto lb = masks[i].labels();
        for (std::size_t p = 0; p < px.size(); ++p) (lb[p] ? fg : bg)[px[p]]++;

        const std::uint64_t fg_total = std::accumulate(fg.begin(), fg.end(), std::uint64_t{0});
        const std::uint64_t bg_total = std::accumulate(bg.begin(), bg.end(), std::uint64_t{0});
        std::uint64_t fg_at_or_below = 0;
        std::uint64_t bg_at_or_below = 0;
        for (std::size_t t = 0; t < kLevels; ++t) {
            fg_at_or_below += fg[t];
            bg_at_or_below += bg[t];
            ConfusionCounts c;
            c.tp = fg_total - fg_at_or_below;
            c.fn = fg_at_or_below;
            c.fp = bg_total - bg_at_or_below;
            c.tn = bg_at_or_below;
            dice_sum[t] += dice(c);
        }
    }

    const double best = *std::max_element(dice_sum.begin(), dice_sum.end());
    std::vector<int> tied;
    for (std::size_t t = 0; t < kLevels; ++t) {
        if (dice_sum[t] == best) tied.push_back(static_cast<int>(t));
    }
    return tied[(tied.size() - 1) / 2];
}

fs::path prediction_path(const fs::path& dir, std::string_view image_id) {
    return dir / (std::string(image_id) + ".png");
}

std::map<std::string, BinaryMask> load_external_predictions(const fs::path& dir,
                                                            const Manifest& manifest) {
    std::map<std::string, BinaryMask> out;
    for (const auto& e : manifest.entries()) {
        const fs::path path = prediction_path(dir, e.image_id);
        std::error_code ec;
        if (!fs::is_regular_file(path, ec)) {
            throw Error(ErrorCode::MissingPrediction,
                        "missing prediction for '" + e.image_id + "': " + path.string());
        }
        BinaryMask mask = load_mask(path);
        const RasterSize expected = probe_size(e.mask_path ? *e.mask_path : e.image_path);
        if (mask.size() != expected) {
            throw Error(ErrorCode::DimensionMismatch, "prediction for '" + e.image_id + "' is " +
                                                          to_string(mask.size()) + ", expected " +
                                                          to_string(expected));
        }
        out.emplace(e.image_id, std::move(mask));
    }
    return out;
}

}  // namespace tonalseg
