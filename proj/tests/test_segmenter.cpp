#include <doctest.h>

#include "oracles.hpp"
#include "tonalseg/segmenter.hpp"

using namespace tonalseg;
namespace fs = std::filesystem;

namespace {

/// Paints an axis-aligned rectangle of foreground.
void paint(std::vector<std::uint8_t>& labels, int w, int x0, int y0, int rw, int rh) {
    for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) labels[static_cast<std::size_t>(y * w + x)] = 1;
    }
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        if (a[i] && !b[i]) return false;
    }
    return true;
}

struct EllipseFixture {
    GrayImage image;
    BinaryMask truth;
};

EllipseFixture bright_ellipse(int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
    std::vector<std::uint8_t> lb(px.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5 - w / 2.0) / (w * 0.3);
            const double v = (y + 0.5 - h / 2.0) / (h * 0.2);
            const bool in = u * u + v * v <= 1.0;
            px[static_cast<std::size_t>(y * w + x)] = in ? 180 : 40;
            lb[static_cast<std::size_t>(y * w + x)] = in ? 1 : 0;
        }
    }
    return {GrayImage(w, h, std::move(px)), BinaryMask(w, h, std::move(lb))};
}

}  // namespace

TEST_CASE("otsu_threshold") {
    SUBCASE("two extreme classes") {
        std::vector<std::uint8_t> px(64, 0);
        std::fill(px.begin() + 32, px.end(), 255);
        const GrayImage img(8, 8, px);
        const int t = otsu_threshold(img);
        CHECK(t >= 0);
        CHECK(t < 255);
        CHECK(t == oracle::otsu_scan(img));
        const BinaryMask m = apply_threshold(img, t);
        CHECK(m.foreground_count() == 32);
    }
    SUBCASE("constant image returns its level") {
        CHECK(otsu_threshold(GrayImage::filled(6, 6, 42)) == 42);
        CHECK(oracle::otsu_scan(GrayImage::filled(6, 6, 42)) == 42);
        CHECK(apply_threshold(GrayImage::filled(6, 6, 42), 42).foreground_count() == 0);
    }
    SUBCASE("bimodal 20/200") {
        std::vector<std::uint8_t> px(100, 20);
        std::fill(px.begin() + 50, px.end(), 200);
        const GrayImage img(10, 10, px);
        const int t = otsu_threshold(img);
        CHECK(t >= 20);
        CHECK(t <= 199);
        CHECK(t == oracle::otsu_scan(img));
    }
    SUBCASE("matches the exact rational scan on random images") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 60; ++trial) {
            GrayImage img = oracle::random_image(rng, 12, 12);
            if (trial % 3 == 0) {
                // few distinct levels, many exact ties
                std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
                for (auto& v : px) v = static_cast<std::uint8_t>((v % 4) * 60);
                img = GrayImage(12, 12, std::move(px));
            }
            REQUIRE(otsu_threshold(img) == oracle::otsu_scan(img));
        }
    }
}

TEST_CASE("apply_threshold is strict") {
    const GrayImage img(4, 1, {0, 1, 0, 1});
    const BinaryMask m = apply_threshold(img, 0);
    CHECK(std::vector<std::uint8_t>(m.labels().begin(), m.labels().end()) ==
          std::vector<std::uint8_t>{0, 1, 0, 1});
    CHECK(apply_threshold(GrayImage::filled(3, 3, 255), 255).foreground_count() == 0);
    const BinaryMask two = apply_threshold(GrayImage(2, 1, {100, 200}), 127);
    CHECK(two[0] == 0);
    CHECK(two[1] == 1);
    CHECK_THROWS_AS(apply_threshold(img, 256), Error);
}

TEST_CASE("clean_mask") {
    const int w = 30;
    const int h = 30;

    SUBCASE("single blob survives") {
        std::vector<std::uint8_t> lb(w * h, 0);
        paint(lb, w, 5, 5, 10, 10);
        const BinaryMask m(w, h, lb);
        CHECK(clean_mask(m, 100) == m);
        CHECK(clean_mask(m, 1, 1) == m);
    }
    SUBCASE("specks below the minimum size are removed") {
        std::vector<std::uint8_t> lb(w * h, 0);
        paint(lb, w, 2, 2, 10, 10);
        paint(lb, w, 20, 25, 2, 1);
        const BinaryMask m(w, h, lb);
        CHECK(oracle::component_sizes(m) == std::vector<std::size_t>{100, 2});
        const BinaryMask out = clean_mask(m, 10);
        CHECK(oracle::component_sizes(out) == std::vector<std::size_t>{100});
        CHECK(out.foreground_count() == 100);
        CHECK(out.at(20, 25) == 0);
    }
    SUBCASE("keep the largest k") {
        std::vector<std::uint8_t> lb(w * h, 0);
        paint(lb, w, 1, 1, 5, 6);    // 30 px, first in raster order
        paint(lb, w, 10, 10, 10, 5); // 50 px
        const BinaryMask m(w, h, lb);
        const BinaryMask out = clean_mask(m, 0, 1);
        CHECK(oracle::component_sizes(out) == std::vector<std::size_t>{50});
        CHECK(out.at(10, 10) == 1);
        CHECK(out.at(1, 1) == 0);
    }
    SUBCASE("equal sizes keep the component that starts first") {
        std::vector<std::uint8_t> lb(w * h, 0);
        paint(lb, w, 20, 2, 3, 3);
        paint(lb, w, 2, 20, 3, 3);
        const BinaryMask out = clean_mask(BinaryMask(w, h, lb), 0, 1);
        CHECK(out.at(20, 2) == 1);
        CHECK(out.at(2, 20) == 0);
    }
    SUBCASE("diagonal neighbours join one component") {
        const BinaryMask m(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        CHECK(oracle::component_sizes(m) == std::vector<std::size_t>{3});
        CHECK(clean_mask(m, 3) == m);
        CHECK(clean_mask(m, 4).foreground_count() == 0);
    }
    SUBCASE("never adds foreground and matches the flood-fill oracle") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 100; ++trial) {
            const BinaryMask m = oracle::random_mask(rng, 16, 12, 0.35);
            const std::size_t min_size = rng() % 8;
            const BinaryMask out = clean_mask(m, min_size);
            CHECK(subset(out, m));
            std::size_t expected = 0;
            for (std::size_t s : oracle::component_sizes(m)) expected += s >= min_size ? s : 0;
            CHECK(out.foreground_count() == expected);
            CHECK(subset(clean_mask(m, min_size, 2), out));
        }
    }
}

TEST_CASE("predict") {
    std::mt19937_64 rng(51);

    SUBCASE("fixed threshold without extras is apply_threshold") {
        const GrayImage img = oracle::random_image(rng, 20, 20);
        SegmenterConfig cfg;
        cfg.threshold = FixedThreshold{90};
        CHECK(predict(img, cfg) == apply_threshold(img, 90));
    }
    SUBCASE("specification composes with prediction") {
        const GrayImage img = oracle::random_image(rng, 20, 20);
        const ReferenceHistogram ref =
            average_reference(std::vector{compute_histogram(oracle::random_image(rng, 10, 10))});
        SegmenterConfig with;
        with.threshold = OtsuThreshold{};
        with.min_component_size = 3;
        with.apply_specification = true;
        with.reference = ref;
        SegmenterConfig without = with;
        without.apply_specification = false;
        CHECK(predict(img, with) == predict(specify(img, ref), without));
    }
    SUBCASE("bright ellipse is recovered exactly") {
        const auto fx = bright_ellipse(64, 48);
        SegmenterConfig cfg;
        cfg.threshold = FixedThreshold{110};
        CHECK(predict(fx.image, cfg) == fx.truth);
        cfg.threshold = OtsuThreshold{};
        CHECK(predict(fx.image, cfg) == fx.truth);
    }
    SUBCASE("invalid configurations") {
        SegmenterConfig cfg;
        cfg.apply_specification = true;
        CHECK_THROWS_AS(cfg.validate(), Error);
        cfg = {};
        cfg.keep_largest_k = 0;
        CHECK_THROWS_AS(cfg.validate(), Error);
        CHECK_THROWS_AS(parse_threshold_mode("300"), Error);
        CHECK_THROWS_AS(parse_threshold_mode("abc"), Error);
        CHECK(std::get<FixedThreshold>(parse_threshold_mode("12")).level == 12);
        CHECK(std::holds_alternative<OtsuThreshold>(parse_threshold_mode("otsu")));
    }
}

TEST_CASE("calibrate_threshold picks the middle of the perfect range") {
    const auto fx = bright_ellipse(40, 40);
    const std::vector<GrayImage> images{fx.image};
    const std::vector<BinaryMask> masks{fx.truth};
    // Every level in [40, 179] is perfect; the lower median is 109.
    CHECK(calibrate_threshold(images, masks) == 109);
    CHECK_THROWS_AS(calibrate_threshold(std::span<const GrayImage>{}, std::span<const BinaryMask>{}),
                    Error);
}

TEST_CASE("load_external_predictions") {
    const auto dir = oracle::scratch_dir("segmenter_external");
    fs::create_directories(dir / "pred");
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < 3; ++i) {
        ManifestEntry e;
        e.image_id = "case" + std::to_string(i);
        e.image_path = dir / (e.image_id + "_img.png");
        e.mask_path = dir / (e.image_id + "_mask.png");
        save_gray(GrayImage::filled(6, 4, 50), e.image_path);
        save_mask(BinaryMask::filled(6, 4, i % 2 == 0), *e.mask_path);
        save_mask(BinaryMask::filled(6, 4, true), prediction_path(dir / "pred", e.image_id));
        entries.push_back(e);
    }
    const Manifest manifest(entries);

    const auto preds = load_external_predictions(dir / "pred", manifest);
    CHECK(preds.size() == 3);
    CHECK(preds.at("case1").foreground_count() == 24);

    fs::remove(prediction_path(dir / "pred", "case2"));
    try {
        load_external_predictions(dir / "pred", manifest);
        FAIL("expected MissingPrediction");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingPrediction);
        CHECK(std::string(e.what()).find("case2") != std::string::npos);
    }

    save_mask(BinaryMask::filled(5, 4, true), prediction_path(dir / "pred", "case2"));
    try {
        load_external_predictions(dir / "pred", manifest);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
        CHECK(std::string(e.what()).find("case2") != std::string::npos);
    }
}
