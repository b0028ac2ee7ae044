#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "tonalseg/histogram.hpp"

using namespace tonalseg;

namespace {

Histogram histogram_of(std::initializer_list<std::pair<int, std::uint64_t>> bins) {
    Histogram h;
    for (auto [g, c] : bins) h.counts[static_cast<std::size_t>(g)] = c;
    return h;
}

std::array<double, kLevels> uniform_cdf_values() {
    std::array<double, kLevels> cum{};
    for (std::size_t g = 0; g < kLevels; ++g) cum[g] = static_cast<double>(g + 1) / 256.0;
    return cum;
}

GrayImage image_with_all_levels(std::mt19937_64& rng, int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = i < kLevels ? static_cast<std::uint8_t>(i) : static_cast<std::uint8_t>(rng() & 0xff);
    }
    std::shuffle(px.begin(), px.end(), rng);
    return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST_CASE("compute_histogram counts every level") {
    const Histogram h = compute_histogram(GrayImage(2, 2, {0, 0, 255, 128}));
    CHECK(h.counts[0] == 2);
    CHECK(h.counts[128] == 1);
    CHECK(h.counts[255] == 1);
    CHECK(h.total() == 4);

    const Histogram c = compute_histogram(GrayImage::filled(10, 10, 42));
    CHECK(c.counts[42] == 100);
    CHECK(c.total() == 100);

    std::mt19937_64 rng(3);
    const GrayImage img = oracle::random_image(rng, 13, 17);
    CHECK(compute_histogram(img).total() == 13 * 17);
}

TEST_CASE("to_pmf normalizes and rejects empty histograms") {
    const Pmf p = to_pmf(histogram_of({{0, 2}, {128, 1}, {255, 1}}));
    CHECK(p[0] == 0.5);
    CHECK(p[128] == 0.25);
    CHECK(p[255] == 0.25);
    CHECK(p[1] == 0.0);

    CHECK(to_pmf(histogram_of({{7, 5}}))[7] == 1.0);

    try {
        to_pmf(Histogram{});
        FAIL("expected EmptyHistogram");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyHistogram);
    }
}

TEST_CASE("Pmf and Cdf validate their invariants") {
    std::array<double, kLevels> bad{};
    bad[0] = 0.5;
    CHECK_THROWS_AS(Pmf{bad}, Error);
    bad[1] = 0.5 + 1e-6;
    CHECK_THROWS_AS(Pmf{bad}, Error);
    bad[1] = 0.5;
    CHECK_NOTHROW(Pmf{bad});

    auto cum = uniform_cdf_values();
    CHECK_NOTHROW(Cdf{cum});
    cum[10] = cum[11] + 0.01;
    CHECK_THROWS_AS(Cdf{cum}, Error);

    std::array<std::uint8_t, kLevels> table{};
    table[3] = 9;
    CHECK_THROWS_AS(LevelMap{table}, Error);
}

TEST_CASE("to_cdf is the prefix sum") {
    const Cdf c = to_cdf(to_pmf(histogram_of({{0, 2}, {128, 1}, {255, 1}})));
    for (std::size_t g = 0; g < 128; ++g) CHECK(c[g] == 0.5);
    for (std::size_t g = 128; g < 255; ++g) CHECK(c[g] == 0.75);
    CHECK(c[255] == 1.0);

    std::array<double, kLevels> uniform{};
    uniform.fill(1.0 / 256.0);
    const Cdf u = to_cdf(Pmf(uniform));
    for (std::size_t g = 0; g < kLevels; ++g) CHECK(u[g] == static_cast<double>(g + 1) / 256.0);

    const Cdf top = to_cdf(to_pmf(histogram_of({{255, 3}})));
    for (std::size_t g = 0; g < 255; ++g) CHECK(top[g] == 0.0);
    CHECK(top[255] == 1.0);
}

TEST_CASE("average_reference") {
    SUBCASE("single histogram is its own pmf") {
        const Histogram h = histogram_of({{3, 5}, {90, 7}, {200, 1}});
        const ReferenceHistogram ref = average_reference(std::vector<Histogram>{h});
        CHECK(ref.pmf == to_pmf(h));
        CHECK(ref.source_images == 1);
    }
    SUBCASE("mean of point masses") {
        const std::vector<Histogram> hs{histogram_of({{0, 64}}), histogram_of({{255, 64}})};
        const ReferenceHistogram ref = average_reference(hs);
        CHECK(ref.pmf[0] == 0.5);
        CHECK(ref.pmf[255] == 0.5);
    }
    SUBCASE("different pixel counts match the rational oracle") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Histogram> hs;
            const int n = 2 + static_cast<int>(rng() % 5);
            for (int k = 0; k < n; ++k) {
                const int w = 1 + static_cast<int>(rng() % 40);
                const int h = 1 + static_cast<int>(rng() % 40);
                hs.push_back(compute_histogram(oracle::random_image(rng, w, h)));
            }
            const ReferenceHistogram ref = average_reference(hs);
            const auto exact = oracle::averaged_pmf(hs);
            for (std::size_t g = 0; g < kLevels; ++g) {
                CHECK(ref.pmf[g] == doctest::Approx(exact[g].convert_to<double>()).epsilon(1e-12));
            }
            CHECK(ref.source_images == hs.size());
        }
    }
    SUBCASE("errors") {
        try {
            average_reference(std::vector<Histogram>{});
            FAIL("expected EmptyList");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyList);
        }
        try {
            average_reference(std::vector<Histogram>{histogram_of({{1, 1}}), Histogram{}});
            FAIL("expected EmptyHistogram");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyHistogram);
        }
    }
}

TEST_CASE("build_level_map") {
    SUBCASE("identical strictly increasing CDFs give the identity") {
        const Cdf u(uniform_cdf_values());
        CHECK(build_level_map(u, u) == LevelMap::identity());
        CHECK(oracle::level_map_scan(u.cum(), u.cum()) == LevelMap::identity().table());
    }
    SUBCASE("constant image against uniform maps to the top level") {
        const Cdf target = to_cdf(to_pmf(histogram_of({{10, 100}})));
        const Cdf ref(uniform_cdf_values());
        const LevelMap m = build_level_map(target, ref);
        CHECK(m[10] == 255);
        CHECK(oracle::level_map_scan(target.cum(), ref.cum())[10] == 255);
    }
    SUBCASE("exact tie goes to the smaller level") {
        // ref: 0 below 99, 0.25 at 99, 0.75 from 100; target 0.5 at every level >= 0.
        std::array<double, kLevels> r{};
        for (std::size_t g = 99; g < kLevels; ++g) r[g] = g == 99 ? 0.25 : 0.75;
        r[255] = 1.0;
        std::array<double, kLevels> t{};
        for (std::size_t g = 0; g < kLevels; ++g) t[g] = g < 255 ? 0.5 : 1.0;
        const LevelMap m = build_level_map(Cdf(t), Cdf(r));
        CHECK(m[0] == 99);
        CHECK(m[255] == 255);
        CHECK(oracle::level_map_scan(t, r)[0] == 99);

        // Nudging the target toward 0.75 flips the choice to 100.
        for (std::size_t g = 0; g < 255; ++g) t[g] = 0.5 + 1.0 / 1024.0;
        CHECK(build_level_map(Cdf(t), Cdf(r))[0] == 100);
    }
    SUBCASE("plateau below the target resolves to its first level") {
        std::array<double, kLevels> r{};
        for (std::size_t g = 0; g < kLevels; ++g) r[g] = g < 50 ? 0.0 : (g < 200 ? 0.25 : 1.0);
        std::array<double, kLevels> t{};
        for (std::size_t g = 0; g < kLevels; ++g) t[g] = g < 255 ? 0.3 : 1.0;
        const LevelMap m = build_level_map(Cdf(t), Cdf(r));
        CHECK(m[0] == 50);
        CHECK(m.table() == oracle::level_map_scan(t, r));
    }
    SUBCASE("agrees with the exhaustive scan on random CDFs") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 300; ++trial) {
            const auto t = trial % 2 ? oracle::random_dyadic_cdf(rng) : oracle::random_real_cdf(rng);
            const auto r = trial % 3 ? oracle::random_dyadic_cdf(rng) : oracle::random_real_cdf(rng);
            const LevelMap m = build_level_map(Cdf(t), Cdf(r));
            REQUIRE(m.table() == oracle::level_map_scan(t, r));
            CHECK(std::is_sorted(m.table().begin(), m.table().end()));
        }
    }
}

TEST_CASE("apply_level_map relabels pixels") {
    const GrayImage img(2, 1, {3, 5});
    CHECK(apply_level_map(img, LevelMap::identity()) == img);
    CHECK(apply_level_map(img, LevelMap(std::array<std::uint8_t, kLevels>{})) ==
          GrayImage(2, 1, {0, 0}));

    std::array<std::uint8_t, kLevels> table{};
    for (std::size_t g = 0; g < kLevels; ++g) table[g] = g <= 3 ? 10 : 200;
    CHECK(apply_level_map(img, LevelMap(table)) == GrayImage(2, 1, {10, 200}));
}

TEST_CASE("apply_level_map pushes the histogram forward") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const GrayImage img = oracle::random_image(rng, 20, 20);
        const LevelMap m = build_level_map(Cdf(oracle::random_real_cdf(rng)),
                                           Cdf(oracle::random_real_cdf(rng)));
        const Histogram in = compute_histogram(img);
        const Histogram out = compute_histogram(apply_level_map(img, m));
        std::array<std::uint64_t, kLevels> pushed{};
        for (std::size_t g = 0; g < kLevels; ++g) pushed[m[g]] += in.counts[g];
        CHECK(out.counts == pushed);
    }
}

TEST_CASE("specify") {
    std::mt19937_64 rng(17);

    SUBCASE("own-histogram reference leaves a full-range image unchanged") {
        const GrayImage img = image_with_all_levels(rng, 40, 30);
        const ReferenceHistogram ref = average_reference(std::vector{compute_histogram(img)});
        CHECK(specify(img, ref) == img);
    }
    SUBCASE("constant image against uniform reference goes to 255") {
        std::array<double, kLevels> uniform{};
        uniform.fill(1.0 / 256.0);
        const ReferenceHistogram ref{Pmf(uniform), 1, ""};
        const GrayImage out = specify(GrayImage::filled(7, 5, 10), ref);
        CHECK(out == GrayImage::filled(7, 5, 255));
    }
    SUBCASE("matches the explicit composition and keeps dimensions") {
        const GrayImage img = oracle::random_image(rng, 23, 11);
        const ReferenceHistogram ref =
            average_reference(std::vector{compute_histogram(oracle::random_image(rng, 8, 8))});
        const GrayImage out = specify(img, ref);
        CHECK(out.size() == img.size());
        const LevelMap m = build_level_map(to_cdf(to_pmf(compute_histogram(img))), to_cdf(ref.pmf));
        CHECK(out == apply_level_map(img, m));
        CHECK(specify(img, ref) == out);
    }
}

TEST_CASE("drift_score is total variation") {
    std::array<double, kLevels> a{};
    a[0] = 1.0;
    std::array<double, kLevels> b{};
    b[0] = 0.5;
    b[1] = 0.5;
    std::array<double, kLevels> c{};
    c[200] = 1.0;
    CHECK(drift_score(Pmf(a), Pmf(a)) == 0.0);
    CHECK(drift_score(Pmf(a), Pmf(c)) == 1.0);
    CHECK(drift_score(Pmf(a), Pmf(b)) == doctest::Approx(0.5));
    CHECK(drift_score(Pmf(b), Pmf(a)) == drift_score(Pmf(a), Pmf(b)));
}

TEST_CASE("reference serialization") {
    std::mt19937_64 rng(8);
    const ReferenceHistogram ref = average_reference(
        std::vector{compute_histogram(oracle::random_image(rng, 30, 30)),
                    compute_histogram(oracle::random_image(rng, 10, 50))},
        "2024-05-01T00:00:00Z");

    const ReferenceHistogram back = reference_from_json(reference_to_json(ref));
    CHECK(back.pmf == ref.pmf);
    CHECK(back.source_images == 2);
    CHECK(back.created == "2024-05-01T00:00:00Z");

    const auto dir = oracle::scratch_dir("histogram_ref");
    save_reference(ref, dir / "ref.json");
    CHECK(load_reference(dir / "ref.json").pmf == ref.pmf);

    auto expect_format_error = [](const std::string& text) {
        try {
            reference_from_json(text);
            FAIL("expected FormatError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::FormatError);
        }
    };
    expect_format_error("not json");
    expect_format_error(R"({"bins": [1.0], "source_images": 1, "created": "x"})");
    std::string half = R"({"bins": [0.5)";
    for (int i = 1; i < 256; ++i) half += ",0";
    expect_format_error(half + "]}");
    std::string neg = R"({"bins": [1.5, -0.5)";
    for (int i = 2; i < 256; ++i) neg += ",0";
    expect_format_error(neg + "]}");
    std::string ok = R"({"bins": [1.0)";
    for (int i = 1; i < 256; ++i) ok += ",0";
    CHECK(reference_from_json(ok + "]}").pmf[0] == 1.0);
}
