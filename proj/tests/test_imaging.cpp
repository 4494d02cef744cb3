#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "homogen/image.hpp"
#include "homogen/io.hpp"
#include "homogen/warp.hpp"
#include "test_util.hpp"

using namespace homogen;
using testutil::make_smooth_image;
using testutil::make_smooth_mask;

TEST_CASE("warp by identity is bit-exact with full validity") {
    const ImageBuf img = make_smooth_image(40, 30, 1);
    const WarpResult res = warp(img, Homography{});
    REQUIRE(res.image.data.size() == img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(res.image.data[i] == img.data[i]);
    for (float v : res.validity.w) CHECK(v == 1.0f);
}

TEST_CASE("warp by integer translation shifts columns and zeroes the vacated band") {
    const ImageBuf img = make_smooth_image(32, 24, 2);
    const WarpResult res = warp(img, Homography::translation(3, 0));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (x < 3) {
                CHECK(res.validity.at(x, y) == 0.0f);
                CHECK(res.image.at(x, y) == 0.0f);
            } else {
                CHECK(res.image.at(x, y) == img.at(x - 3, y));
                CHECK(res.validity.at(x, y) == 1.0f);
            }
        }
    }
}

TEST_CASE("bilinear midpoint is exact") {
    ImageBuf img(2, 1, 1);
    img.at(0, 0) = 0.0f;
    img.at(1, 0) = 1.0f;
    const WarpResult res = warp(img, Homography::translation(0.5, 0));
    CHECK(res.image.at(1, 0) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("warp is linear in intensities") {
    const ImageBuf img = make_smooth_image(48, 48, 3);
    ImageBuf scaled = img;
    for (auto& v : scaled.data) v *= 0.37f;
    const Homography h = sample_gt(PerturbationRanges::small_baseline(), 24, 24, 9);
    const WarpResult a = warp(img, h);
    const WarpResult b = warp(scaled, h);
    for (std::size_t i = 0; i < a.image.data.size(); ++i)
        CHECK(std::abs(b.image.data[i] - 0.37f * a.image.data[i]) < 1e-6f);
}

TEST_CASE("warp composition consistency on smooth images") {
    const ImageBuf img = make_smooth_image(96, 96, 4, 4.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Homography h1 = sample_gt(PerturbationRanges::small_baseline(), 48, 48, 2 * seed);
        const Homography h2 = sample_gt(PerturbationRanges::small_baseline(), 48, 48, 2 * seed + 1);
        const WarpResult step1 = warp(img, h1);
        const WarpResult step2 = warp(step1.image, h2);
        const PlaneMask valid1to2 = warp_mask(step1.validity, h2);
        const WarpResult direct = warp(img, compose(h2, h1));
        double max_diff = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                if (valid1to2.at(x, y) > 0.999f && direct.validity.at(x, y) > 0.999f)
                    max_diff = std::max(max_diff,
                                        static_cast<double>(std::abs(step2.image.at(x, y) -
                                                                     direct.image.at(x, y))));
        CHECK(max_diff < 0.02);
    }
}

TEST_CASE("warp_mask identity and all-ones") {
    const PlaneMask m = make_smooth_mask(40, 40, 5);
    const PlaneMask mi = warp_mask(m, Homography{});
    for (std::size_t i = 0; i < m.w.size(); ++i) CHECK(mi.w[i] == m.w[i]);

    PlaneMask ones(40, 40, 1.0f);
    const Homography h = Homography::translation(2.5, -1.5);
    const PlaneMask warped = warp_mask(ones, h);
    const WarpResult probe = warp(ImageBuf(40, 40, 1, 1.0f), h);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            if (probe.validity.at(x, y) > 0.999f)
                CHECK(warped.at(x, y) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("warp_mask double-warp roundtrip stays near the original interior") {
    // Tolerance calibrated on 50 smooth random masks.
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const PlaneMask m = make_smooth_mask(64, 64, 100 + seed);
        const Homography h = sample_gt(PerturbationRanges::small_baseline(), 32, 32, seed);
        const PlaneMask fwd = warp_mask(m, h);
        const PlaneMask back = warp_mask(fwd, invert(h));
        double sum = 0;
        int n = 0;
        for (int y = 20; y < 44; ++y) {
            for (int x = 20; x < 44; ++x) {
                sum += std::abs(back.at(x, y) - m.at(x, y));
                ++n;
            }
        }
        CHECK(sum / n < 0.02);
    }
}

TEST_CASE("feature_extract basics") {
    ImageBuf flat(32, 32, 1, 0.5f);
    const FeatureMap f = feature_extract(flat);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c : {1, 2, 4, 5}) CHECK(f.at(x, y, c) == doctest::Approx(0.0).epsilon(1e-7));

    ImageBuf step(32, 32, 1, 0.0f);
    for (int y = 0; y < 32; ++y)
        for (int x = 16; x < 32; ++x) step.at(x, y) = 1.0f;
    const FeatureMap fs = feature_extract(step);
    CHECK(fs.at(16, 16, 1) > 0.1f);   // x-gradient at the edge
    CHECK(fs.at(4, 16, 1) == doctest::Approx(0.0));
    CHECK(fs.at(28, 16, 1) == doctest::Approx(0.0));

    const ImageBuf img = make_smooth_image(32, 32, 6);
    const FeatureMap a = feature_extract(img);
    const FeatureMap b = feature_extract(img);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("seam_energy") {
    PlaneMask band(16, 16, 1.0f);
    CHECK(seam_energy(ImageBuf(16, 16, 1, 0.3f), band) == doctest::Approx(0.0));

    ImageBuf seam(16, 16, 1, 0.0f);
    for (int y = 0; y < 16; ++y)
        for (int x = 8; x < 16; ++x) seam.at(x, y) = 1.0f;
    CHECK(seam_energy(seam, band) > 0.0);

    PlaneMask empty(16, 16, 0.0f);
    CHECK_THROWS_AS(seam_energy(seam, empty), EmptyBand);
}

TEST_CASE("grayscale, crop, normalize") {
    const ImageBuf gray = make_smooth_image(20, 20, 7);
    const ImageBuf g2 = to_grayscale(gray);
    for (std::size_t i = 0; i < gray.data.size(); ++i) CHECK(g2.data[i] == gray.data[i]);

    const ImageBuf cropped = center_crop(gray, 20, 20);
    for (std::size_t i = 0; i < gray.data.size(); ++i) CHECK(cropped.data[i] == gray.data[i]);
    const ImageBuf inner = center_crop(gray, 10, 8);
    CHECK(inner.width == 10);
    CHECK(inner.height == 8);
    CHECK(inner.at(0, 0) == gray.at(5, 6));

    const ImageBuf norm = normalize_intensity(ImageBuf(8, 8, 1, 0.42f));
    CHECK(norm.normalized);
    for (float v : norm.data) CHECK(v == doctest::Approx(0.0));

    ImageBuf rgb(4, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            rgb.at(x, y, 0) = 1.0f;
            rgb.at(x, y, 1) = 0.5f;
            rgb.at(x, y, 2) = 0.0f;
        }
    const ImageBuf g3 = to_grayscale(rgb);
    CHECK(g3.at(0, 0) == doctest::Approx(0.299 * 1.0 + 0.587 * 0.5).epsilon(1e-6));
}

TEST_CASE("image io roundtrip png and pgm") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "homogen_io_test";
    fs::create_directories(dir);

    ImageBuf img(17, 11, 1);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 17; ++x) img.at(x, y) = static_cast<float>((x * 11 + y * 3) % 256) / 255.0f;

    for (const char* name : {"t.png", "t.pgm"}) {
        const std::string path = (dir / name).string();
        save_image(img, path);
        const ImageBuf back = load_image(path);
        REQUIRE(back.width == img.width);
        REQUIRE(back.height == img.height);
        for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
    }

    ImageBuf rgb(9, 7, 3);
    for (std::size_t i = 0; i < rgb.data.size(); ++i)
        rgb.data[i] = static_cast<float>((i * 37) % 256) / 255.0f;
    for (const char* name : {"c.png", "c.ppm"}) {
        const std::string path = (dir / name).string();
        save_image(rgb, path);
        const ImageBuf back = load_image(path);
        REQUIRE(back.channels == 3);
        for (std::size_t i = 0; i < rgb.data.size(); ++i) CHECK(back.data[i] == rgb.data[i]);
    }

    CHECK_THROWS_AS(load_image((dir / "missing.png").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("8-bit conversion rounds half up") {
    CHECK(to_u8(0.0f) == 0);
    CHECK(to_u8(1.0f) == 255);
    CHECK(to_u8(1.5f / 255.0f) == 2);
    CHECK(to_u8(-1.0f) == 0);
    CHECK(to_u8(2.0f) == 255);
}
