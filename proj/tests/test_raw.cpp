#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "lmot/raw.hpp"

using namespace lmot;
using namespace lmot::raw;

namespace {

RawFrame make_frame(int w, int h, std::uint16_t fill) {
    RawFrame f;
    f.width = w;
    f.height = h;
    f.data.assign(static_cast<std::size_t>(w) * h, fill);
    return f;
}

}  // namespace

TEST_CASE("validate rejects broken invariants") {
    RawFrame f = make_frame(4, 4, 300);
    CHECK_NOTHROW(f.validate());
    f.width = 3;
    CHECK_THROWS_AS(f.validate(), FormatError);
    f = make_frame(4, 4, 300);
    f.bit_depth = 9;
    CHECK_THROWS_AS(f.validate(), FormatError);
    f = make_frame(4, 4, 5000);  // above white level
    CHECK_THROWS_AS(f.validate(), FormatError);
    f = make_frame(4, 4, 300);
    f.black_level = 4095;
    CHECK_THROWS_AS(f.validate(), FormatError);
}

TEST_CASE("normalize endpoints and the mid fixture") {
    RawFrame f = make_frame(2, 2, 240);
    f.at(0, 0) = 4095;
    f.at(0, 1) = 2167;
    auto t = normalize(f);
    CHECK(t.at(0, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(t.at(0, 0, 0, 1) == doctest::Approx((2167.0 - 240.0) / 3855.0));
    CHECK(t.at(0, 0, 1, 0) == doctest::Approx(0.0));
}

TEST_CASE("requantize truncates like hardware") {
    RawFrame f = make_frame(2, 2, 4095);
    f.at(0, 1) = 1000;
    RawFrame to8 = requantize(f, 8);
    CHECK(to8.at(0, 0) == 255);
    RawFrame to10 = requantize(f, 10);
    CHECK(to10.at(0, 1) == 250);
    RawFrame same = requantize(f, 12);
    CHECK(same.data == f.data);
    CHECK_THROWS_AS(requantize(to8, 12), ContractViolation);
}

TEST_CASE("demosaic of a constant mosaic is constant gray") {
    RawFrame f = make_frame(6, 6, 2000);
    RgbImage img = demosaic_bilinear(f);
    const double v = (2000.0 - 240.0) / 3855.0;
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) CHECK(img.at(y, x, c) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("demosaic site identity on a pure-red RGGB scene") {
    RawFrame f = make_frame(6, 6, 240);
    for (int y = 0; y < 6; y += 2)
        for (int x = 0; x < 6; x += 2) f.at(y, x) = 3000;  // R sites
    RgbImage img = demosaic_bilinear(f);
    const double v = (3000.0 - 240.0) / 3855.0;
    for (int y = 0; y < 6; y += 2)
        for (int x = 0; x < 6; x += 2) {
            CHECK(img.at(y, x, 0) == doctest::Approx(v).epsilon(1e-12));
            CHECK(img.at(y, x, 1) == doctest::Approx(0.0));
            CHECK(img.at(y, x, 2) == doctest::Approx(0.0));
        }
}

TEST_CASE("demosaic matches a naive reference on a checker mosaic") {
    RawFrame f = make_frame(4, 4, 240);
    std::uint16_t vals[4][4];
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            vals[y][x] = static_cast<std::uint16_t>(240 + 100 * (y * 4 + x + 1));
            f.at(y, x) = vals[y][x];
        }
    RgbImage img = demosaic_bilinear(f);
    // naive reference: per color plane, value = mean of same-color sites within
    // the reflect-101 3x3 neighborhood (own site taken directly)
    auto color_of = [](int y, int x) { return (y % 2 == 0) ? (x % 2 == 0 ? 0 : 1) : (x % 2 == 0 ? 1 : 2); };
    auto norm = [&](int y, int x) { return (vals[y][x] - 240.0) / 3855.0; };
    auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) {
                double want;
                if (color_of(y, x) == c) {
                    want = norm(y, x);
                } else {
                    double acc = 0;
                    int cnt = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = reflect(y + dy, 4), xx = reflect(x + dx, 4);
                            if (color_of(yy, xx) == c) {
                                acc += norm(yy, xx);
                                ++cnt;
                            }
                        }
                    want = acc / cnt;
                }
                CHECK(img.at(y, x, c) == doctest::Approx(want).epsilon(1e-10));
            }
}

TEST_CASE("simple_isp fixtures") {
    RawFrame f = make_frame(4, 4, 240 + 964);  // ~0.25 normalized
    RgbImage unity = simple_isp(f, 1, 1, 1, 1.0);
    RgbImage plain = demosaic_bilinear(f);
    for (std::size_t i = 0; i < unity.data.size(); ++i)
        CHECK(unity.data[i] == doctest::Approx(plain.data[i]).epsilon(1e-12));

    const double quarter = 964.0 / 3855.0;
    RgbImage gamma = simple_isp(f, 1, 1, 1, 2.2);
    CHECK(gamma.at(1, 1, 0) == doctest::Approx(std::pow(quarter, 1.0 / 2.2)).epsilon(1e-9));

    RawFrame sat = make_frame(4, 4, 4095);
    RgbImage clamped = simple_isp(sat, 2.0, 2.0, 2.0, 1.0);
    for (double v : clamped.data) CHECK(v == doctest::Approx(1.0));
    CHECK_THROWS_AS(simple_isp(f, -1, 1, 1, 2.2), ContractViolation);
    CHECK_THROWS_AS(simple_isp(f, 1, 1, 1, 0.0), ContractViolation);
}

TEST_CASE("exposure_scale on tensors and images") {
    numerics::Tensor t(1, 1, 1, 2);
    t.at(0, 0, 0, 0) = 0.004;
    t.at(0, 0, 0, 1) = 0.02;
    numerics::Tensor s = exposure_scale(t, 100.0);
    CHECK(s.at(0, 0, 0, 0) == doctest::Approx(0.4));
    CHECK(s.at(0, 0, 0, 1) == doctest::Approx(1.0));  // clamped
    numerics::Tensor id = exposure_scale(t, 1.0);
    CHECK(id.at(0, 0, 0, 0) == doctest::Approx(0.004));
}

TEST_CASE("raw save/load round trip") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lmot_raw_test";
    fs::create_directories(dir);
    RawFrame f = make_frame(6, 4, 0);
    f.bit_depth = 12;
    f.black_level = 240;
    f.white_level = 4095;
    f.pattern = BayerPattern::GRBG;
    f.frame_index = 42;
    f.timestamp = 2.1;
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<std::uint16_t>(240 + 7 * i);
    const std::string path = (dir / "frame.raw16").string();
    save_raw(f, path);
    RawFrame g = load_raw(path);
    CHECK(g.data == f.data);
    CHECK(g.width == 6);
    CHECK(g.height == 4);
    CHECK(g.pattern == BayerPattern::GRBG);
    CHECK(g.frame_index == 42);
    CHECK(g.timestamp == doctest::Approx(2.1));
    CHECK_THROWS_AS(load_raw((dir / "missing.raw16").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("png export writes a parseable file header") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lmot_png_test";
    fs::create_directories(dir);
    RgbImage img;
    img.width = 8;
    img.height = 8;
    img.data.assign(8 * 8 * 3, 0.5);
    const std::string path = (dir / "out.png").string();
    save_png(img, path);
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    REQUIRE(fp != nullptr);
    unsigned char sig[8] = {};
    REQUIRE(std::fread(sig, 1, 8, fp) == 8);
    std::fclose(fp);
    CHECK(sig[0] == 0x89);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
    fs::remove_all(dir);
}
