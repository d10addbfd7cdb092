#include "test_support.hpp"

#include <gtest/gtest.h>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

using namespace llctrack;
using testing_support::scratch_dir;

namespace {

GrayImage planar(int w, int h, double a, double b, double c)
{
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.at(x, y) = a + b * (x + 0.5) + c * (y + 0.5);
    }
    return img;
}

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(ToGray, LumaWeights)
{
    const RgbImage white{2, 2, std::vector<std::uint8_t>(12, 255)};
    const auto gray_white = to_gray(white);
    for (const double v : gray_white.data()) EXPECT_DOUBLE_EQ(v, 1.0);

    const RgbImage red{3, 1, {255, 0, 0, 255, 0, 0, 255, 0, 0}};
    const auto gray_red = to_gray(red);
    for (const double v : gray_red.data()) EXPECT_NEAR(v, 0.299, 1e-12);

    const RgbImage bw{2, 1, {0, 0, 0, 255, 255, 255}};
    const auto g = to_gray(bw);
    EXPECT_DOUBLE_EQ(g.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(g.at(1, 0), 1.0);

    const RgbImage broken{2, 2, std::vector<std::uint8_t>(5, 0)};
    EXPECT_EQ(code_of([&] { to_gray(broken); }), ErrorCode::DecodeError);
}

TEST(ExtractPatch, IdentityOnExact32Image)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GrayImage img(32, 32);
    for (auto& v : img.data()) v = u(rng);
    const auto patch = extract_patch(img, state_from_box({0, 0, 32, 32}), {32, 32});
    Eigen::VectorXd raw(kPatchLength);
    for (int i = 0; i < kPatchLength; ++i) raw(i) = img.data()[static_cast<std::size_t>(i)];
    raw.normalize();
    EXPECT_LE((patch.values() - raw).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExtractPatch, ConstantRegion)
{
    const GrayImage img(100, 80, 0.37);
    AffineState s = state_from_box({20, 10, 40, 30});
    s.theta = 0.3;
    s.scale = 0.9;
    const auto patch = extract_patch(img, s, {40, 30});
    for (int i = 0; i < kPatchLength; ++i) EXPECT_NEAR(patch.values()(i), 0.03125, 1e-12);
}

TEST(ExtractPatch, TranslationEquivariance)
{
    const auto img = planar(120, 100, 0.1, 0.003, 0.002);
    GrayImage shifted(120, 100);
    for (int y = 0; y < 100; ++y) {
        for (int x = 0; x < 119; ++x) shifted.at(x, y) = img.at(x + 1, y);
    }
    AffineState s = state_from_box({30, 30, 40, 40});
    s.theta = 0.2;
    s.skew = 0.05;
    AffineState moved = s;
    moved.lx += 1.0;
    const auto a = extract_patch(img, moved, {40, 40});
    const auto b = extract_patch(shifted, s, {40, 40});
    EXPECT_LE((a.values() - b.values()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ExtractPatch, ComposedTranslations)
{
    const auto img = planar(150, 120, 0.2, 0.002, 0.001);
    AffineState base = state_from_box({40, 40, 32, 32});
    AffineState twice = base;
    twice.lx += 0.3;
    twice.ly -= 1.25;
    twice.lx += 2.45;
    twice.ly += 0.5;
    AffineState once = base;
    once.lx += 2.75;
    once.ly += -0.75;
    const auto a = sample_patch(img, twice, {32, 32});
    const auto b = sample_patch(img, once, {32, 32});
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SampleBilinear, ExactOnPlanarField)
{
    const auto img = planar(50, 40, 0.1, 0.01, 0.02);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(1.0, 49.0);
    std::uniform_real_distribution<double> uy(1.0, 39.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        EXPECT_NEAR(sample_bilinear(img, x, y), 0.1 + 0.01 * x + 0.02 * y, 1e-12);
    }
}

TEST(ExtractPatch, ZeroPaddingOutsideFrame)
{
    const GrayImage img(64, 64, 0.5);
    // Left half of the patch falls off the frame.
    const auto raw = sample_patch(img, state_from_box({-16, 16, 32, 32}), {32, 32});
    for (int r = 0; r < kPatchSide; ++r) {
        for (int c = 0; c < kPatchSide; ++c) {
            const double v = raw(r * kPatchSide + c);
            if (c < 16) {
                EXPECT_EQ(v, 0.0);
            } else {
                EXPECT_DOUBLE_EQ(v, 0.5);
            }
        }
    }
}

TEST(ExtractPatch, UnitNormUnderRandomWarps)
{
    const auto frame = testing_support::textured_frame(200, 150, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> pos(20.0, 180.0);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    for (int i = 0; i < 200; ++i) {
        const AffineState s{pos(rng), pos(rng) * 0.75, angle(rng), scale(rng), scale(rng),
                            0.2 * angle(rng)};
        EXPECT_NEAR(extract_patch(frame, s, {30, 20}).values().norm(), 1.0, 1e-12);
    }
}

TEST(ExtractPatch, Errors)
{
    const GrayImage img(64, 64, 0.5);
    AffineState s = state_from_box({10, 10, 20, 20});
    s.scale = 0.0;
    EXPECT_EQ(code_of([&] { extract_patch(img, s, {20, 20}); }), ErrorCode::DegenerateWarp);
    const GrayImage black(64, 64, 0.0);
    EXPECT_EQ(code_of([&] { extract_patch(black, state_from_box({10, 10, 20, 20}), {20, 20}); }),
              ErrorCode::ZeroPatch);
    // Entirely outside the frame: only padding.
    EXPECT_EQ(code_of([&] { extract_patch(img, state_from_box({500, 500, 20, 20}), {20, 20}); }),
              ErrorCode::ZeroPatch);
}

TEST(Envelope, AxisAlignedAndRotated)
{
    const BoundingBox box{10, 20, 40, 30};
    EXPECT_EQ(envelope(state_from_box(box), {40, 30}), box);
    AffineState s = state_from_box(box);
    s.theta = std::numbers::pi / 2;
    const auto e = envelope(s, {40, 30});
    EXPECT_NEAR(e.w, 30.0, 1e-9);
    EXPECT_NEAR(e.h, 40.0, 1e-9);
    EXPECT_NEAR(e.center_x(), box.center_x(), 1e-9);
    EXPECT_NEAR(e.center_y(), box.center_y(), 1e-9);
}

TEST(ImageIo, PgmRoundTrip)
{
    const auto dir = scratch_dir("pgm");
    GrayImage img(7, 5);
    for (int i = 0; i < 35; ++i) img.data()[static_cast<std::size_t>(i)] = (i * 7 % 256) / 255.0;
    write_pgm(dir / "a.pgm", img);
    EXPECT_EQ(load_frame(dir / "a.pgm"), img);
}

TEST(ImageIo, SixteenBitPgm)
{
    std::string header = "P5\n# comment\n2 1\n65535\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    for (const std::uint8_t b : {0x00, 0x00, 0xff, 0xff}) bytes.push_back(b);
    const auto img = decode_pgm(bytes);
    EXPECT_EQ(img.width(), 2);
    EXPECT_DOUBLE_EQ(img.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(img.at(1, 0), 1.0);
}

TEST(ImageIo, MalformedInputs)
{
    const std::string truncated = "P5\n4 4\n255\nabc";
    EXPECT_EQ(code_of([&] { decode_pgm({truncated.begin(), truncated.end()}); }),
              ErrorCode::DecodeError);
    const std::string junk = "not an image at all";
    EXPECT_EQ(code_of([&] { decode_rgb({junk.begin(), junk.end()}); }), ErrorCode::DecodeError);
    const auto dir = scratch_dir("bad");
    std::ofstream(dir / "x.png") << junk;
    EXPECT_EQ(code_of([&] { load_frame(dir / "x.png"); }), ErrorCode::DecodeError);
    EXPECT_THROW(load_frame(dir / "missing.png"), Error);
}

TEST(ImageIo, PngAndJpegDecode)
{
    const auto dir = scratch_dir("png");
    cv::Mat bgr(1, 2, CV_8UC3);
    bgr.at<cv::Vec3b>(0, 0) = {0, 0, 255};   // red
    bgr.at<cv::Vec3b>(0, 1) = {255, 0, 0};   // blue
    std::vector<uchar> png;
    ASSERT_TRUE(cv::imencode(".png", bgr, png));
    const auto rgb = decode_rgb({png.begin(), png.end()});
    EXPECT_EQ(rgb.data, (std::vector<std::uint8_t>{255, 0, 0, 0, 0, 255}));
    const auto gray = to_gray(rgb);
    EXPECT_NEAR(gray.at(0, 0), 0.299, 1e-12);
    EXPECT_NEAR(gray.at(1, 0), 0.114, 1e-12);

    GrayImage flat(16, 16, 128 / 255.0);
    write_image(dir / "f.png", flat);
    EXPECT_EQ(load_frame(dir / "f.png"), flat);
    write_image(dir / "f.jpg", flat);
    const auto jpg = load_frame(dir / "f.jpg");
    for (const double v : jpg.data()) EXPECT_NEAR(v, 128 / 255.0, 2.0 / 255.0);
}
