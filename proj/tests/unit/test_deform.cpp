#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "siftbench/deform.hpp"
#include "siftbench/errors.hpp"

using namespace siftbench;

namespace {

GrayImage natural() {
  return load_image(std::filesystem::path(SIFTBENCH_CORPUS) / "coffee.pgm");
}

double mean(const GrayImage& img) {
  const auto px = img.pixels();
  return std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
}

double mean_abs_diff(const GrayImage& a, const GrayImage& b, int x0, int y0, int x1, int y1) {
  double sum = 0.0;
  int n = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x, ++n) sum += std::abs(a.at(x, y) - b.at(x, y));
  return sum / n;
}

void expect_unit_range(const GrayImage& img) {
  for (double p : img.pixels()) {
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
  }
}

// Source radius the fisheye map assigns to normalized radius rho.
double fisheye_map(double rho, double beta) { return rho * (1 + beta * rho * rho) / (1 + beta); }

}  // namespace

// --- spec strings ----------------------------------------------------------

TEST(Deformation, ParsesEveryKind) {
  EXPECT_EQ(Deformation::parse("rot:90"), (Deformation{DeformationKind::rotation, 90, 0}));
  EXPECT_EQ(Deformation::parse("rot:-30.5"), (Deformation{DeformationKind::rotation, -30.5, 0}));
  EXPECT_EQ(Deformation::parse("scale:2.0"), (Deformation{DeformationKind::scaling, 2, 0}));
  EXPECT_EQ(Deformation::parse("fisheye:0"), (Deformation{DeformationKind::fisheye, 0, 0}));
  EXPECT_EQ(Deformation::parse("blur:30"), (Deformation{DeformationKind::motion_blur, 30, 0}));
  EXPECT_EQ(Deformation::parse("blur:30@45"), (Deformation{DeformationKind::motion_blur, 30, 45}));
}

TEST(Deformation, CanonicalStringsRoundTrip) {
  for (const char* spec : {"rot:90", "rot:-12.25", "scale:0.5", "scale:2", "fisheye:1",
                           "blur:30", "blur:7@45"}) {
    const Deformation d = Deformation::parse(spec);
    EXPECT_EQ(d.to_string(), spec);
    EXPECT_EQ(Deformation::parse(d.to_string()), d);
  }
  EXPECT_EQ(Deformation::parse("scale:2.0").to_string(), "scale:2");
}

TEST(Deformation, ErrorsNameTheToken) {
  const std::pair<const char*, const char*> cases[] = {
      {"blur:0", "'0'"},          {"blur:2.5", "'2.5'"}, {"scale:0", "'0'"},
      {"scale:-1", "'-1'"},       {"fisheye:-0.5", "'-0.5'"}, {"rot:abc", "'abc'"},
      {"twist:3", "'twist'"},     {"rot", "expected"},   {"rot:", "''"},
      {"blur:5@x", "'x'"},        {"rot:1e999", "'1e999'"}};
  for (const auto& [spec, token] : cases) {
    try {
      Deformation::parse(spec);
      ADD_FAILURE() << spec << " parsed";
    } catch (const ArgumentError& e) {
      EXPECT_NE(std::string(e.what()).find(token), std::string::npos) << spec << ": " << e.what();
    }
  }
}

// --- rotation ----------------------------------------------------------------

TEST(Rotate, ZeroAndFullTurnAreIdentity) {
  const GrayImage img = oracle::random_image(17, 11, 1);
  EXPECT_EQ(rotate(img, 0), img);
  const GrayImage full = rotate(img, 360);
  ASSERT_EQ(full.width(), 17);
  ASSERT_EQ(full.height(), 11);
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_NEAR(full.pixels()[i], img.pixels()[i], 1e-9);
}

TEST(Rotate, QuarterTurnIsPermutation) {
  const GrayImage img = oracle::random_image(7, 4, 2);
  const GrayImage r = rotate(img, 90);
  ASSERT_EQ(r.width(), 4);
  ASSERT_EQ(r.height(), 7);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(r.at(4 - 1 - y, x), img.at(x, y));
  // Four quarter turns and a half turn are exact too.
  EXPECT_EQ(rotate(rotate(rotate(r, 90), 90), 90), img);
  const GrayImage half = rotate(img, 180);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(half.at(6 - x, 3 - y), img.at(x, y));
}

TEST(Rotate, CanvasIsBoundingBoxWithZeroCorners) {
  const GrayImage img(100, 50, 1.0);
  const GrayImage r = rotate(img, 45);
  const double c = std::cos(M_PI / 4);
  EXPECT_EQ(r.width(), static_cast<int>(std::ceil((99 + 49) * c - 1e-9)) + 1);
  EXPECT_EQ(r.width(), r.height());
  EXPECT_EQ(r.at(0, 0), 0.0);
  EXPECT_EQ(r.at(r.width() - 1, r.height() - 1), 0.0);
  EXPECT_NEAR(r.at(r.width() / 2, r.height() / 2), 1.0, 1e-12);
  expect_unit_range(r);
}

TEST(Rotate, ForwardAndBackRecoversCenter) {
  const GrayImage img = natural();
  for (double theta : {30.0, 45.0, 77.0}) {
    const GrayImage back = rotate(rotate(img, theta), -theta);
    // Crop the result back onto the source frame, then compare the inscribed
    // central square that never touched the zero fill.
    const int ox = (back.width() - img.width()) / 2;
    const int oy = (back.height() - img.height()) / 2;
    GrayImage crop(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) crop.at(x, y) = back.at(x + ox, y + oy);
    const int m = img.width() / 4;
    EXPECT_LT(mean_abs_diff(crop, img, m, m, img.width() - m, img.height() - m), 0.05) << theta;
  }
}

// --- scaling -----------------------------------------------------------------

TEST(Scale, IdentityAndShape) {
  const GrayImage img = oracle::random_image(9, 5, 3);
  EXPECT_EQ(scale(img, 1.0), img);
  const GrayImage up = scale(img, 2.0);
  EXPECT_EQ(up.width(), 18);
  EXPECT_EQ(up.height(), 10);
  const GrayImage odd = scale(img, 1.5);
  EXPECT_EQ(odd.width(), 14);  // round(13.5)
  EXPECT_EQ(odd.height(), 8);  // round(7.5)
}

TEST(Scale, DoublingSamplesQuarterPixelOffsets) {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = 0.1 * x + 0.01 * y;
  const GrayImage up = scale(img, 2.0);
  ASSERT_EQ(up.width(), 8);
  // x_src = (x + 0.5) / 2 - 0.5: output 3 -> 1.25, output 4 -> 1.75.
  EXPECT_NEAR(up.at(3, 2), 0.125 + 0.0075, 1e-12);
  EXPECT_NEAR(up.at(4, 2), 0.175 + 0.0075, 1e-12);
  // Clamped at the border: output 0 -> -0.25 -> 0.
  EXPECT_NEAR(up.at(0, 0), 0.0, 1e-12);
}

TEST(Scale, UpThenDownRoundTrip) {
  const GrayImage img = natural();
  const GrayImage back = scale(scale(img, 2.0), 0.5);
  ASSERT_EQ(back.width(), img.width());
  EXPECT_LT(mean_abs_diff(back, img, 0, 0, img.width(), img.height()), 0.05);
}

TEST(Scale, Errors) {
  const GrayImage img(10, 10);
  EXPECT_THROW(scale(img, 0.0), ArgumentError);
  EXPECT_THROW(scale(img, -1.0), ArgumentError);
  EXPECT_THROW(scale(img, 0.01), ArgumentError);
}

// --- fisheye -----------------------------------------------------------------

TEST(Fisheye, ZeroStrengthIsIdentity) {
  const GrayImage img = oracle::random_image(21, 13, 4);
  const GrayImage out = fisheye(img, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_NEAR(out.pixels()[i], img.pixels()[i], 1e-12);
}

TEST(Fisheye, CenterAndCornersFixed) {
  const GrayImage img = oracle::random_image(21, 21, 5);
  for (double beta : {0.5, 1.0, 2.0, 10.0}) {
    const GrayImage out = fisheye(img, beta);
    EXPECT_NEAR(out.at(10, 10), img.at(10, 10), 1e-12);
    EXPECT_NEAR(out.at(0, 0), img.at(0, 0), 1e-9);
    EXPECT_NEAR(out.at(20, 20), img.at(20, 20), 1e-9);
    EXPECT_NEAR(out.at(20, 0), img.at(20, 0), 1e-9);
  }
}

TEST(Fisheye, RadialMapMonotoneAndMagnifying) {
  for (double beta : {0.0, 0.1, 1.0, 2.0, 50.0}) {
    double previous = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double rho = i / 1000.0;
      const double src = fisheye_map(rho, beta);
      EXPECT_GT(src, previous);
      if (beta > 0 && i > 0 && i < 1000) EXPECT_LT(src, rho);
      previous = src;
    }
    EXPECT_NEAR(fisheye_map(1.0, beta), 1.0, 1e-15);
  }
}

// A horizontal ramp through the fisheye stays monotone along the center row:
// the observable effect of a fold-free radial map.
TEST(Fisheye, ImageRowStaysMonotone) {
  GrayImage ramp(101, 61);
  for (int y = 0; y < 61; ++y)
    for (int x = 0; x < 101; ++x) ramp.at(x, y) = x / 100.0;
  for (double beta : {1.0, 2.0, 8.0}) {
    const GrayImage out = fisheye(ramp, beta);
    for (int x = 1; x < 101; ++x) EXPECT_GT(out.at(x, 30), out.at(x - 1, 30));
    // Center magnified: the slope at the center is shallower than the input's.
    EXPECT_LT(out.at(51, 30) - out.at(49, 30), ramp.at(51, 30) - ramp.at(49, 30));
  }
}

TEST(Fisheye, NegativeStrengthThrows) {
  EXPECT_THROW(fisheye(GrayImage(5, 5), -0.1), ArgumentError);
}

// --- motion blur -------------------------------------------------------------

TEST(MotionBlur, UnitLengthIsIdentity) {
  const GrayImage img = oracle::random_image(12, 9, 6);
  EXPECT_EQ(motion_blur(img, 1), img);
  EXPECT_EQ(motion_blur(img, 1, 33.0), img);
}

TEST(MotionBlur, ConstantImageUnchanged) {
  const GrayImage img(20, 15, 0.37);
  for (int len : {2, 5, 30})
    for (double angle : {0.0, 45.0, 90.0, 200.0}) {
      const GrayImage out = motion_blur(img, len, angle);
      for (double p : out.pixels()) ASSERT_NEAR(p, 0.37, 1e-12);
    }
}

TEST(MotionBlur, ImpulseResponse) {
  GrayImage img(21, 11);
  img.at(10, 5) = 1.0;
  const GrayImage h = motion_blur(img, 5, 0.0);
  for (int x = 0; x < 21; ++x)
    for (int y = 0; y < 11; ++y) {
      const bool streak = y == 5 && std::abs(x - 10) <= 2;
      EXPECT_NEAR(h.at(x, y), streak ? 0.2 : 0.0, 1e-12) << x << "," << y;
    }
  const GrayImage v = motion_blur(img, 5, 90.0);
  for (int y = 3; y <= 7; ++y) EXPECT_NEAR(v.at(10, y), 0.2, 1e-12);
  EXPECT_EQ(v.at(11, 5), 0.0);
}

TEST(MotionBlur, EvenLengthSplitsAcrossPixels) {
  GrayImage img(11, 3);
  img.at(5, 1) = 1.0;
  const GrayImage out = motion_blur(img, 2, 0.0);  // offsets -0.5 and +0.5
  EXPECT_NEAR(out.at(4, 1), 0.25, 1e-12);
  EXPECT_NEAR(out.at(5, 1), 0.5, 1e-12);
  EXPECT_NEAR(out.at(6, 1), 0.25, 1e-12);
}

TEST(MotionBlur, PreservesMean) {
  const GrayImage img = natural();
  for (int len : {10, 30})
    for (double angle : {0.0, 30.0})
      EXPECT_NEAR(mean(motion_blur(img, len, angle)), mean(img), 1e-3) << len << "@" << angle;
}

// --- common properties -------------------------------------------------------

TEST(Deformations, PreserveUnitRange) {
  const GrayImage img = oracle::random_image(40, 30, 7);
  for (const char* spec : {"rot:33", "rot:90", "scale:0.7", "scale:2.5", "fisheye:1",
                           "fisheye:2", "blur:9", "blur:9@120"})
    expect_unit_range(apply(Deformation::parse(spec), img));
}

TEST(Deformations, ApplyDispatches) {
  const GrayImage img = oracle::random_image(16, 12, 8);
  EXPECT_EQ(apply(Deformation::parse("rot:90"), img), rotate(img, 90));
  EXPECT_EQ(apply(Deformation::parse("scale:2"), img), scale(img, 2));
  EXPECT_EQ(apply(Deformation::parse("fisheye:1"), img), fisheye(img, 1));
  EXPECT_EQ(apply(Deformation::parse("blur:4@30"), img), motion_blur(img, 4, 30));
}
