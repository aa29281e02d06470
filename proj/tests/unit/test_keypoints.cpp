#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "siftbench/deform.hpp"
#include "siftbench/errors.hpp"
#include "siftbench/keypoints.hpp"
#include "siftbench/matching.hpp"

using namespace siftbench;

namespace {

GrayImage corpus_image(const char* name) {
  return load_image(std::filesystem::path(SIFTBENCH_CORPUS) / name);
}

DoGPyramid random_dog(int w, int h, int levels, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DoGPyramid dog;
  dog.octaves.assign(1, std::vector<GrayImage>(levels, GrayImage(w, h)));
  for (auto& img : dog.octaves[0])
    for (double& p : img.pixels()) p = u(rng);
  return dog;
}

bool by_position(const RawExtremum& a, const RawExtremum& b) {
  return std::tie(a.octave, a.level, a.y, a.x, a.is_maximum) <
         std::tie(b.octave, b.level, b.y, b.x, b.is_maximum);
}

// Gaussian blob of width `sigma` at the image center.
GrayImage blob(int side, double sigma, bool bright) {
  GrayImage img(side, side);
  const double c = 0.5 * (side - 1);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double v = std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / (2 * sigma * sigma));
      img.at(x, y) = bright ? v : 1.0 - v;
    }
  return img;
}

double norm(const Descriptor& d) {
  return std::sqrt(std::inner_product(d.values.begin(), d.values.end(), d.values.begin(), 0.0));
}

// new(x, y) = old(y, w-1-x): a quarter turn that sends direction 0 deg to
// 90 deg in image coordinates (y pointing down).
GrayImage quarter_turn(const GrayImage& img) {
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = img.at(y, img.width() - 1 - x);
  return out;
}

// Unit norm, non-negative, and the clamp held before renormalizing: the
// largest final value is the clamp divided by the clamped vector's norm.
void expect_descriptor_invariants(const Descriptor& d, const DescriptorAudit& audit) {
  EXPECT_NEAR(norm(d), 1.0, 1e-6);
  EXPECT_LE(audit.max_clamped, 0.2 + 1e-6);
  EXPECT_GT(audit.clamped_norm, 0.0);
  for (double v : d.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 0.2 / audit.clamped_norm + 1e-9);
  }
}

}  // namespace

// --- extrema ---------------------------------------------------------------

TEST(DetectExtrema, ConstantDoGHasNone) {
  const DoGPyramid dog = build_dog_pyramid(build_gaussian_pyramid(GrayImage(40, 40, 0.3)));
  EXPECT_TRUE(detect_extrema(dog).empty());
}

TEST(DetectExtrema, MatchesExhaustiveScanOnRandomVolumes) {
  std::mt19937 rng(11);
  for (int levels : {3, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const DoGPyramid dog = random_dog(16, 16, levels, rng);
      auto got = detect_extrema(dog);
      auto want = oracle::extrema(dog);
      std::sort(got.begin(), got.end(), by_position);
      std::sort(want.begin(), want.end(), by_position);
      ASSERT_EQ(got, want) << "levels=" << levels << " trial=" << trial;
    }
  }
}

TEST(DetectExtrema, MatchesExhaustiveScanOnRealPyramid) {
  const DoGPyramid dog = build_dog_pyramid(build_gaussian_pyramid(corpus_image("coins.pgm")));
  auto got = detect_extrema(dog);
  auto want = oracle::extrema(dog);
  std::sort(got.begin(), got.end(), by_position);
  std::sort(want.begin(), want.end(), by_position);
  EXPECT_FALSE(got.empty());
  EXPECT_EQ(got, want);
}

TEST(DetectExtrema, EveryExtremumPassesStrictAudit) {
  const DoGPyramid dog = build_dog_pyramid(build_gaussian_pyramid(corpus_image("brick.pgm")));
  for (const RawExtremum& e : detect_extrema(dog)) {
    const auto& lv = dog.octaves[e.octave];
    ASSERT_GE(e.level, 1);
    ASSERT_LE(e.level, static_cast<int>(lv.size()) - 2);
    ASSERT_GE(e.x, 1);
    ASSERT_GE(e.y, 1);
    ASSERT_LE(e.x, lv[0].width() - 2);
    ASSERT_LE(e.y, lv[0].height() - 2);
    const double v = lv[e.level].at(e.x, e.y);
    for (int dl = -1; dl <= 1; ++dl)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dl && !dy && !dx) continue;
          const double n = lv[e.level + dl].at(e.x + dx, e.y + dy);
          ASSERT_TRUE(e.is_maximum ? v > n : v < n);
        }
  }
}

// D = L(k sigma) - L(sigma) is negative at the center of a bright blob, so a
// bright blob shows up as a minimum and a dark blob as a maximum.
TEST(DetectExtrema, BlobCenterIsFound) {
  for (bool bright : {true, false}) {
    // Odd side: an even one puts the center between four tied pixels.
    const DoGPyramid dog = build_dog_pyramid(build_gaussian_pyramid(blob(65, 3.0, bright)));
    const auto found = detect_extrema(dog);
    bool near_center = false;
    for (const RawExtremum& e : found) {
      const double s = dog.octave_scale(e.octave);
      const double dx = e.x * s - 32.0;
      const double dy = e.y * s - 32.0;
      if (e.is_maximum != bright && std::hypot(dx, dy) <= 2.0) near_center = true;
    }
    EXPECT_TRUE(near_center) << (bright ? "bright" : "dark");
  }
}

// --- refinement --------------------------------------------------------------

TEST(RefineKeypoint, RecoversKnownQuadraticOffset) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const oracle::QuadraticDoG q = oracle::quadratic_dog(rng);
    const auto r = refine_keypoint(q.dog, {0, 2, 4, 4, true});
    ASSERT_TRUE(r.has_value()) << trial;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r->offset[i], q.offset[i], 1e-9);
    EXPECT_NEAR(r->keypoint.x, 4 + q.offset[0], 1e-9);
    EXPECT_NEAR(r->keypoint.y, 4 + q.offset[1], 1e-9);
    EXPECT_NEAR(r->keypoint.response, q.peak, 1e-9);
    EXPECT_NEAR(r->keypoint.sigma, 1.6 * std::pow(2.0, (2 + q.offset[2]) / 3.0), 1e-9);
  }
}

TEST(RefineKeypoint, SpecificOffset) {
  DoGPyramid dog;
  dog.octaves.assign(1, std::vector<GrayImage>(5, GrayImage(9, 9)));
  const double c[3] = {4.2, 3.7, 2.1};
  for (int l = 0; l < 5; ++l)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x)
        dog.octaves[0][l].at(x, y) =
            0.4 - 0.5 * ((x - c[0]) * (x - c[0]) + 0.8 * (y - c[1]) * (y - c[1]) +
                         0.6 * (l - c[2]) * (l - c[2]));
  const auto r = refine_keypoint(dog, {0, 2, 4, 4, true});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->offset[0], 0.2, 1e-9);
  EXPECT_NEAR(r->offset[1], -0.3, 1e-9);
  EXPECT_NEAR(r->offset[2], 0.1, 1e-9);
}

TEST(RefineKeypoint, MovesToAdjacentSample) {
  DoGPyramid dog;
  dog.octaves.assign(1, std::vector<GrayImage>(5, GrayImage(12, 12)));
  const double c[3] = {6.3, 4.0, 2.0};
  for (int l = 0; l < 5; ++l)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x)
        dog.octaves[0][l].at(x, y) =
            0.4 - 0.5 * ((x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) +
                         (l - c[2]) * (l - c[2]));
  const auto r = refine_keypoint(dog, {0, 2, 5, 4, true});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->sample_x, 6);
  EXPECT_NEAR(r->offset[0], 0.3, 1e-9);
  EXPECT_NEAR(r->keypoint.x, 6.3, 1e-9);
}

TEST(RefineKeypoint, OctaveScalesCoordinates) {
  std::mt19937 rng(3);
  oracle::QuadraticDoG q = oracle::quadratic_dog(rng);
  DoGPyramid dog = q.dog;
  dog.octaves.insert(dog.octaves.begin(), std::vector<GrayImage>(5, GrayImage(18, 18)));
  const auto r = refine_keypoint(dog, {1, 2, 4, 4, true});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->keypoint.x, 2 * (4 + q.offset[0]), 1e-9);
  EXPECT_NEAR(r->keypoint.sigma, 2 * 1.6 * std::pow(2.0, (2 + q.offset[2]) / 3.0), 1e-9);
  EXPECT_EQ(r->keypoint.octave, 1);
}

TEST(RefineKeypoint, LowContrastRejected) {
  std::mt19937 rng(8);
  oracle::QuadraticDoG q = oracle::quadratic_dog(rng, 0.001);
  // Shrink the curvature too so the fit stays at the same sample.
  for (auto& img : q.dog.octaves[0])
    for (double& p : img.pixels()) p = 0.001 + (p - 0.001) * 0.001;
  EXPECT_FALSE(refine_keypoint(q.dog, {0, 2, 4, 4, true}));
  DetectorParams loose;
  loose.contrast_threshold = 0.0005;
  EXPECT_TRUE(refine_keypoint(q.dog, {0, 2, 4, 4, true}, loose));
}

TEST(RefineKeypoint, EdgeTest) {
  auto make = [](double ax, double ay) {
    DoGPyramid dog;
    dog.octaves.assign(1, std::vector<GrayImage>(5, GrayImage(9, 9)));
    for (int l = 0; l < 5; ++l)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x)
          dog.octaves[0][l].at(x, y) =
              0.5 - 0.5 * (ax * (x - 4) * (x - 4) + ay * (y - 4) * (y - 4) + (l - 2) * (l - 2));
    return dog;
  };
  const auto iso = refine_keypoint(make(1.0, 1.0), {0, 2, 4, 4, true});
  ASSERT_TRUE(iso);  // tr^2/det = 4 < 12.1
  EXPECT_NEAR((iso->dxx + iso->dyy) * (iso->dxx + iso->dyy) /
                  (iso->dxx * iso->dyy - iso->dxy * iso->dxy),
              4.0, 1e-12);
  EXPECT_TRUE(refine_keypoint(make(1.0, 0.2), {0, 2, 4, 4, true}));   // ratio 5
  EXPECT_FALSE(refine_keypoint(make(1.0, 0.05), {0, 2, 4, 4, true}));  // ratio 20
  EXPECT_FALSE(refine_keypoint(make(1.0, -0.5), {0, 2, 4, 4, true}));  // saddle
}

TEST(RefineKeypoint, SingularHessianRejected) {
  DoGPyramid dog;
  dog.octaves.assign(1, std::vector<GrayImage>(5, GrayImage(9, 9, 0.5)));
  EXPECT_FALSE(refine_keypoint(dog, {0, 2, 4, 4, true}));
}

TEST(RefineKeypoint, AcceptedPointsSatisfyAudits) {
  const DetectorParams params;
  const DoGPyramid dog = build_dog_pyramid(build_gaussian_pyramid(corpus_image("coffee.pgm")));
  int accepted = 0;
  for (const RawExtremum& e : detect_extrema(dog)) {
    const auto r = refine_keypoint(dog, e, params);
    if (!r) continue;
    ++accepted;
    for (double o : r->offset) ASSERT_LE(std::abs(o), 0.5 + 1e-9);
    ASSERT_GE(r->keypoint.response, params.contrast_threshold);
    const double tr = r->dxx + r->dyy;
    const double det = r->dxx * r->dyy - r->dxy * r->dxy;
    ASSERT_GT(det, 0.0);
    ASSERT_LT(tr * tr / det, 12.1);
    ASSERT_GT(r->keypoint.sigma, 0.0);
  }
  EXPECT_GT(accepted, 50);
}

// --- gradients and orientation -------------------------------------------

TEST(ComputeGradient, Examples) {
  GrayImage img(3, 3, 0.5);
  img.at(2, 1) = 0.6;
  img.at(0, 1) = 0.4;
  Gradient g = compute_gradient(img, 1, 1);
  EXPECT_NEAR(g.magnitude, 0.2, 1e-12);
  EXPECT_NEAR(g.orientation, 0.0, 1e-9);

  img = GrayImage(3, 3, 0.5);
  img.at(1, 2) = 0.6;
  img.at(1, 0) = 0.4;
  g = compute_gradient(img, 1, 1);
  EXPECT_NEAR(g.magnitude, 0.2, 1e-12);
  EXPECT_NEAR(g.orientation, 90.0, 1e-9);

  g = compute_gradient(GrayImage(3, 3, 0.5), 1, 1);
  EXPECT_EQ(g.magnitude, 0.0);
  EXPECT_EQ(g.orientation, 0.0);
}

TEST(ComputeGradient, RangeChecks) {
  const GrayImage img(5, 4);
  EXPECT_THROW(compute_gradient(img, 0, 1), ArgumentError);
  EXPECT_THROW(compute_gradient(img, 4, 1), ArgumentError);
  EXPECT_THROW(compute_gradient(img, 1, 3), ArgumentError);
  EXPECT_NO_THROW(compute_gradient(img, 3, 2));
}

TEST(ComputeGradient, OrientationAlwaysInRange) {
  const GrayImage img = oracle::random_image(30, 30, 9);
  for (int y = 1; y < 29; ++y)
    for (int x = 1; x < 29; ++x) {
      const Gradient g = compute_gradient(img, x, y);
      ASSERT_GE(g.magnitude, 0.0);
      ASSERT_GE(g.orientation, 0.0);
      ASSERT_LT(g.orientation, 360.0);
    }
}

namespace {

GaussianPyramid pyramid_of(const GrayImage& img) { return build_gaussian_pyramid(img); }

Keypoint center_keypoint(double side, double sigma = 1.6) {
  Keypoint kp;
  kp.x = kp.y = 0.5 * (side - 1);
  kp.sigma = sigma;
  return kp;
}

}  // namespace

TEST(AssignOrientations, RampGivesSingleOrientation) {
  GrayImage ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = x / 64.0;
  const auto out = assign_orientations(pyramid_of(ramp), center_keypoint(64));
  ASSERT_EQ(out.size(), 1u);
  const double phi = out[0].orientation;
  EXPECT_LE(std::min(phi, 360.0 - phi), 5.0);
}

TEST(AssignOrientations, RotatedRampFollowsGradient) {
  for (double deg : {30.0, 135.0, 250.0}) {
    GrayImage ramp(64, 64);
    const double c = std::cos(deg * M_PI / 180), s = std::sin(deg * M_PI / 180);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) ramp.at(x, y) = 0.5 + (c * (x - 32) + s * (y - 32)) / 128;
    const auto out = assign_orientations(pyramid_of(ramp), center_keypoint(64));
    ASSERT_EQ(out.size(), 1u);
    const double d = std::abs(out[0].orientation - deg);
    EXPECT_LE(std::min(d, 360 - d), 5.0) << deg;
  }
}

// I = max(x - cx, y - cy): gradient (1, 0) on one side of the diagonal and
// (0, 1) on the other, mirror-symmetric so both populations weigh the same.
// The image is used unblurred so the diagonal ridge stays one pixel wide.
TEST(AssignOrientations, TwoPerpendicularPopulations) {
  GrayImage img(65, 65);
  for (int y = 0; y < 65; ++y)
    for (int x = 0; x < 65; ++x) img.at(x, y) = 0.5 + std::max(x - 32, y - 32) / 128.0;
  GaussianPyramid gp;
  gp.octaves = {std::vector<GrayImage>(6, img)};
  const auto out = assign_orientations(gp, center_keypoint(65, 2.5));
  ASSERT_EQ(out.size(), 2u);
  const double sep = std::abs(out[1].orientation - out[0].orientation);
  EXPECT_NEAR(std::min(sep, 360 - sep), 90.0, 10.0);
}

TEST(AssignOrientations, PeakRatioOneKeepsOnlyTheMaximum) {
  DetectorParams params;
  params.peak_ratio = 1.0;
  GrayImage ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = y / 64.0;
  EXPECT_EQ(assign_orientations(pyramid_of(ramp), center_keypoint(64), params).size(), 1u);

  const GrayImage natural = corpus_image("grass.pgm");
  const GaussianPyramid gp = pyramid_of(natural);
  for (int i = 0; i < 20; ++i) {
    Keypoint kp = center_keypoint(512, 3.0);
    kp.x = 100 + 15 * i;
    EXPECT_LE(assign_orientations(gp, kp, params).size(), 1u);
  }
}

TEST(AssignOrientations, FlatPatchHasNoOrientation) {
  EXPECT_TRUE(assign_orientations(pyramid_of(GrayImage(64, 64, 0.5)), center_keypoint(64)).empty());
}

// --- descriptors -------------------------------------------------------------

TEST(ComputeDescriptor, QuarterTurnWithMatchingOrientation) {
  const GrayImage patch = oracle::smooth_texture(64, 64, 21, 1.5);
  const GaussianPyramid gp = pyramid_of(patch);
  const GaussianPyramid gp_rot = pyramid_of(quarter_turn(patch));
  for (double sigma : {2.0, 3.0}) {
    Keypoint kp = center_keypoint(64, sigma);
    const auto d0 = compute_descriptor(gp, kp);
    kp.orientation = 90.0;
    const auto d90 = compute_descriptor(gp_rot, kp);
    ASSERT_TRUE(d0 && d90);
    EXPECT_LT(descriptor_distance(*d0, *d90), 0.15) << sigma;
  }
}

TEST(ComputeDescriptor, Invariants) {
  const GrayImage patch = oracle::smooth_texture(64, 64, 4, 1.5);
  const GaussianPyramid gp = pyramid_of(patch);
  for (double phi = 0; phi < 360; phi += 17) {
    Keypoint kp = center_keypoint(64, 2.5);
    kp.orientation = phi;
    DescriptorAudit audit;
    const auto d = compute_descriptor(gp, kp, &audit);
    ASSERT_TRUE(d);
    EXPECT_EQ(compute_descriptor(gp, kp), d);
    expect_descriptor_invariants(*d, audit);
  }
}

TEST(ComputeDescriptor, RejectsFlatPatchAndOutOfBounds) {
  EXPECT_FALSE(compute_descriptor(pyramid_of(GrayImage(64, 64, 0.2)), center_keypoint(64)));
  const GaussianPyramid gp = pyramid_of(oracle::smooth_texture(64, 64, 6));
  Keypoint kp = center_keypoint(64, 2.0);
  kp.x = 5;
  EXPECT_FALSE(compute_descriptor(gp, kp));
  kp = center_keypoint(64, 6.0);  // window of 16 * 0.75 * 6 = 72 px
  EXPECT_FALSE(compute_descriptor(gp, kp));
}

// --- pipeline ------------------------------------------------------------

TEST(DetectAndDescribe, ConstantImageIsEmpty) {
  EXPECT_TRUE(detect_and_describe(GrayImage(64, 64, 0.5)).empty());
}

TEST(DetectAndDescribe, NaturalImageInvariants) {
  const GrayImage img = corpus_image("camera.pgm");
  const GaussianPyramid gp = build_gaussian_pyramid(img);
  const auto features = detect_and_describe(img);
  ASSERT_GT(features.size(), 100u);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Keypoint& k = features[i].keypoint;
    EXPECT_GT(k.sigma, 0.0);
    EXPECT_GE(k.orientation, 0.0);
    EXPECT_LT(k.orientation, 360.0);
    EXPECT_GE(k.response, 0.03);
    EXPECT_GE(k.x, 0.0);
    EXPECT_GE(k.y, 0.0);
    EXPECT_LE(k.x, img.width() - 1.0);
    EXPECT_LE(k.y, img.height() - 1.0);
    DescriptorAudit audit;
    const auto again = compute_descriptor(gp, k, &audit);
    ASSERT_TRUE(again);
    EXPECT_EQ(*again, features[i].descriptor);
    expect_descriptor_invariants(features[i].descriptor, audit);
    if (i > 0) {
      const Keypoint& p = features[i - 1].keypoint;
      EXPECT_LE(std::tie(p.octave, p.level, p.y, p.x, p.orientation),
                std::tie(k.octave, k.level, k.y, k.x, k.orientation));
    }
  }
}

TEST(DetectAndDescribe, Deterministic) {
  const GrayImage img = corpus_image("hopper.pgm");
  EXPECT_EQ(detect_and_describe(img), detect_and_describe(img));
}

TEST(DetectAndDescribe, QuarterTurnShiftsOrientationByNinety) {
  const GrayImage img = corpus_image("astronaut.pgm");
  const auto a = detect_and_describe(img);
  const auto b = detect_and_describe(rotate(img, 90.0));
  const MatchResult m = match_descriptors(a, b);
  ASSERT_GT(m.matches.size(), 50u);
  std::size_t near = 0;
  for (const Match& match : m.matches)
    if (std::abs(match.delta_phi - 90.0) <= 11.25) ++near;
  EXPECT_GE(static_cast<double>(near) / m.matches.size(), 0.6);
}

// --- keypoint files ----------------------------------------------------------

TEST(KeypointFile, RoundTripEqualsQuantized) {
  const auto features = detect_and_describe(corpus_image("coins.pgm"));
  std::stringstream buf;
  write_features(buf, features);
  const std::string text = buf.str();
  EXPECT_EQ(text.rfind("# sift-bench keypoints v1 count=" + std::to_string(features.size()) + "\n", 0), 0u);
  const auto back = read_features(buf);
  ASSERT_EQ(back.size(), features.size());
  auto expected = quantize_features(features);
  for (auto& f : expected) f.keypoint.octave = f.keypoint.level = 0;
  EXPECT_EQ(back, expected);
  // Writing the read-back set reproduces the file byte for byte.
  std::stringstream again;
  write_features(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(KeypointFile, MalformedInputs) {
  std::istringstream no_header("1 2 3\n");
  EXPECT_THROW(read_features(no_header), FormatError);
  std::istringstream short_line("# sift-bench keypoints v1 count=1\n1 2 3 4 5\n");
  EXPECT_THROW(read_features(short_line), FormatError);
  std::istringstream wrong_count("# sift-bench keypoints v1 count=2\n");
  EXPECT_THROW(read_features(wrong_count), FormatError);
  std::istringstream empty("# sift-bench keypoints v1 count=0\n");
  EXPECT_TRUE(read_features(empty).empty());
  EXPECT_THROW(load_features("/nonexistent/file.kp"), IoError);
}

TEST(DetectorParams, Validation) {
  DetectorParams p;
  EXPECT_NO_THROW(p.validate());
  p.peak_ratio = 1.5;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.contrast_threshold = 0;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.orientation_bins = 0;
  EXPECT_THROW(p.validate(), ArgumentError);
}
