#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "siftbench/image.hpp"
#include "siftbench/scale_space.hpp"

namespace siftbench {

struct DetectorParams {
  double contrast_threshold = 0.03;  // on [0,1] intensities
  double edge_ratio = 10.0;          // max ratio of principal curvatures
  int max_refine_iterations = 5;
  int orientation_bins = 36;
  double peak_ratio = 0.8;  // secondary orientation peaks relative to max

  void validate() const;
};

/// A DoG sample that is strictly above or below all 26 scale-space neighbors.
struct RawExtremum {
  int octave = 0;
  int level = 0;  // DoG level, never the first or last of the octave
  int x = 0;      // octave pixel coordinates
  int y = 0;
  bool is_maximum = false;

  bool operator==(const RawExtremum&) const = default;
};

struct Keypoint {
  double x = 0.0;  // input-image pixels
  double y = 0.0;
  double sigma = 0.0;        // absolute scale in input-image pixels
  double orientation = 0.0;  // degrees in [0, 360)
  double response = 0.0;     // |D| at the interpolated extremum
  int octave = 0;
  int level = 0;

  bool operator==(const Keypoint&) const = default;
};

/// Refinement result plus the quantities needed to audit the acceptance
/// tests after the fact.
struct RefinedKeypoint {
  Keypoint keypoint;              // orientation not yet assigned
  std::array<double, 3> offset{};  // final (x, y, level) offset, |.| <= 0.5
  int sample_x = 0;               // integer sample the fit converged at
  int sample_y = 0;
  double dxx = 0.0;  // spatial Hessian at the converged sample
  double dyy = 0.0;
  double dxy = 0.0;
};

struct Descriptor {
  std::array<double, 128> values{};

  bool operator==(const Descriptor&) const = default;
};

struct Feature {
  Keypoint keypoint;
  Descriptor descriptor;

  bool operator==(const Feature&) const = default;
};

struct Gradient {
  double magnitude = 0.0;
  double orientation = 0.0;  // degrees in [0, 360); 0 when magnitude is 0
};

std::vector<RawExtremum> detect_extrema(const DoGPyramid& dog);

/// Fits a 3-D quadratic around `e`, moving to a neighboring sample while
/// any offset component exceeds 0.5. Returns nullopt for unstable points:
/// no convergence, low contrast, edge-like curvature, singular Hessian.
std::optional<RefinedKeypoint> refine_keypoint(const DoGPyramid& dog,
                                               const RawExtremum& e,
                                               const DetectorParams& params = {});

/// Central pixel differences. Requires 1 <= x <= w-2 and 1 <= y <= h-2.
Gradient compute_gradient(const GrayImage& img, int x, int y);

/// Index of the Gaussian level whose blur is closest to the keypoint scale.
int nearest_gaussian_level(const GaussianPyramid& gp, const Keypoint& kp);

/// One keypoint per dominant gradient direction around `kp`.
std::vector<Keypoint> assign_orientations(const GaussianPyramid& gp,
                                          const Keypoint& kp,
                                          const DetectorParams& params = {});

/// Intermediate values of the clamp-and-renormalize step.
struct DescriptorAudit {
  double max_clamped = 0.0;   // largest component after clamping, before renormalizing
  double clamped_norm = 0.0;  // norm of the clamped vector
};

/// 4x4 spatial cells x 8 orientation bins over a 16x16 rotated sample grid.
/// Returns nullopt when the grid leaves the image or has no gradient.
std::optional<Descriptor> compute_descriptor(const GaussianPyramid& gp,
                                             const Keypoint& kp,
                                             DescriptorAudit* audit = nullptr);

/// Full pipeline. Output is sorted by (octave, level, y, x, orientation).
std::vector<Feature> detect_and_describe(const GrayImage& img,
                                         const PyramidParams& pyramid = {},
                                         const DetectorParams& detector = {});

// Keypoint text files: header "# sift-bench keypoints v1 count=N", then one
// line per feature "x y sigma phi response d0 ... d127" with 6 significant
// digits. Octave and level are not stored and read back as 0.

void write_features(std::ostream& out, const std::vector<Feature>& features);
std::vector<Feature> read_features(std::istream& in);
void save_features(const std::vector<Feature>& features,
                   const std::filesystem::path& path);
std::vector<Feature> load_features(const std::filesystem::path& path);

/// Rounds every stored value to what the text format would hold, so that
/// features matched in memory and features read from disk agree exactly.
std::vector<Feature> quantize_features(std::vector<Feature> features);

}  // namespace siftbench
