#pragma once

#include <filesystem>
#include <vector>

#include "siftbench/image.hpp"

namespace siftbench {

struct PyramidParams {
  int intervals = 3;              // s, scales sampled per octave
  double base_sigma = 1.6;        // blur of the first image of every octave
  double assumed_input_blur = 0.5;
  bool initial_doubling = false;  // upsample the input 2x before octave 0
  int min_dimension = 16;         // smallest octave side that is still built

  /// Ratio between consecutive blur levels, 2^(1/s).
  double k() const;
  /// Throws ArgumentError when the invariants do not hold.
  void validate() const;
};

/// Octaves of s+3 progressively blurred images. Octave o+1 has half the
/// resolution of octave o.
struct GaussianPyramid {
  PyramidParams params;
  std::vector<std::vector<GrayImage>> octaves;

  /// Blur of level i relative to its octave's sampling grid: sigma0 * k^i.
  double level_sigma(int level) const;
  /// Pixel spacing of an octave in input-image pixels.
  double octave_scale(int octave) const;
};

/// Octaves of s+2 differences of adjacent Gaussian levels.
struct DoGPyramid {
  PyramidParams params;
  std::vector<std::vector<GrayImage>> octaves;

  double octave_scale(int octave) const;
};

GaussianPyramid build_gaussian_pyramid(const GrayImage& img,
                                       const PyramidParams& params = {});

DoGPyramid build_dog_pyramid(const GaussianPyramid& gp);

/// Writes every level as o{octave}_s{level}.pgm under `dir`.
void dump_pyramid(const GaussianPyramid& gp, const std::filesystem::path& dir);
/// DoG levels are affinely mapped to 0..255 per image.
void dump_pyramid(const DoGPyramid& dog, const std::filesystem::path& dir);

}  // namespace siftbench
