#include "siftbench/scale_space.hpp"

#include <cmath>
#include <string>

#include "siftbench/errors.hpp"

namespace siftbench {

double PyramidParams::k() const { return std::exp2(1.0 / intervals); }

void PyramidParams::validate() const {
  if (intervals < 1) throw ArgumentError("intervals per octave must be >= 1");
  if (!(base_sigma > 0.0)) throw ArgumentError("base sigma must be > 0");
  if (!(assumed_input_blur >= 0.0))
    throw ArgumentError("assumed input blur must be >= 0");
  const double input_blur =
      assumed_input_blur * (initial_doubling ? 2.0 : 1.0);
  if (!(base_sigma > input_blur))
    throw ArgumentError("base sigma must exceed the assumed input blur");
  if (min_dimension < 3)
    throw ArgumentError("min dimension must be >= 3 for extrema detection");
}

double GaussianPyramid::level_sigma(int level) const {
  return params.base_sigma * std::pow(params.k(), level);
}

namespace {

double scale_of(const PyramidParams& params, int octave) {
  return std::ldexp(1.0, octave) * (params.initial_doubling ? 0.5 : 1.0);
}

}  // namespace

double GaussianPyramid::octave_scale(int octave) const {
  return scale_of(params, octave);
}

double DoGPyramid::octave_scale(int octave) const {
  return scale_of(params, octave);
}

GaussianPyramid build_gaussian_pyramid(const GrayImage& img,
                                       const PyramidParams& params) {
  params.validate();
  if (img.width() < params.min_dimension || img.height() < params.min_dimension)
    throw SizeError("image " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " is below the minimum " +
                    std::to_string(params.min_dimension) + " pixels per side");

  GaussianPyramid gp{params, {}};
  const int levels = params.intervals + 3;
  const double k = params.k();

  double input_blur = params.assumed_input_blur;
  GrayImage base = img;
  if (params.initial_doubling) {
    base = upsample2(img);
    input_blur *= 2.0;
  }
  base = gaussian_blur(base, std::sqrt(params.base_sigma * params.base_sigma -
                                       input_blur * input_blur));

  // Incremental blur taking level i (sigma0 k^i) to level i+1 (sigma0 k^(i+1)).
  std::vector<Kernel1D> increments;
  for (int i = 0; i + 1 < levels; ++i)
    increments.push_back(gaussian_kernel(params.base_sigma * std::pow(k, i) *
                                         std::sqrt(k * k - 1.0)));

  while (true) {
    std::vector<GrayImage> octave;
    octave.reserve(levels);
    octave.push_back(std::move(base));
    for (int i = 0; i + 1 < levels; ++i)
      octave.push_back(convolve_separable(octave.back(), increments[i]));

    const GrayImage& seed = octave[params.intervals];
    const bool more = seed.width() / 2 >= params.min_dimension &&
                      seed.height() / 2 >= params.min_dimension;
    if (more) base = downsample2(seed);
    gp.octaves.push_back(std::move(octave));
    if (!more) break;
  }
  return gp;
}

DoGPyramid build_dog_pyramid(const GaussianPyramid& gp) {
  DoGPyramid dog{gp.params, {}};
  dog.octaves.reserve(gp.octaves.size());
  for (const auto& octave : gp.octaves) {
    std::vector<GrayImage> diffs;
    diffs.reserve(octave.size() - 1);
    for (std::size_t i = 0; i + 1 < octave.size(); ++i) {
      const auto lo = octave[i].pixels();
      const auto hi = octave[i + 1].pixels();
      GrayImage d(octave[i].width(), octave[i].height());
      auto out = d.pixels();
      for (std::size_t p = 0; p < out.size(); ++p) out[p] = hi[p] - lo[p];
      diffs.push_back(std::move(d));
    }
    dog.octaves.push_back(std::move(diffs));
  }
  return dog;
}

namespace {

std::filesystem::path level_path(const std::filesystem::path& dir, std::size_t o,
                                 std::size_t s) {
  return dir / ("o" + std::to_string(o) + "_s" + std::to_string(s) + ".pgm");
}

}  // namespace

void dump_pyramid(const GaussianPyramid& gp, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t o = 0; o < gp.octaves.size(); ++o)
    for (std::size_t s = 0; s < gp.octaves[o].size(); ++s)
      save_pgm(gp.octaves[o][s], level_path(dir, o, s));
}

void dump_pyramid(const DoGPyramid& dog, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t o = 0; o < dog.octaves.size(); ++o)
    for (std::size_t s = 0; s < dog.octaves[o].size(); ++s)
      save_pgm_scaled(dog.octaves[o][s], level_path(dir, o, s));
}

}  // namespace siftbench
