#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace siftbench {

/// Single-channel floating point raster, row-major.
///
/// Images loaded from disk hold intensities in [0,1]. The type itself does
/// not clamp so it can also carry intermediate results of linear filters.
class GrayImage {
 public:
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int x, int y) const { return pixels_[index(x, y)]; }
  double& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> pixels_;
};

/// Symmetric, normalized 1-D convolution kernel with 2*radius+1 taps.
struct Kernel1D {
  int radius = 0;
  std::vector<double> taps;
};

/// Decodes a PGM (P2/P5, maxval <= 255) or 8-bit gray/RGB PNG file.
/// RGB input is converted to luma with weights (0.299, 0.587, 0.114).
GrayImage load_image(const std::filesystem::path& path);

/// Writes a binary PGM (P5, maxval 255). Values are clamped to [0,1] and
/// rounded to the nearest 8-bit level.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Same as save_pgm but maps the image's own [min, max] affinely onto
/// [0, 255]. Used for signed debug images such as DoG levels.
void save_pgm_scaled(const GrayImage& img, const std::filesystem::path& path);

/// Sampled Gaussian with radius ceil(4 sigma), renormalized to sum 1.
Kernel1D gaussian_kernel(double sigma);

/// Horizontal then vertical pass with `k`, replicating edge pixels.
GrayImage convolve_separable(const GrayImage& img, const Kernel1D& k);

/// Convenience for convolve_separable(img, gaussian_kernel(sigma)).
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Bilinear interpolation at (x, y); coordinates are clamped to the pixel
/// center rectangle [0, w-1] x [0, h-1] first.
double bilinear_sample(const GrayImage& img, double x, double y);

/// Keeps every second pixel starting at (0,0). Throws SizeError below 2x2.
GrayImage downsample2(const GrayImage& img);

/// Doubles both dimensions with bilinear interpolation.
GrayImage upsample2(const GrayImage& img);

}  // namespace siftbench
