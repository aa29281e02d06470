#include "siftbench/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "siftbench/errors.hpp"

namespace siftbench {

namespace fs = std::filesystem;

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw ArgumentError("image dimensions must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1)
    throw ArgumentError("image dimensions must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    throw ArgumentError("pixel count does not match " + std::to_string(width) +
                        "x" + std::to_string(height));
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

// Tokenizer for the PNM header: whitespace separated, '#' starts a comment
// that runs to end of line.
class PnmHeader {
 public:
  PnmHeader(const std::vector<unsigned char>& bytes, const fs::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) &&
           bytes_[pos_] != '#')
      out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) fail("truncated header");
    return out;
  }

  int integer(const char* what) {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      fail(std::string("non-numeric ") + what + " '" + t + "'");
    if (t.size() > 9) fail(std::string(what) + " out of range");
    return std::stoi(t);
  }

  // P5 raster starts after exactly one whitespace byte following maxval.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      fail("missing whitespace before raster");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("PGM '" + path_.string() + "': " + what);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

GrayImage decode_pgm(const std::vector<unsigned char>& bytes,
                     const fs::path& path) {
  PnmHeader header(bytes, path);
  const std::string magic = header.token();
  if (magic != "P2" && magic != "P5")
    header.fail("unsupported magic '" + magic + "'");
  const int width = header.integer("width");
  const int height = header.integer("height");
  const int maxval = header.integer("maxval");
  if (width < 1 || height < 1) header.fail("zero image dimension");
  if (maxval < 1) header.fail("maxval must be positive");
  if (maxval > 255)
    header.fail("16-bit depth (maxval " + std::to_string(maxval) +
                ") is not supported");

  const std::size_t count = static_cast<std::size_t>(width) * height;
  std::vector<double> pixels(count);
  const double scale = maxval;
  if (magic == "P5") {
    const std::size_t start = header.raster_start();
    if (bytes.size() < start + count) header.fail("truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      const int v = bytes[start + i];
      if (v > maxval) header.fail("sample exceeds maxval");
      pixels[i] = v / scale;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = header.integer("sample");
      if (v > maxval) header.fail("sample exceeds maxval");
      pixels[i] = v / scale;
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

GrayImage decode_png(const std::vector<unsigned char>& bytes,
                     const fs::path& path) {
  const auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("PNG '" + path.string() + "': " + what);
  };
  // Signature (8) + IHDR length/type (8) + width, height (8) + depth, color.
  if (bytes.size() < 26 || std::string(bytes.begin() + 12, bytes.begin() + 16) != "IHDR")
    throw fail("missing IHDR chunk");
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (bit_depth != 8)
    throw fail(std::to_string(bit_depth) + "-bit depth is not supported");
  const bool rgb = color_type == PNG_COLOR_TYPE_RGB;
  if (color_type != PNG_COLOR_TYPE_GRAY && !rgb) {
    const char* name = color_type == PNG_COLOR_TYPE_PALETTE ? "palette color"
                       : color_type == PNG_COLOR_TYPE_GRAY_ALPHA
                           ? "gray+alpha color"
                       : color_type == PNG_COLOR_TYPE_RGB_ALPHA
                           ? "RGBA color"
                           : "unknown color type";
    throw fail(std::string(name) + " is not supported");
  }
  if (read_be32(&bytes[16]) == 0 || read_be32(&bytes[20]) == 0)
    throw fail("zero image dimension");

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw fail(image.message);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> raster(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw fail(message);
  }
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  const std::size_t count = static_cast<std::size_t>(width) * height;
  std::vector<double> pixels(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (rgb) {
      const unsigned char* p = &raster[3 * i];
      pixels[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    } else {
      pixels[i] = raster[i] / 255.0;
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_p5(const fs::path& path, int width, int height,
              const std::vector<unsigned char>& raster) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

GrayImage load_image(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.empty())
    throw FormatError("'" + path.string() + "' is empty");
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P',  'N',  'G',
                                                     '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kPngSignature))
    return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes, path);
  throw FormatError("'" + path.string() +
                    "': unrecognized format (expected PGM or PNG)");
}

void save_pgm(const GrayImage& img, const fs::path& path) {
  std::vector<unsigned char> raster(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < raster.size(); ++i)
    raster[i] = static_cast<unsigned char>(
        std::lround(std::clamp(px[i], 0.0, 1.0) * 255.0));
  write_p5(path, img.width(), img.height(), raster);
}

void save_pgm_scaled(const GrayImage& img, const fs::path& path) {
  const auto px = img.pixels();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  std::vector<unsigned char> raster(img.size());
  for (std::size_t i = 0; i < raster.size(); ++i)
    raster[i] = span > 0.0 ? static_cast<unsigned char>(
                                 std::lround((px[i] - lo) / span * 255.0))
                           : 0;
  write_p5(path, img.width(), img.height(), raster);
}

Kernel1D gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ArgumentError("gaussian_kernel: sigma must be > 0, got " +
                        std::to_string(sigma));
  Kernel1D k;
  k.radius = static_cast<int>(std::ceil(4.0 * sigma));
  k.taps.resize(2 * static_cast<std::size_t>(k.radius) + 1);
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    const double w = std::exp(-static_cast<double>(i) * i / denom);
    k.taps[i + k.radius] = w;
    sum += w;
  }
  for (double& t : k.taps) t /= sum;
  return k;
}

GrayImage convolve_separable(const GrayImage& img, const Kernel1D& k) {
  const int w = img.width();
  const int h = img.height();
  const int r = k.radius;
  const auto src = img.pixels();

  GrayImage tmp(w, h);
  auto mid = tmp.pixels();
  std::vector<double> row(static_cast<std::size_t>(w) + 2 * r);
  for (int y = 0; y < h; ++y) {
    const double* in = &src[static_cast<std::size_t>(y) * w];
    for (int i = 0; i < w + 2 * r; ++i) row[i] = in[std::clamp(i - r, 0, w - 1)];
    double* out = &mid[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      // Accumulating differences from the center keeps flat regions exact
      // even though the taps only sum to 1 up to rounding.
      const double center = row[x + r];
      double acc = 0.0;
      for (int t = 0; t <= 2 * r; ++t) acc += k.taps[t] * (row[x + t] - center);
      out[x] = center + acc;
    }
  }

  GrayImage result(w, h);
  auto dst = result.pixels();
  for (int y = 0; y < h; ++y) {
    double* out = &dst[static_cast<std::size_t>(y) * w];
    const double* center = &mid[static_cast<std::size_t>(y) * w];
    for (int t = 0; t <= 2 * r; ++t) {
      const int sy = std::clamp(y + t - r, 0, h - 1);
      const double* in = &mid[static_cast<std::size_t>(sy) * w];
      const double tap = k.taps[t];
      for (int x = 0; x < w; ++x) out[x] += tap * (in[x] - center[x]);
    }
    for (int x = 0; x < w; ++x) out[x] += center[x];
  }
  return result;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  return convolve_separable(img, gaussian_kernel(sigma));
}

double bilinear_sample(const GrayImage& img, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y))
    throw ArgumentError("bilinear_sample: non-finite coordinate");
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

GrayImage downsample2(const GrayImage& img) {
  if (img.width() < 2 || img.height() < 2)
    throw SizeError("downsample2: image " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " is smaller than 2x2");
  GrayImage out(img.width() / 2, img.height() / 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = img.at(2 * x, 2 * y);
  return out;
}

GrayImage upsample2(const GrayImage& img) {
  GrayImage out(2 * img.width(), 2 * img.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out.at(x, y) = bilinear_sample(img, 0.5 * x, 0.5 * y);
  return out;
}

}  // namespace siftbench
