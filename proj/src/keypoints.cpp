#include "siftbench/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "siftbench/angles.hpp"
#include "siftbench/errors.hpp"

namespace siftbench {

void DetectorParams::validate() const {
  if (!(contrast_threshold > 0.0))
    throw ArgumentError("contrast threshold must be > 0");
  if (!(edge_ratio > 0.0)) throw ArgumentError("edge ratio must be > 0");
  if (max_refine_iterations < 1)
    throw ArgumentError("max refine iterations must be >= 1");
  if (orientation_bins < 3)
    throw ArgumentError("orientation bins must be >= 3");
  if (!(peak_ratio > 0.0 && peak_ratio <= 1.0))
    throw ArgumentError("peak ratio must lie in (0, 1]");
}

// ---------------------------------------------------------------------------
// Extrema

namespace {

bool is_extremum(const GrayImage& below, const GrayImage& here,
                 const GrayImage& above, int x, int y, bool& is_max) {
  const double v = here.at(x, y);
  bool maximum = true;
  bool minimum = true;
  for (const GrayImage* img : {&below, &here, &above}) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (img == &here && dx == 0 && dy == 0) continue;
        const double n = img->at(x + dx, y + dy);
        maximum = maximum && v > n;
        minimum = minimum && v < n;
        if (!maximum && !minimum) return false;
      }
    }
  }
  is_max = maximum;
  return true;
}

}  // namespace

std::vector<RawExtremum> detect_extrema(const DoGPyramid& dog) {
  std::vector<RawExtremum> out;
  for (std::size_t o = 0; o < dog.octaves.size(); ++o) {
    const auto& levels = dog.octaves[o];
    for (std::size_t l = 1; l + 1 < levels.size(); ++l) {
      const GrayImage& here = levels[l];
      for (int y = 1; y + 1 < here.height(); ++y) {
        for (int x = 1; x + 1 < here.width(); ++x) {
          bool is_max = false;
          if (is_extremum(levels[l - 1], here, levels[l + 1], x, y, is_max))
            out.push_back({static_cast<int>(o), static_cast<int>(l), x, y, is_max});
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Cramer's rule; the caller has already rejected near-singular systems.
Vec3 solve3(const Mat3& m, const Vec3& b, double det) {
  Vec3 x{};
  for (int c = 0; c < 3; ++c) {
    Mat3 mc = m;
    for (int r = 0; r < 3; ++r) mc[r][c] = b[r];
    x[c] = det3(mc) / det;
  }
  return x;
}

constexpr double kSingularDet = 1e-12;

}  // namespace

std::optional<RefinedKeypoint> refine_keypoint(const DoGPyramid& dog,
                                               const RawExtremum& e,
                                               const DetectorParams& params) {
  const auto& levels = dog.octaves.at(static_cast<std::size_t>(e.octave));
  const int last_level = static_cast<int>(levels.size()) - 2;
  const int w = levels.front().width();
  const int h = levels.front().height();

  int x = e.x;
  int y = e.y;
  int l = e.level;
  Vec3 grad{};
  Vec3 offset{};
  Mat3 hess{};
  bool converged = false;
  for (int iter = 0; iter < params.max_refine_iterations; ++iter) {
    const GrayImage& d0 = levels[l - 1];
    const GrayImage& d1 = levels[l];
    const GrayImage& d2 = levels[l + 1];
    const double v = d1.at(x, y);
    grad = {0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y)),
            0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1)),
            0.5 * (d2.at(x, y) - d0.at(x, y))};
    const double dxx = d1.at(x + 1, y) + d1.at(x - 1, y) - 2.0 * v;
    const double dyy = d1.at(x, y + 1) + d1.at(x, y - 1) - 2.0 * v;
    const double dss = d2.at(x, y) + d0.at(x, y) - 2.0 * v;
    const double dxy = 0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) -
                               d1.at(x + 1, y - 1) + d1.at(x - 1, y - 1));
    const double dxs = 0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) -
                               d0.at(x + 1, y) + d0.at(x - 1, y));
    const double dys = 0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) -
                               d0.at(x, y + 1) + d0.at(x, y - 1));
    hess = {Vec3{dxx, dxy, dxs}, Vec3{dxy, dyy, dys}, Vec3{dxs, dys, dss}};
    const double det = det3(hess);
    if (std::abs(det) < kSingularDet) return std::nullopt;
    offset = solve3(hess, {-grad[0], -grad[1], -grad[2]}, det);

    if (std::abs(offset[0]) <= 0.5 && std::abs(offset[1]) <= 0.5 &&
        std::abs(offset[2]) <= 0.5) {
      converged = true;
      break;
    }
    x += static_cast<int>(std::lround(offset[0]));
    y += static_cast<int>(std::lround(offset[1]));
    l += static_cast<int>(std::lround(offset[2]));
    if (l < 1 || l > last_level || x < 1 || x > w - 2 || y < 1 || y > h - 2)
      return std::nullopt;
  }
  if (!converged) return std::nullopt;

  const double value = levels[l].at(x, y) +
                       0.5 * (grad[0] * offset[0] + grad[1] * offset[1] +
                              grad[2] * offset[2]);
  if (std::abs(value) < params.contrast_threshold) return std::nullopt;

  const double dxx = hess[0][0];
  const double dyy = hess[1][1];
  const double dxy = hess[0][1];
  const double trace = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = params.edge_ratio;
  if (det <= 0.0 || trace * trace * r >= (r + 1.0) * (r + 1.0) * det)
    return std::nullopt;

  const double scale = dog.octave_scale(e.octave);
  RefinedKeypoint out;
  out.keypoint.x = (x + offset[0]) * scale;
  out.keypoint.y = (y + offset[1]) * scale;
  out.keypoint.sigma = dog.params.base_sigma *
                       std::pow(dog.params.k(), l + offset[2]) * scale;
  out.keypoint.response = std::abs(value);
  out.keypoint.octave = e.octave;
  out.keypoint.level = l;
  out.offset = offset;
  out.sample_x = x;
  out.sample_y = y;
  out.dxx = dxx;
  out.dyy = dyy;
  out.dxy = dxy;
  return out;
}

// ---------------------------------------------------------------------------
// Orientation

Gradient compute_gradient(const GrayImage& img, int x, int y) {
  if (x < 1 || y < 1 || x > img.width() - 2 || y > img.height() - 2)
    throw ArgumentError("compute_gradient: (" + std::to_string(x) + ", " +
                        std::to_string(y) + ") lacks a 1-pixel margin");
  const double dx = img.at(x + 1, y) - img.at(x - 1, y);
  const double dy = img.at(x, y + 1) - img.at(x, y - 1);
  Gradient g;
  g.magnitude = std::sqrt(dx * dx + dy * dy);
  g.orientation = g.magnitude > 0.0 ? wrap_degrees(to_degrees(std::atan2(dy, dx))) : 0.0;
  return g;
}

int nearest_gaussian_level(const GaussianPyramid& gp, const Keypoint& kp) {
  const double sigma_oct = kp.sigma / gp.octave_scale(kp.octave);
  const double level =
      std::log(sigma_oct / gp.params.base_sigma) / std::log(gp.params.k());
  const int last = static_cast<int>(gp.octaves.at(kp.octave).size()) - 1;
  return std::clamp(static_cast<int>(std::lround(level)), 0, last);
}

std::vector<Keypoint> assign_orientations(const GaussianPyramid& gp,
                                          const Keypoint& kp,
                                          const DetectorParams& params) {
  const double scale = gp.octave_scale(kp.octave);
  const GrayImage& img = gp.octaves.at(kp.octave)[nearest_gaussian_level(gp, kp)];
  const double sigma_w = 1.5 * kp.sigma / scale;
  const int radius = static_cast<int>(std::lround(3.0 * sigma_w));
  const int cx = static_cast<int>(std::lround(kp.x / scale));
  const int cy = static_cast<int>(std::lround(kp.y / scale));
  const int bins = params.orientation_bins;

  std::vector<double> hist(bins, 0.0);
  bool any = false;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y < 1 || y > img.height() - 2) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x < 1 || x > img.width() - 2) continue;
      any = true;
      const Gradient g = compute_gradient(img, x, y);
      const double weight =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_w * sigma_w));
      const int bin =
          static_cast<int>(std::lround(g.orientation * bins / 360.0)) % bins;
      hist[bin] += weight * g.magnitude;
    }
  }
  if (!any) return {};

  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> smoothed(bins);
    for (int i = 0; i < bins; ++i)
      smoothed[i] = (hist[(i + bins - 1) % bins] + hist[i] + hist[(i + 1) % bins]) / 3.0;
    hist = std::move(smoothed);
  }

  const double peak = *std::max_element(hist.begin(), hist.end());
  if (!(peak > 0.0)) return {};

  std::vector<Keypoint> out;
  for (int i = 0; i < bins; ++i) {
    const double left = hist[(i + bins - 1) % bins];
    const double right = hist[(i + 1) % bins];
    const double c = hist[i];
    if (!(c > left && c > right && c >= params.peak_ratio * peak)) continue;
    const double shift = 0.5 * (left - right) / (left - 2.0 * c + right);
    Keypoint oriented = kp;
    oriented.orientation = wrap_degrees((i + shift) * 360.0 / bins);
    out.push_back(oriented);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptor

namespace {

constexpr int kGrid = 16;           // samples per side
constexpr int kCells = 4;           // spatial cells per side
constexpr int kOrientBins = 8;
constexpr double kSampleSpacing = 0.75;  // grid step in units of the keypoint scale
constexpr double kWindowSigma = 8.0;     // Gaussian weight, grid units
constexpr double kClamp = 0.2;

bool normalize(std::array<double, 128>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0)) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return true;
}

}  // namespace

std::optional<Descriptor> compute_descriptor(const GaussianPyramid& gp,
                                             const Keypoint& kp,
                                             DescriptorAudit* audit) {
  const double scale = gp.octave_scale(kp.octave);
  const GrayImage& img = gp.octaves.at(kp.octave)[nearest_gaussian_level(gp, kp)];
  const double spacing = kSampleSpacing * kp.sigma / scale;
  const double cx = kp.x / scale;
  const double cy = kp.y / scale;
  const double c = std::cos(to_radians(kp.orientation));
  const double s = std::sin(to_radians(kp.orientation));
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;

  std::array<double, 128> hist{};
  const double half = 0.5 * (kGrid - 1);
  for (int j = 0; j < kGrid; ++j) {
    for (int i = 0; i < kGrid; ++i) {
      const double u = (i - half) * spacing;
      const double v = (j - half) * spacing;
      const double px = cx + c * u - s * v;
      const double py = cy + s * u + c * v;
      if (px - 1.0 < 0.0 || py - 1.0 < 0.0 || px + 1.0 > max_x || py + 1.0 > max_y)
        return std::nullopt;

      const double gx = bilinear_sample(img, px + 1.0, py) - bilinear_sample(img, px - 1.0, py);
      const double gy = bilinear_sample(img, px, py + 1.0) - bilinear_sample(img, px, py - 1.0);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      const double rel = wrap_degrees(to_degrees(std::atan2(gy, gx)) - kp.orientation);
      const double weight = std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) /
                                     (2.0 * kWindowSigma * kWindowSigma));

      // Continuous bin coordinates; cell centers sit at integer positions.
      const double cell_x = (i + 0.5) / (kGrid / kCells) - 0.5;
      const double cell_y = (j + 0.5) / (kGrid / kCells) - 0.5;
      const double obin = rel / (360.0 / kOrientBins);
      const int x0 = static_cast<int>(std::floor(cell_x));
      const int y0 = static_cast<int>(std::floor(cell_y));
      const int o0 = static_cast<int>(std::floor(obin));
      const double fx = cell_x - x0;
      const double fy = cell_y - y0;
      const double fo = obin - o0;
      for (int dy = 0; dy <= 1; ++dy) {
        const int cyi = y0 + dy;
        if (cyi < 0 || cyi >= kCells) continue;
        const double wy = dy ? fy : 1.0 - fy;
        for (int dx = 0; dx <= 1; ++dx) {
          const int cxi = x0 + dx;
          if (cxi < 0 || cxi >= kCells) continue;
          const double wx = dx ? fx : 1.0 - fx;
          for (int d_o = 0; d_o <= 1; ++d_o) {
            const int oi = (o0 + d_o) % kOrientBins;
            const double wo = d_o ? fo : 1.0 - fo;
            hist[(cyi * kCells + cxi) * kOrientBins + oi] += weight * mag * wx * wy * wo;
          }
        }
      }
    }
  }

  if (!normalize(hist)) return std::nullopt;
  for (double& x : hist) x = std::min(x, kClamp);
  if (audit) {
    audit->max_clamped = *std::max_element(hist.begin(), hist.end());
    audit->clamped_norm =
        std::sqrt(std::inner_product(hist.begin(), hist.end(), hist.begin(), 0.0));
  }
  normalize(hist);
  return Descriptor{hist};
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<Feature> detect_and_describe(const GrayImage& img,
                                         const PyramidParams& pyramid,
                                         const DetectorParams& detector) {
  detector.validate();
  const GaussianPyramid gp = build_gaussian_pyramid(img, pyramid);
  const DoGPyramid dog = build_dog_pyramid(gp);

  // Several raw extrema can converge onto the same sample; keep the first.
  std::set<std::tuple<int, int, int, int>> seen;
  std::vector<Feature> out;
  for (const RawExtremum& e : detect_extrema(dog)) {
    const auto refined = refine_keypoint(dog, e, detector);
    if (!refined) continue;
    const Keypoint& kp = refined->keypoint;
    if (!seen.emplace(kp.octave, kp.level, refined->sample_x, refined->sample_y).second)
      continue;
    for (const Keypoint& oriented : assign_orientations(gp, kp, detector)) {
      if (auto desc = compute_descriptor(gp, oriented))
        out.push_back({oriented, *desc});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Feature& a, const Feature& b) {
    const Keypoint& p = a.keypoint;
    const Keypoint& q = b.keypoint;
    return std::tie(p.octave, p.level, p.y, p.x, p.orientation) <
           std::tie(q.octave, q.level, q.y, q.x, q.orientation);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Keypoint files

namespace {

constexpr const char* kHeaderPrefix = "# sift-bench keypoints v1 count=";

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  if (!line.empty()) line.push_back(' ');
  line += buf;
}

double round_trip(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr) + 0.0;
}

}  // namespace

void write_features(std::ostream& out, const std::vector<Feature>& features) {
  out << kHeaderPrefix << features.size() << '\n';
  std::string line;
  for (const Feature& f : features) {
    line.clear();
    const Keypoint& k = f.keypoint;
    for (double v : {k.x, k.y, k.sigma, k.orientation, k.response}) put(line, v);
    for (double v : f.descriptor.values) put(line, v);
    line.push_back('\n');
    out << line;
  }
}

std::vector<Feature> read_features(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind(kHeaderPrefix, 0) != 0)
    throw FormatError("keypoint file: missing '# sift-bench keypoints v1' header");
  char* end = nullptr;
  const std::string count_text = header.substr(std::char_traits<char>::length(kHeaderPrefix));
  const unsigned long long count = std::strtoull(count_text.c_str(), &end, 10);
  if (count_text.empty() || *end != '\0')
    throw FormatError("keypoint file: bad count '" + count_text + "'");

  std::vector<Feature> out;
  out.reserve(count);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Feature f;
    Keypoint& k = f.keypoint;
    fields >> k.x >> k.y >> k.sigma >> k.orientation >> k.response;
    for (double& v : f.descriptor.values) fields >> v;
    std::string extra;
    if (!fields || (fields >> extra))
      throw FormatError("keypoint file: line " + std::to_string(out.size() + 2) +
                        " does not hold 133 numbers");
    k.orientation = wrap_degrees(k.orientation);
    out.push_back(f);
  }
  if (out.size() != count)
    throw FormatError("keypoint file: header says " + std::to_string(count) +
                      " features, found " + std::to_string(out.size()));
  return out;
}

void save_features(const std::vector<Feature>& features,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_features(out, features);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Feature> load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_features(in);
}

std::vector<Feature> quantize_features(std::vector<Feature> features) {
  for (Feature& f : features) {
    Keypoint& k = f.keypoint;
    k.x = round_trip(k.x);
    k.y = round_trip(k.y);
    k.sigma = round_trip(k.sigma);
    k.orientation = wrap_degrees(round_trip(k.orientation));
    k.response = round_trip(k.response);
    for (double& v : f.descriptor.values) v = round_trip(v);
  }
  return features;
}

}  // namespace siftbench
