#include "siftbench/deform.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "siftbench/angles.hpp"
#include "siftbench/errors.hpp"

namespace siftbench {

namespace {

double parse_number(std::string_view token, std::string_view spec) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (token.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ArgumentError("deformation '" + std::string(spec) + "': bad number '" +
                        std::string(token) + "'");
  return v;
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

// Exact sine/cosine for multiples of 90 degrees so quarter turns are pure
// pixel permutations.
void exact_sincos(double deg, double& s, double& c) {
  const double wrapped = wrap_degrees(deg);
  if (wrapped == 0.0) { s = 0.0; c = 1.0; return; }
  if (wrapped == 90.0) { s = 1.0; c = 0.0; return; }
  if (wrapped == 180.0) { s = 0.0; c = -1.0; return; }
  if (wrapped == 270.0) { s = -1.0; c = 0.0; return; }
  s = std::sin(to_radians(wrapped));
  c = std::cos(to_radians(wrapped));
}

}  // namespace

Deformation Deformation::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw ArgumentError("deformation '" + std::string(spec) +
                        "': expected <kind>:<value>");
  const std::string_view kind = spec.substr(0, colon);
  std::string_view value = spec.substr(colon + 1);

  Deformation d;
  if (kind == "rot") {
    d.kind = DeformationKind::rotation;
    d.parameter = parse_number(value, spec);
  } else if (kind == "scale") {
    d.kind = DeformationKind::scaling;
    d.parameter = parse_number(value, spec);
    if (!(d.parameter > 0.0))
      throw ArgumentError("deformation '" + std::string(spec) + "': scale factor '" +
                          std::string(value) + "' must be > 0");
  } else if (kind == "fisheye") {
    d.kind = DeformationKind::fisheye;
    d.parameter = parse_number(value, spec);
    if (d.parameter < 0.0)
      throw ArgumentError("deformation '" + std::string(spec) + "': fisheye strength '" +
                          std::string(value) + "' must be >= 0");
  } else if (kind == "blur") {
    d.kind = DeformationKind::motion_blur;
    const auto at = value.find('@');
    if (at != std::string_view::npos) {
      d.angle = parse_number(value.substr(at + 1), spec);
      value = value.substr(0, at);
    }
    d.parameter = parse_number(value, spec);
    if (d.parameter < 1.0 || d.parameter != std::floor(d.parameter))
      throw ArgumentError("deformation '" + std::string(spec) + "': blur length '" +
                          std::string(value) + "' must be an integer >= 1");
  } else {
    throw ArgumentError("deformation '" + std::string(spec) + "': unknown kind '" +
                        std::string(kind) + "' (expected rot, scale, fisheye or blur)");
  }
  return d;
}

std::string Deformation::to_string() const {
  switch (kind) {
    case DeformationKind::rotation: return "rot:" + format_number(parameter);
    case DeformationKind::scaling: return "scale:" + format_number(parameter);
    case DeformationKind::fisheye: return "fisheye:" + format_number(parameter);
    case DeformationKind::motion_blur: {
      std::string s = "blur:" + format_number(parameter);
      if (angle != 0.0) s += "@" + format_number(angle);
      return s;
    }
  }
  return {};
}

GrayImage rotate(const GrayImage& img, double theta_deg) {
  double s = 0.0;
  double c = 1.0;
  exact_sincos(theta_deg, s, c);
  const int w = img.width();
  const int h = img.height();
  // Bounding box of the rotated pixel-center rectangle.
  const double span_x = (w - 1) * std::abs(c) + (h - 1) * std::abs(s);
  const double span_y = (w - 1) * std::abs(s) + (h - 1) * std::abs(c);
  const int out_w = static_cast<int>(std::ceil(span_x - 1e-9)) + 1;
  const int out_h = static_cast<int>(std::ceil(span_y - 1e-9)) + 1;

  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double ox = 0.5 * (out_w - 1);
  const double oy = 0.5 * (out_h - 1);
  constexpr double kEdge = 1e-9;

  GrayImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double dx = x - ox;
      const double dy = y - oy;
      // Inverse rotation back into the source frame.
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      if (sx < -kEdge || sy < -kEdge || sx > w - 1 + kEdge || sy > h - 1 + kEdge)
        continue;
      out.at(x, y) = bilinear_sample(img, sx, sy);
    }
  }
  return out;
}

GrayImage scale(const GrayImage& img, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ArgumentError("scale: factor must be > 0");
  const long out_w = std::lround(alpha * img.width());
  const long out_h = std::lround(alpha * img.height());
  if (out_w < 1 || out_h < 1)
    throw ArgumentError("scale: factor " + std::to_string(alpha) +
                        " produces an empty image");
  GrayImage out(static_cast<int>(out_w), static_cast<int>(out_h));
  for (int y = 0; y < out.height(); ++y) {
    const double sy = (y + 0.5) / alpha - 0.5;
    for (int x = 0; x < out.width(); ++x)
      out.at(x, y) = bilinear_sample(img, (x + 0.5) / alpha - 0.5, sy);
  }
  return out;
}

GrayImage fisheye(const GrayImage& img, double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("fisheye: strength must be >= 0");
  const int w = img.width();
  const int h = img.height();
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double radius = std::hypot(cx, cy);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double rho2 = radius > 0.0 ? (dx * dx + dy * dy) / (radius * radius) : 0.0;
      // rho_src / rho, applied to the offset vector keeps the polar angle.
      const double gain = (1.0 + beta * rho2) / (1.0 + beta);
      out.at(x, y) = bilinear_sample(img, cx + gain * dx, cy + gain * dy);
    }
  }
  return out;
}

GrayImage motion_blur(const GrayImage& img, int length, double angle_deg) {
  if (length < 1) throw ArgumentError("motion_blur: length must be >= 1");
  double s = 0.0;
  double c = 1.0;
  exact_sincos(angle_deg, s, c);
  GrayImage out(img.width(), img.height());
  const double half = 0.5 * (length - 1);
  const double weight = 1.0 / length;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int t = 0; t < length; ++t) {
        const double d = t - half;
        acc += bilinear_sample(img, x + d * c, y + d * s);
      }
      out.at(x, y) = acc * weight;
    }
  }
  return out;
}

GrayImage apply(const Deformation& d, const GrayImage& img) {
  switch (d.kind) {
    case DeformationKind::rotation: return rotate(img, d.parameter);
    case DeformationKind::scaling: return scale(img, d.parameter);
    case DeformationKind::fisheye: return fisheye(img, d.parameter);
    case DeformationKind::motion_blur:
      return motion_blur(img, static_cast<int>(d.parameter), d.angle);
  }
  throw ArgumentError("unknown deformation kind");
}

}  // namespace siftbench
