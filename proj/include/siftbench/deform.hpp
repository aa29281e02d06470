#pragma once

#include <string>
#include <string_view>

#include "siftbench/image.hpp"

namespace siftbench {

enum class DeformationKind { rotation, scaling, fisheye, motion_blur };

/// One parametric deformation, written on the command line as
/// `rot:<deg>`, `scale:<alpha>`, `fisheye:<beta>`, `blur:<L>` or
/// `blur:<L>@<deg>`.
struct Deformation {
  DeformationKind kind = DeformationKind::rotation;
  double parameter = 0.0;  // degrees, alpha, beta, or length in pixels
  double angle = 0.0;      // blur direction in degrees

  /// Throws ArgumentError naming the offending token.
  static Deformation parse(std::string_view spec);
  /// Canonical spec string; parse(to_string()) reproduces the value.
  std::string to_string() const;

  bool operator==(const Deformation&) const = default;
};

/// Grammar summary used by CLI help text.
inline constexpr const char* kDeformationGrammar =
    "rot:<degrees> | scale:<alpha > 0> | fisheye:<beta >= 0> | "
    "blur:<L >= 1>[@<degrees>]";

/// Rotation about the image center onto the bounding box of the rotated
/// frame. Pixels without a source are 0.
GrayImage rotate(const GrayImage& img, double theta_deg);

/// Resize to round(alpha*w) x round(alpha*h) with pixel-center alignment.
GrayImage scale(const GrayImage& img, double alpha);

/// Radial warp rho_src = rho (1 + beta rho^2) / (1 + beta), rho normalized
/// by half the image diagonal. Magnifies the center, fixes the corners.
GrayImage fisheye(const GrayImage& img, double beta);

/// Average of `length` bilinear samples spaced one pixel apart on a segment
/// centered at each pixel and pointing along `angle_deg`.
GrayImage motion_blur(const GrayImage& img, int length, double angle_deg = 0.0);

GrayImage apply(const Deformation& d, const GrayImage& img);

}  // namespace siftbench
