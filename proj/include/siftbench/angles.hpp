#pragma once

#include <cmath>
#include <numbers>

namespace siftbench {

/// Maps any finite angle in degrees onto [0, 360). Never returns -0.
inline double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r + 0.0;
}

inline double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }
inline double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace siftbench
