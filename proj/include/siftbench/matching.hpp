#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "siftbench/keypoints.hpp"

namespace siftbench {

struct Match {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;   // Euclidean descriptor distance
  double delta_phi = 0.0;  // (phi_b - phi_a) mod 360

  bool operator==(const Match&) const = default;
};

/// Denominator of the matching rate. Both choices are symmetric in the two
/// sets and keep the rate in [0, 1]. With the smaller set, an image that
/// loses most of its keypoints (heavy blur) still scores high when the few
/// survivors match, so the larger set is the default.
enum class RateNormalization { larger_set, smaller_set };

struct MatchResult {
  std::vector<Match> matches;  // sorted by index_a
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double rate = 0.0;  // |matches| / max(n_a, n_b) (or min), 0 if a set is empty

  bool operator==(const MatchResult&) const = default;
};

double descriptor_distance(const Descriptor& a, const Descriptor& b);

/// Nearest-neighbor ratio test followed by one-to-one pruning on set_b:
/// when several a-features pick the same b-feature only the closest
/// survives. Distance ties are resolved toward the lower index.
MatchResult match_descriptors(
    const std::vector<Feature>& set_a, const std::vector<Feature>& set_b,
    double ratio = 0.8,
    RateNormalization normalization = RateNormalization::larger_set);

/// "max" / "min" on the command line and in reports.
const char* to_string(RateNormalization normalization);
/// Throws ArgumentError for anything but "max" or "min".
RateNormalization parse_rate_normalization(const std::string& text);

/// (phi_b - phi_a) mod 360 on the full circle.
double wrap_delta_phi(double phi_a, double phi_b);

/// True when the matching rate strictly exceeds the threshold.
bool is_image_match(const MatchResult& result, double rate_threshold);

// Match dump: "# sift-bench matches v1 r=<rate>" followed by
// "index_a index_b distance delta_phi" lines.
void write_matches(std::ostream& out, const MatchResult& result);
void save_matches(const MatchResult& result, const std::filesystem::path& path);

}  // namespace siftbench
