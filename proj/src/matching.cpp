#include "siftbench/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "siftbench/angles.hpp"
#include "siftbench/errors.hpp"

namespace siftbench {

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

MatchResult match_descriptors(const std::vector<Feature>& set_a,
                              const std::vector<Feature>& set_b, double ratio,
                              RateNormalization normalization) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw ArgumentError("match ratio must lie in (0, 1], got " + std::to_string(ratio));

  MatchResult result;
  result.n_a = set_a.size();
  result.n_b = set_b.size();
  if (set_a.empty() || set_b.empty()) return result;

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Best accepted candidate per b index.
  std::vector<std::size_t> owner(set_b.size(), kNone);
  std::vector<double> owner_distance(set_b.size(), 0.0);

  for (std::size_t a = 0; a < set_a.size(); ++a) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t best = kNone;
    for (std::size_t b = 0; b < set_b.size(); ++b) {
      const double d = descriptor_distance(set_a[a].descriptor, set_b[b].descriptor);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = b;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const bool accepted = set_b.size() == 1 ? d1 == 0.0 : d1 < ratio * d2;
    if (!accepted) continue;
    // Strict comparison keeps the lower a index on distance ties.
    if (owner[best] == kNone || d1 < owner_distance[best]) {
      owner[best] = a;
      owner_distance[best] = d1;
    }
  }

  for (std::size_t b = 0; b < set_b.size(); ++b) {
    if (owner[b] == kNone) continue;
    const std::size_t a = owner[b];
    result.matches.push_back({a, b, owner_distance[b],
                              wrap_delta_phi(set_a[a].keypoint.orientation,
                                             set_b[b].keypoint.orientation)});
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
  const std::size_t denominator = normalization == RateNormalization::larger_set
                                      ? std::max(result.n_a, result.n_b)
                                      : std::min(result.n_a, result.n_b);
  result.rate = static_cast<double>(result.matches.size()) /
                static_cast<double>(denominator);
  return result;
}

const char* to_string(RateNormalization normalization) {
  return normalization == RateNormalization::larger_set ? "max" : "min";
}

RateNormalization parse_rate_normalization(const std::string& text) {
  if (text == "max") return RateNormalization::larger_set;
  if (text == "min") return RateNormalization::smaller_set;
  throw ArgumentError("rate normalization must be 'max' or 'min', got '" + text + "'");
}

double wrap_delta_phi(double phi_a, double phi_b) {
  return wrap_degrees(phi_b - phi_a);
}

bool is_image_match(const MatchResult& result, double rate_threshold) {
  return result.rate > rate_threshold;
}

void write_matches(std::ostream& out, const MatchResult& result) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# sift-bench matches v1 r=%.6f\n", result.rate);
  out << buf;
  for (const Match& m : result.matches) {
    std::snprintf(buf, sizeof buf, "%zu %zu %.6g %.6g\n", m.index_a, m.index_b,
                  m.distance, m.delta_phi);
    out << buf;
  }
}

void save_matches(const MatchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_matches(out, result);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace siftbench
