#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "siftbench/deform.hpp"
#include "siftbench/keypoints.hpp"
#include "siftbench/matching.hpp"
#include "siftbench/scale_space.hpp"

namespace siftbench {

struct CorpusEntry {
  std::string id;  // file name
  std::filesystem::path path;
};

/// Decodable images of a directory, sorted by file name.
struct Corpus {
  std::filesystem::path root;
  std::vector<CorpusEntry> entries;
  std::vector<std::string> warnings;  // one per skipped file
};

/// Lists .pgm/.pnm/.png files under `root` (non-recursive). Files that fail
/// to decode are skipped with a warning. Throws ConfigError when the
/// directory is missing or yields no usable image.
Corpus load_corpus(const std::filesystem::path& root);

/// Thresholds start, start+step, ... up to `end` (inclusive within half a
/// step). Values are rounded to 12 decimals so 0.2 means 0.2.
std::vector<double> make_grid(double start, double step, double end);
/// Parses "start:step:end".
std::vector<double> parse_grid(const std::string& text);

enum class CurveKind { false_positive, true_positive };

/// Survival function of per-pair matching rates: rates[i] is the fraction
/// of pairs whose rate strictly exceeds thresholds[i].
struct RateCurve {
  CurveKind kind = CurveKind::false_positive;
  std::vector<double> thresholds;
  std::vector<double> rates;
  std::size_t n_pairs = 0;
};

RateCurve survival_curve(const std::vector<double>& pair_rates,
                         const std::vector<double>& thresholds, CurveKind kind);

/// Pooled orientation differences over [0, 360).
struct DeltaPhiHistogram {
  static constexpr int kDefaultBins = 64;

  double bin_width = 360.0 / kDefaultBins;
  std::vector<std::size_t> counts = std::vector<std::size_t>(kDefaultBins, 0);
  std::vector<double> probabilities = std::vector<double>(kDefaultBins, 0.0);
  std::size_t n_matches = 0;

  int bins() const { return static_cast<int>(counts.size()); }
  /// Bin of a difference after rounding it to 0.01 deg.
  int bin_of(double delta_phi) const;
  double bin_center(int bin) const { return (bin + 0.5) * bin_width; }
  void add(double delta_phi);
  /// Recomputes probabilities from counts (all zero when empty).
  void normalize();
  int mode_bin() const;
};

struct PairRecord {
  std::string id_a;
  std::string id_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t matches = 0;
  double rate = 0.0;
};

struct EvalParams {
  PyramidParams pyramid;
  DetectorParams detector;
  double ratio = 0.8;
  RateNormalization normalization = RateNormalization::larger_set;
  std::vector<double> thresholds = make_grid(0.0, 0.02, 1.0);
  unsigned jobs = 1;  // worker threads; never changes results
  std::optional<std::filesystem::path> cache_dir;  // keypoint file cache
};

struct EvalReport {
  CurveKind kind = CurveKind::false_positive;
  std::optional<Deformation> deformation;
  std::filesystem::path corpus_root;
  std::size_t corpus_size = 0;
  EvalParams params;
  RateCurve curve;
  DeltaPhiHistogram histogram;
  std::vector<PairRecord> pairs;
  std::vector<std::string> warnings;

  double mean_rate() const;
  double median_rate() const;
};

/// Detected features per image, keyed by a hash of pixels and parameters.
/// Stored features are quantized to the keypoint file precision, so
/// in-memory, on-disk and freshly computed features are interchangeable.
/// Safe to share between threads.
class FeatureCache {
 public:
  explicit FeatureCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::shared_ptr<const std::vector<Feature>> get(const GrayImage& img,
                                                  const PyramidParams& pyramid,
                                                  const DetectorParams& detector);

  static std::string key(const GrayImage& img, const PyramidParams& pyramid,
                         const DetectorParams& detector);

 private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const std::vector<Feature>>> memory_;
};

/// Matches every unordered pair of distinct corpus images.
EvalReport false_positive_curve(const Corpus& corpus, const EvalParams& params,
                                FeatureCache* cache = nullptr);

/// Matches every corpus image against its deformed copy.
EvalReport true_positive_curve(const Corpus& corpus, const Deformation& deformation,
                               const EvalParams& params, FeatureCache* cache = nullptr);

/// Writes curve.csv, dphi.csv, pairs.csv and config.txt (plus curve.svg and
/// dphi.svg when `plots` is set). Files are staged and renamed into place.
void export_report(const EvalReport& report, const std::filesystem::path& out_dir,
                   bool plots = false);

/// key=value echo of the run configuration, as written to config.txt.
std::string describe_config(const EvalReport& report);

}  // namespace siftbench
