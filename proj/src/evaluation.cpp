#include "siftbench/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "siftbench/errors.hpp"
#include "siftbench/plot.hpp"

namespace siftbench {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Corpus and grid

namespace {

bool supported_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pgm" || ext == ".pnm" || ext == ".png";
}

}  // namespace

Corpus load_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw ConfigError("corpus directory '" + root.string() + "' does not exist");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_regular_file() && supported_extension(entry.path()))
      files.push_back(entry.path());
  }
  if (ec) throw ConfigError("cannot list '" + root.string() + "': " + ec.message());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });

  Corpus corpus{root, {}, {}};
  for (const fs::path& file : files) {
    try {
      load_image(file);
      corpus.entries.push_back({file.filename().string(), file});
    } catch (const Error& e) {
      corpus.warnings.push_back("skipped " + file.filename().string() + ": " + e.what());
    }
  }
  if (corpus.entries.empty())
    throw ConfigError("corpus directory '" + root.string() + "' has no readable images");
  return corpus;
}

std::vector<double> make_grid(double start, double step, double end) {
  if (!std::isfinite(start) || !std::isfinite(step) || !std::isfinite(end))
    throw ArgumentError("grid values must be finite");
  if (!(step > 0.0)) throw ArgumentError("grid step must be > 0");
  if (end < start) throw ArgumentError("grid end must not precede its start");
  if (start < 0.0 || end > 1.0 + 0.5 * step)
    throw ArgumentError("grid thresholds must lie in [0, 1]");
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 0.5)) + 1;
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
    if (v > 1.0) break;
    grid.push_back(v);
  }
  return grid;
}

std::vector<double> parse_grid(const std::string& text) {
  double values[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t colon = text.find(':', pos);
    if ((i < 2) != (colon != std::string::npos))
      throw ArgumentError("grid '" + text + "': expected start:step:end");
    const std::string token = text.substr(pos, i < 2 ? colon - pos : std::string::npos);
    char* end = nullptr;
    values[i] = std::strtod(token.c_str(), &end);
    if (token.empty() || *end != '\0')
      throw ArgumentError("grid '" + text + "': bad number '" + token + "'");
    pos = colon + 1;
  }
  return make_grid(values[0], values[1], values[2]);
}

// ---------------------------------------------------------------------------
// Statistics

RateCurve survival_curve(const std::vector<double>& pair_rates,
                         const std::vector<double>& thresholds, CurveKind kind) {
  RateCurve curve{kind, thresholds, std::vector<double>(thresholds.size(), 0.0),
                  pair_rates.size()};
  if (pair_rates.empty()) return curve;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto above = std::count_if(pair_rates.begin(), pair_rates.end(),
                                     [&](double r) { return r > thresholds[i]; });
    curve.rates[i] = static_cast<double>(above) / static_cast<double>(pair_rates.size());
  }
  return curve;
}

int DeltaPhiHistogram::bin_of(double delta_phi) const {
  // Orientations are stored with 6 significant digits, so a difference that
  // is exactly a multiple of the bin width (90 deg under a quarter turn) can
  // come back as 89.9996. Snapping to 0.01 deg keeps such peaks in one bin.
  delta_phi = std::round(delta_phi * 100.0) / 100.0;
  if (delta_phi >= 360.0) delta_phi -= 360.0;
  const int bin = static_cast<int>(std::floor(delta_phi / bin_width));
  return std::clamp(bin, 0, bins() - 1);
}

void DeltaPhiHistogram::add(double delta_phi) {
  ++counts[bin_of(delta_phi)];
  ++n_matches;
}

void DeltaPhiHistogram::normalize() {
  for (int i = 0; i < bins(); ++i)
    probabilities[i] = n_matches ? static_cast<double>(counts[i]) / n_matches : 0.0;
}

int DeltaPhiHistogram::mode_bin() const {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double EvalReport::mean_rate() const {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const PairRecord& p : pairs) sum += p.rate;
  return sum / static_cast<double>(pairs.size());
}

double EvalReport::median_rate() const {
  if (pairs.empty()) return 0.0;
  std::vector<double> rates;
  for (const PairRecord& p : pairs) rates.push_back(p.rate);
  std::sort(rates.begin(), rates.end());
  const std::size_t n = rates.size();
  return n % 2 ? rates[n / 2] : 0.5 * (rates[n / 2 - 1] + rates[n / 2]);
}

// ---------------------------------------------------------------------------
// Feature cache

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

FeatureCache::FeatureCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {
  if (dir_) {
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) throw IoError("cannot create cache directory '" + dir_->string() + "'");
  }
}

std::string FeatureCache::key(const GrayImage& img, const PyramidParams& pyramid,
                              const DetectorParams& detector) {
  Fnv1a h;
  h.value(img.width());
  h.value(img.height());
  h.bytes(img.pixels().data(), img.pixels().size_bytes());
  h.value(pyramid.intervals);
  h.value(pyramid.base_sigma);
  h.value(pyramid.assumed_input_blur);
  h.value(static_cast<int>(pyramid.initial_doubling));
  h.value(pyramid.min_dimension);
  h.value(detector.contrast_threshold);
  h.value(detector.edge_ratio);
  h.value(detector.max_refine_iterations);
  h.value(detector.orientation_bins);
  h.value(detector.peak_ratio);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

std::shared_ptr<const std::vector<Feature>> FeatureCache::get(
    const GrayImage& img, const PyramidParams& pyramid, const DetectorParams& detector) {
  const std::string k = key(img, pyramid, detector);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = memory_.find(k); it != memory_.end()) return it->second;
  }

  std::shared_ptr<const std::vector<Feature>> features;
  const fs::path file = dir_ ? *dir_ / (k + ".kp") : fs::path{};
  if (dir_ && fs::exists(file)) {
    features = std::make_shared<const std::vector<Feature>>(load_features(file));
  } else {
    features = std::make_shared<const std::vector<Feature>>(
        quantize_features(detect_and_describe(img, pyramid, detector)));
    if (dir_) {
      // Unique staging name so concurrent writers never share a file.
      std::ostringstream tmp_name;
      tmp_name << k << ".kp." << std::this_thread::get_id() << ".tmp";
      const fs::path tmp = *dir_ / tmp_name.str();
      save_features(*features, tmp);
      fs::rename(tmp, file);
    }
  }

  std::lock_guard lock(mutex_);
  return memory_.emplace(k, features).first->second;
}

// ---------------------------------------------------------------------------
// Curves

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Rethrows the exception
// of the lowest failing index so failures are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = static_cast<unsigned>(
      std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct PairOutcome {
  PairRecord record;
  std::vector<double> deltas;
  std::string warning;
};

PairOutcome match_pair(std::string id_a, std::string id_b, const std::vector<Feature>& a,
                       const std::vector<Feature>& b, const EvalParams& params) {
  const MatchResult result = match_descriptors(a, b, params.ratio, params.normalization);
  PairOutcome out;
  out.record = {std::move(id_a), std::move(id_b), result.n_a, result.n_b,
                result.matches.size(), result.rate};
  out.deltas.reserve(result.matches.size());
  for (const Match& m : result.matches) out.deltas.push_back(m.delta_phi);
  return out;
}

void aggregate(EvalReport& report, std::vector<PairOutcome>& outcomes) {
  std::vector<double> rates;
  for (PairOutcome& o : outcomes) {
    rates.push_back(o.record.rate);
    for (double d : o.deltas) report.histogram.add(d);
    if (!o.warning.empty()) report.warnings.push_back(std::move(o.warning));
    report.pairs.push_back(std::move(o.record));
  }
  report.histogram.normalize();
  report.curve = survival_curve(rates, report.params.thresholds, report.kind);
}

EvalReport make_report(CurveKind kind, const Corpus& corpus, const EvalParams& params) {
  params.pyramid.validate();
  params.detector.validate();
  if (!(params.ratio > 0.0 && params.ratio <= 1.0))
    throw ArgumentError("match ratio must lie in (0, 1]");
  EvalReport report;
  report.kind = kind;
  report.corpus_root = corpus.root;
  report.corpus_size = corpus.entries.size();
  report.params = params;
  report.warnings = corpus.warnings;
  return report;
}

}  // namespace

EvalReport false_positive_curve(const Corpus& corpus, const EvalParams& params,
                                FeatureCache* cache) {
  if (corpus.entries.size() < 2)
    throw ConfigError("false-positive evaluation needs at least 2 images");
  EvalReport report = make_report(CurveKind::false_positive, corpus, params);
  FeatureCache local(params.cache_dir);
  FeatureCache& store = cache ? *cache : local;

  const std::size_t n = corpus.entries.size();
  std::vector<std::shared_ptr<const std::vector<Feature>>> features(n);
  parallel_for(n, params.jobs, [&](std::size_t i) {
    features[i] = store.get(load_image(corpus.entries[i].path), params.pyramid,
                            params.detector);
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), params.jobs, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    outcomes[p] = match_pair(corpus.entries[i].id, corpus.entries[j].id, *features[i],
                             *features[j], params);
  });
  aggregate(report, outcomes);
  return report;
}

EvalReport true_positive_curve(const Corpus& corpus, const Deformation& deformation,
                               const EvalParams& params, FeatureCache* cache) {
  EvalReport report = make_report(CurveKind::true_positive, corpus, params);
  report.deformation = deformation;
  FeatureCache local(params.cache_dir);
  FeatureCache& store = cache ? *cache : local;
  const std::string spec = deformation.to_string();

  std::vector<PairOutcome> outcomes(corpus.entries.size());
  parallel_for(outcomes.size(), params.jobs, [&](std::size_t i) {
    const CorpusEntry& entry = corpus.entries[i];
    const GrayImage img = load_image(entry.path);
    const auto original = store.get(img, params.pyramid, params.detector);
    const std::string deformed_id = entry.id + "|" + spec;
    try {
      const auto deformed = store.get(apply(deformation, img), params.pyramid,
                                      params.detector);
      outcomes[i] = match_pair(entry.id, deformed_id, *original, *deformed, params);
    } catch (const SizeError& e) {
      outcomes[i].record = {entry.id, deformed_id, original->size(), 0, 0, 0.0};
      outcomes[i].warning = deformed_id + ": " + e.what();
    } catch (const ArgumentError& e) {
      outcomes[i].record = {entry.id, deformed_id, original->size(), 0, 0, 0.0};
      outcomes[i].warning = deformed_id + ": " + e.what();
    }
  });
  aggregate(report, outcomes);
  return report;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

const char* kind_name(CurveKind kind) {
  return kind == CurveKind::false_positive ? "false_positive" : "true_positive";
}

std::string curve_csv(const RateCurve& curve) {
  std::string out = "r_T,rate\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    out += fmt("%.6f", curve.thresholds[i]) + "," + fmt("%.9f", curve.rates[i]) + "\n";
  return out;
}

std::string dphi_csv(const DeltaPhiHistogram& h) {
  std::string out = "bin_center_deg,probability\n";
  for (int i = 0; i < h.bins(); ++i)
    out += fmt("%.6f", h.bin_center(i)) + "," + fmt("%.9f", h.probabilities[i]) + "\n";
  return out;
}

std::string pairs_csv(const std::vector<PairRecord>& pairs) {
  std::string out = "id_a,id_b,n_a,n_b,matches,rate\n";
  for (const PairRecord& p : pairs)
    out += p.id_a + "," + p.id_b + "," + std::to_string(p.n_a) + "," +
           std::to_string(p.n_b) + "," + std::to_string(p.matches) + "," +
           fmt("%.9f", p.rate) + "\n";
  return out;
}

}  // namespace

std::string describe_config(const EvalReport& report) {
  const EvalParams& p = report.params;
  std::ostringstream out;
  out << "mode=" << kind_name(report.kind) << '\n'
      << "deformation=" << (report.deformation ? report.deformation->to_string() : "none")
      << '\n'
      << "corpus=" << report.corpus_root.string() << '\n'
      << "corpus_size=" << report.corpus_size << '\n'
      << "pairs=" << report.pairs.size() << '\n'
      << "ratio=" << fmt("%.6g", p.ratio) << '\n'
      << "rate_normalization=" << to_string(p.normalization) << '\n'
      << "intervals=" << p.pyramid.intervals << '\n'
      << "base_sigma=" << fmt("%.6g", p.pyramid.base_sigma) << '\n'
      << "assumed_input_blur=" << fmt("%.6g", p.pyramid.assumed_input_blur) << '\n'
      << "initial_doubling=" << (p.pyramid.initial_doubling ? "true" : "false") << '\n'
      << "min_dimension=" << p.pyramid.min_dimension << '\n'
      << "contrast_threshold=" << fmt("%.6g", p.detector.contrast_threshold) << '\n'
      << "edge_ratio=" << fmt("%.6g", p.detector.edge_ratio) << '\n'
      << "max_refine_iterations=" << p.detector.max_refine_iterations << '\n'
      << "orientation_bins=" << p.detector.orientation_bins << '\n'
      << "peak_ratio=" << fmt("%.6g", p.detector.peak_ratio) << '\n';
  if (!p.thresholds.empty())
    out << "grid_first=" << fmt("%.6f", p.thresholds.front()) << '\n'
        << "grid_last=" << fmt("%.6f", p.thresholds.back()) << '\n';
  out << "grid_points=" << p.thresholds.size() << '\n'
      << "dphi_bins=" << report.histogram.bins() << '\n'
      << "dphi_matches=" << report.histogram.n_matches << '\n'
      << "dphi_empty=" << (report.histogram.n_matches == 0 ? "true" : "false") << '\n';
  for (const std::string& w : report.warnings) out << "warning=" << w << '\n';
  return out.str();
}

void export_report(const EvalReport& report, const fs::path& out_dir, bool plots) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create report directory '" + out_dir.string() + "'");

  std::vector<std::pair<std::string, std::string>> files = {
      {"curve.csv", curve_csv(report.curve)},
      {"dphi.csv", dphi_csv(report.histogram)},
      {"pairs.csv", pairs_csv(report.pairs)},
      {"config.txt", describe_config(report)},
  };
  if (plots) {
    const bool fp = report.kind == CurveKind::false_positive;
    const std::string scenario =
        report.deformation ? " (" + report.deformation->to_string() + ")" : "";
    files.emplace_back(
        "curve.svg",
        render_line_chart({report.curve.thresholds, report.curve.rates},
                          {std::string(fp ? "False" : "True") + " positive rate" + scenario,
                           "matching rate threshold r_T", fp ? "P_F(r_T)" : "P_T(r_T)"},
                          0.0, 1.0));
    Series dphi;
    for (int i = 0; i < report.histogram.bins(); ++i) {
      dphi.x.push_back(report.histogram.bin_center(i));
      dphi.y.push_back(report.histogram.probabilities[i]);
    }
    files.emplace_back("dphi.svg",
                       render_line_chart(dphi,
                                         {"Matched keypoint orientation difference" + scenario,
                                          "delta phi (degrees)", "P(delta phi)"},
                                         0.0, 360.0));
  }

  std::vector<fs::path> staged;
  const auto discard = [&] {
    for (const fs::path& p : staged) fs::remove(p, ec);
  };
  for (const auto& [name, content] : files) {
    const fs::path tmp = out_dir / (name + ".tmp");
    staged.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      discard();
      throw IoError("cannot write '" + (out_dir / name).string() + "'");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(staged[i], out_dir / files[i].first, ec);
    if (ec) {
      discard();
      throw IoError("cannot move '" + staged[i].string() + "' into place");
    }
  }
}

}  // namespace siftbench
