#include "siftbench/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "siftbench/deform.hpp"
#include "siftbench/errors.hpp"
#include "siftbench/evaluation.hpp"
#include "siftbench/image.hpp"
#include "siftbench/keypoints.hpp"
#include "siftbench/matching.hpp"

namespace siftbench {

namespace fs = std::filesystem;

namespace {

struct DetectionFlags {
  PyramidParams pyramid;
  DetectorParams detector;

  void add_to(CLI::App* app) {
    app->add_option("--intervals", pyramid.intervals, "Scales per octave")
        ->capture_default_str();
    app->add_option("--sigma", pyramid.base_sigma, "Base blur of each octave")
        ->capture_default_str();
    app->add_option("--input-blur", pyramid.assumed_input_blur,
                    "Blur assumed present in the input")
        ->capture_default_str();
    app->add_flag("--double", pyramid.initial_doubling,
                  "Upsample the input 2x before building octaves");
    app->add_option("--min-dim", pyramid.min_dimension, "Smallest octave side")
        ->capture_default_str();
    app->add_option("--contrast", detector.contrast_threshold,
                    "Minimum |D| at the interpolated extremum")
        ->capture_default_str();
    app->add_option("--edge-ratio", detector.edge_ratio,
                    "Maximum ratio of principal curvatures")
        ->capture_default_str();
    app->add_option("--peak-ratio", detector.peak_ratio,
                    "Secondary orientation peak threshold, relative to the maximum")
        ->capture_default_str();
  }

  void validate() const {
    pyramid.validate();
    detector.validate();
  }
};

void validate_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw ArgumentError("--ratio must lie in (0, 1], got " + std::to_string(ratio));
}

bool is_keypoint_file(const std::string& path) {
  return fs::path(path).extension() == ".kp";
}

std::string format_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Each subcommand splits into a validation step (usage errors, exit 2) and
// an execution step (runtime errors, exit 1). Nothing is written before
// validation passes.
struct Command {
  std::function<void()> validate;
  std::function<void(std::ostream&)> run;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sift-bench: SIFT detection, matching and deformation benchmark"};
  app.require_subcommand(1);
  app.footer(std::string("Deformation specs: ") + kDeformationGrammar);

  // detect -----------------------------------------------------------------
  auto* detect = app.add_subcommand("detect", "Detect and describe keypoints of an image");
  std::string detect_image;
  std::string detect_out;
  std::string dump_dir;
  DetectionFlags detect_flags;
  detect->add_option("image", detect_image, "Input PGM/PNG image")->required();
  detect->add_option("--out", detect_out, "Keypoint file to write");
  detect->add_option("--dump-dir", dump_dir,
                     "Write Gaussian and DoG pyramid levels as PGM files here");
  detect_flags.add_to(detect);

  // match ------------------------------------------------------------------
  auto* match = app.add_subcommand(
      "match", "Match two images, or two keypoint files (.kp), and print the rate");
  std::string match_a;
  std::string match_b;
  std::string match_out;
  double match_ratio = 0.8;
  DetectionFlags match_flags;
  match->add_option("a", match_a, "First image or keypoint file")->required();
  match->add_option("b", match_b, "Second image or keypoint file")->required();
  match->add_option("--ratio", match_ratio, "Nearest/second-nearest distance ratio, (0,1]")
      ->capture_default_str();
  match->add_option("--out", match_out, "Match dump file to write");
  std::string match_norm = "max";
  match->add_option("--rate-norm", match_norm,
                    "Rate denominator: max or min of the two keypoint counts")
      ->capture_default_str();
  match_flags.add_to(match);

  // deform -----------------------------------------------------------------
  auto* deform = app.add_subcommand("deform", "Apply a parametric deformation to an image");
  std::string deform_image;
  std::string deform_spec;
  std::string deform_out;
  deform->add_option("image", deform_image, "Input PGM/PNG image")->required();
  deform->add_option("--spec", deform_spec,
                     std::string("Deformation: ") + kDeformationGrammar)
      ->required();
  deform->add_option("--out", deform_out, "Output PGM image")->required();
  deform->footer(std::string("Examples: rot:90, scale:2.0, fisheye:1.0, blur:30, blur:30@45"));

  // eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Run the false/true positive evaluation over a corpus");
  std::string corpus_dir;
  std::string mode = "fp";
  std::string eval_spec;
  std::string grid_text = "0:0.02:1";
  std::string eval_out;
  std::string cache_dir;
  unsigned jobs = 1;
  bool plot = false;
  double eval_ratio = 0.8;
  DetectionFlags eval_flags;
  eval->add_option("--corpus", corpus_dir, "Directory of PGM/PNG images")->required();
  eval->add_option("--mode", mode, "fp: distinct image pairs, tp: image vs deformed copy")
      ->check(CLI::IsMember({"fp", "tp"}))
      ->capture_default_str();
  eval->add_option("--spec", eval_spec,
                   std::string("Deformation for tp mode: ") + kDeformationGrammar);
  eval->add_option("--grid", grid_text, "Threshold grid start:step:end (end inclusive)")
      ->capture_default_str();
  eval->add_option("--out", eval_out, "Report directory")->required();
  eval->add_option("--jobs", jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_flag("--plot", plot, "Also write curve.svg and dphi.svg");
  eval->add_option("--ratio", eval_ratio, "Nearest/second-nearest distance ratio, (0,1]")
      ->capture_default_str();
  eval->add_option("--cache", cache_dir, "Directory for cached keypoint files");
  std::string eval_norm = "max";
  eval->add_option("--rate-norm", eval_norm,
                   "Rate denominator: max or min of the two keypoint counts")
      ->capture_default_str();
  eval_flags.add_to(eval);

  for (CLI::App* sub : {detect, match, eval})
    sub->footer(std::string("Deformation specs: ") + kDeformationGrammar);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Command command;
  std::optional<Deformation> deformation;
  std::vector<double> grid;
  RateNormalization normalization = RateNormalization::larger_set;

  if (*detect) {
    command.validate = [&] { detect_flags.validate(); };
    command.run = [&](std::ostream& o) {
      const GrayImage img = load_image(detect_image);
      if (!dump_dir.empty()) {
        const GaussianPyramid gp = build_gaussian_pyramid(img, detect_flags.pyramid);
        dump_pyramid(gp, fs::path(dump_dir) / "gaussian");
        dump_pyramid(build_dog_pyramid(gp), fs::path(dump_dir) / "dog");
      }
      const auto features = quantize_features(
          detect_and_describe(img, detect_flags.pyramid, detect_flags.detector));
      if (!detect_out.empty()) save_features(features, detect_out);
      o << "count=" << features.size() << '\n';
    };
  } else if (*match) {
    command.validate = [&] {
      match_flags.validate();
      validate_ratio(match_ratio);
      normalization = parse_rate_normalization(match_norm);
      if (is_keypoint_file(match_a) != is_keypoint_file(match_b))
        throw ArgumentError("cannot mix an image and a keypoint file (" + match_a + ", " +
                            match_b + ")");
    };
    command.run = [&](std::ostream& o) {
      const auto features_of = [&](const std::string& path) {
        if (is_keypoint_file(path)) return load_features(path);
        return quantize_features(detect_and_describe(load_image(path), match_flags.pyramid,
                                                     match_flags.detector));
      };
      const auto a = features_of(match_a);
      const auto b = features_of(match_b);
      const MatchResult result = match_descriptors(a, b, match_ratio, normalization);
      if (!match_out.empty()) save_matches(result, match_out);
      o << "r=" << format_fixed(result.rate) << " matches=" << result.matches.size()
        << " n_a=" << result.n_a << " n_b=" << result.n_b << '\n';
    };
  } else if (*deform) {
    command.validate = [&] { deformation = Deformation::parse(deform_spec); };
    command.run = [&](std::ostream& o) {
      const GrayImage result = apply(*deformation, load_image(deform_image));
      save_pgm(result, deform_out);
      o << "wrote " << deform_out << " (" << result.width() << "x" << result.height()
        << ")\n";
    };
  } else if (*eval) {
    command.validate = [&] {
      eval_flags.validate();
      validate_ratio(eval_ratio);
      normalization = parse_rate_normalization(eval_norm);
      grid = parse_grid(grid_text);
      if (mode == "tp") {
        if (eval_spec.empty()) throw ArgumentError("--mode tp requires --spec");
        deformation = Deformation::parse(eval_spec);
      } else if (!eval_spec.empty()) {
        throw ArgumentError("--spec is only valid with --mode tp");
      }
    };
    command.run = [&](std::ostream& o) {
      EvalParams params;
      params.pyramid = eval_flags.pyramid;
      params.detector = eval_flags.detector;
      params.ratio = eval_ratio;
      params.normalization = normalization;
      params.thresholds = grid;
      params.jobs = jobs;
      if (!cache_dir.empty()) params.cache_dir = fs::path(cache_dir);
      const Corpus corpus = load_corpus(corpus_dir);
      for (const std::string& w : corpus.warnings) err << "warning: " << w << '\n';
      const EvalReport report = mode == "fp"
                                    ? false_positive_curve(corpus, params)
                                    : true_positive_curve(corpus, *deformation, params);
      export_report(report, eval_out, plot);
      const std::size_t mid = grid.size() / 2;
      o << "pairs=" << report.pairs.size() << " P(" << format_short(grid[mid])
        << ")=" << format_fixed(report.curve.rates[mid]) << '\n';
    };
  }

  try {
    command.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    command.run(out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace siftbench
