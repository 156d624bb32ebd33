// wlf: pseudo-label generation, correction and evaluation on frame bundles.
//
// Exit codes: 0 ok, 1 other failure, 2 missing or unreadable input,
// 3 malformed config or arguments, 4 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "wlf/binary_io.hpp"
#include "wlf/bundle.hpp"
#include "wlf/error.hpp"
#include "wlf/ipg.hpp"
#include "wlf/metrics.hpp"
#include "wlf/pipeline.hpp"
#include "wlf/pvc.hpp"
#include "wlf/range_image.hpp"
#include "wlf/rsc.hpp"
#include "wlf/spg.hpp"
#include "wlf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMissingInput = 2,
  kBadConfig = 3,
  kInvariant = 4,
};

struct Options {
  std::string config;
  std::vector<std::string> frames;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> stages;
  std::optional<int> threads;
  std::string labels;  // root holding <frame_id>/sem.i32, inst.i32
  // synth
  int count = 1;
  std::string preset = "default";
  int votes = 0;
  int masks = 0;
  // spg
  bool dump = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("wlf");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("WLF_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour names it knows.
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("ignoring unknown WLF_LOG level '{}'", env);
    }
  }
}

json read_json_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw wlf::InputError("config file not found: " + path.string());
  }
  try {
    return json::parse(wlf::io::read_text(path));
  } catch (const json::parse_error& e) {
    throw wlf::ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

wlf::PipelineConfig load_config(const Options& opt) {
  wlf::PipelineConfig cfg =
      opt.config.empty() ? wlf::PipelineConfig{} : wlf::pipeline_config_from_json(read_json_file(opt.config));
  if (!opt.frames.empty()) cfg.frames = opt.frames;
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.stages) cfg.stages = wlf::parse_stages(*opt.stages);
  if (opt.threads) cfg.threads = *opt.threads;
  cfg.validate();
  return cfg;
}

std::vector<fs::path> input_frames(const wlf::PipelineConfig& cfg) {
  if (cfg.frames.empty()) {
    throw wlf::InputError("no input frames (use --frames or 'frames' in the config)");
  }
  return wlf::resolve_frames(cfg.frames);
}

// Output directory for a frame: <out>/<frame_id>, or the bundle itself.
fs::path frame_out(const Options& opt, const fs::path& bundle_dir, const std::string& frame_id) {
  if (opt.out.empty()) {
    return bundle_dir;
  }
  const fs::path dir = fs::path(opt.out) / frame_id;
  fs::create_directories(dir);
  return dir;
}

wlf::PseudoLabels input_labels(const Options& opt, const fs::path& bundle_dir,
                               const wlf::FrameBundle& bundle) {
  const fs::path dir = opt.labels.empty() ? bundle_dir : fs::path(opt.labels) / bundle.frame.frame_id;
  if (!wlf::has_labels(dir)) {
    throw wlf::InputError("no pseudo labels (sem.i32, inst.i32) under " + dir.string());
  }
  return wlf::read_labels(dir, bundle.frame.size());
}

struct FrameContext {
  wlf::ProjectedPoints proj;
  std::vector<std::int32_t> box_assign;
  wlf::RangeImage image;
  wlf::RingSegments segments;
};

FrameContext prepare(const wlf::FrameBundle& bundle, const wlf::PipelineConfig& cfg) {
  FrameContext ctx;
  ctx.proj = wlf::project_points(bundle.calib, bundle.frame);
  ctx.box_assign = wlf::crop_frustum(ctx.proj, bundle.boxes);
  ctx.image = wlf::build_range_image(bundle.frame, bundle.frame.num_beams, bundle.frame.num_columns);
  ctx.segments = wlf::dcs_dynamic(ctx.image, cfg.dcs);
  return ctx;
}

// Noisy box-local mask predictions around each ground-truth box: an
// inscribed ellipse plus Gaussian noise, with a jittered predicted box.
std::vector<wlf::StoredMask> fabricate_masks(const wlf::FrameBundle& bundle, int per_box,
                                             std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed ^ wlf::fnv1a64(bundle.frame.frame_id));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<wlf::StoredMask> out;
  int next_id = 1;
  for (const auto& box : bundle.boxes) {
    const int w = std::max(1, static_cast<int>(std::ceil(box.bounds.width())));
    const int h = std::max(1, static_cast<int>(std::ceil(box.bounds.height())));
    for (int k = 0; k < per_box; ++k) {
      wlf::StoredMask m;
      m.mask_id = next_id++;
      m.gt_box_id = box.box_id;
      m.prediction.score = 0.3 + 0.7 * unit(rng);
      const double jx = 0.1 * box.bounds.width() * noise(rng);
      const double jy = 0.1 * box.bounds.height() * noise(rng);
      m.prediction.pred_box = {box.bounds.x_min + jx, box.bounds.y_min + jy, box.bounds.x_max + jx,
                               box.bounds.y_max + jy};
      m.prediction.prob_map = wlf::ProbMap(h, w);
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          const double dx = (c + 0.5) / w - 0.5;
          const double dy = (r + 0.5) / h - 0.5;
          const double inside = dx * dx + dy * dy <= 0.25 ? 1.0 : 0.0;
          m.prediction.prob_map.at(r, c) = std::clamp(inside + sigma * noise(rng), 0.0, 1.0);
        }
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

int cmd_synth(const Options& opt) {
  if (opt.out.empty()) {
    throw wlf::ConfigError("synth needs --out");
  }
  if (opt.count < 1 || opt.votes < 0 || opt.masks < 0) {
    throw wlf::ConfigError("--count must be >= 1, --votes and --masks >= 0");
  }
  wlf::SceneConfig base;
  if (opt.preset == "dense") {
    base = wlf::SceneConfig::dense();
  } else if (opt.preset != "default") {
    throw wlf::ConfigError("unknown preset '" + opt.preset + "' (expected default or dense)");
  }
  if (!opt.config.empty()) {
    json j = read_json_file(opt.config);
    if (!j.contains("preset") && opt.preset == "dense") {
      j["preset"] = "dense";
    }
    base = wlf::scene_config_from_json(j);
  }
  if (opt.seed) base.seed = *opt.seed;
  for (int i = 0; i < opt.count; ++i) {
    wlf::SceneConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(i);
    const wlf::SyntheticScene scene = wlf::generate_scene(cfg);
    const fs::path dir = fs::path(opt.out) / scene.bundle.frame.frame_id;
    wlf::write_bundle(dir, scene.bundle);
    for (int epoch = 1; epoch <= opt.votes; ++epoch) {
      const auto scores = wlf::fabricate_scores(scene.bundle.frame, cfg.score_sigma, cfg.seed, epoch);
      wlf::save_vote_epoch(dir / "votes", epoch, wlf::foreground_scores(scores));
    }
    if (opt.masks > 0) {
      for (const auto& m : fabricate_masks(scene.bundle, opt.masks, cfg.seed, cfg.score_sigma)) {
        wlf::write_mask(dir / "masks", m);
      }
    }
    wlf::io::write_text(dir / "scene.json", wlf::scene_config_to_json(cfg).dump(2) + "\n");
    spdlog::info("synth: {} ({} points, {} boxes)", dir.string(), scene.bundle.frame.size(),
                 scene.bundle.boxes.size());
  }
  return kOk;
}

int cmd_pipeline(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  if (cfg.frames.empty()) {
    throw wlf::InputError("no input frames (use --frames or 'frames' in the config)");
  }
  const wlf::RunSummary summary = wlf::run_pipeline(cfg);
  if (summary.report) {
    std::cout << wlf::report_to_text(*summary.report, wlf::default_class_names());
  } else {
    std::cout << "processed " << summary.num_frames << " frame(s); no ground truth to evaluate\n";
  }
  return kOk;
}

int cmd_spg(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  for (const auto& path : input_frames(cfg)) {
    const wlf::FrameBundle bundle = wlf::read_bundle(path);
    const FrameContext ctx = prepare(bundle, cfg);
    const wlf::TrinaryLabels trinary = wlf::refine_by_segments(ctx.box_assign, ctx.segments);
    const wlf::PseudoLabels labels =
        wlf::generate_labels(bundle.frame, trinary, ctx.box_assign, bundle.boxes, cfg.radii);
    wlf::check_label_invariants(labels, bundle.boxes);
    const fs::path dir = frame_out(opt, path, bundle.frame.frame_id);
    wlf::write_labels(dir, labels);
    if (opt.dump) {
      wlf::write_range_dump(dir, ctx.image);
      wlf::write_segment_dump(dir, ctx.image, ctx.segments);
      wlf::io::write_array<std::int8_t>(dir / "trinary.i8", trinary);
    }
    spdlog::info("spg: {} -> {}", bundle.frame.frame_id, dir.string());
  }
  return kOk;
}

int cmd_pvc(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  for (const auto& path : input_frames(cfg)) {
    const wlf::FrameBundle bundle = wlf::read_bundle(path);
    const wlf::PseudoLabels labels = input_labels(opt, path, bundle);
    const auto proj = wlf::project_points(bundle.calib, bundle.frame);
    const auto box_assign = wlf::crop_frustum(proj, bundle.boxes);
    wlf::VoteBuffer buffer(cfg.vote_history, cfg.start_epoch);
    const fs::path votes_dir = path / "votes";
    if (!fs::is_directory(votes_dir) ||
        wlf::load_vote_history(votes_dir, bundle.frame.frame_id, buffer) == 0) {
      throw wlf::InputError("no votes_<epoch>.f32 files under " + votes_dir.string());
    }
    const wlf::PseudoLabels corrected =
        wlf::vote_correct(buffer, cfg.pvc, labels, bundle.frame.frame_id, box_assign, bundle.boxes);
    wlf::check_label_invariants(corrected, bundle.boxes);
    wlf::write_labels(frame_out(opt, path, bundle.frame.frame_id), corrected);
  }
  return kOk;
}

int cmd_rsc(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  for (const auto& path : input_frames(cfg)) {
    const wlf::FrameBundle bundle = wlf::read_bundle(path);
    const wlf::PseudoLabels labels = input_labels(opt, path, bundle);
    const auto image =
        wlf::build_range_image(bundle.frame, bundle.frame.num_beams, bundle.frame.num_columns);
    const auto segments = wlf::dcs_dynamic(image, cfg.dcs);
    const wlf::PseudoLabels corrected = wlf::apply_rsc(labels, segments, cfg.rsc, bundle.boxes);
    wlf::check_label_invariants(corrected, bundle.boxes);
    wlf::write_labels(frame_out(opt, path, bundle.frame.frame_id), corrected);
  }
  return kOk;
}

int cmd_ipg(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  for (const auto& path : input_frames(cfg)) {
    const wlf::FrameBundle bundle = wlf::read_bundle(path);
    const fs::path masks_dir = path / "masks";
    if (!fs::is_directory(masks_dir)) {
      throw wlf::InputError("no masks directory under " + path.string());
    }
    std::map<std::int32_t, std::vector<wlf::MaskPrediction>> by_box;
    for (auto& m : wlf::read_masks(masks_dir)) {
      by_box[m.gt_box_id].push_back(std::move(m.prediction));
    }
    const fs::path dir = frame_out(opt, path, bundle.frame.frame_id);
    json summary = json::array();
    for (const auto& box : bundle.boxes) {
      const auto it = by_box.find(box.box_id);
      if (it == by_box.end()) {
        continue;
      }
      std::vector<double> scores;
      std::vector<double> ious;
      for (const auto& p : it->second) {
        scores.push_back(p.score);
        ious.push_back(wlf::box_iou(p.pred_box, box.bounds));
      }
      const wlf::ProbMap fused = wlf::weight_masks(it->second, box, cfg.ipg.k);
      const wlf::TrinaryMask target = wlf::binarize(fused, cfg.ipg);
      const std::string stem = std::to_string(box.box_id);
      wlf::write_prob_map(dir / ("fused_" + stem + ".f32"), fused);
      wlf::io::write_array<std::int8_t>(dir / ("pseudo_" + stem + ".i8"), target.values);
      summary.push_back({{"box_id", box.box_id},
                         {"height", fused.height},
                         {"width", fused.width},
                         {"num_masks", it->second.size()},
                         {"weights", wlf::fusion_weights(scores, ious, cfg.ipg.k)}});
    }
    wlf::io::write_text(dir / "ipg.json", summary.dump(2) + "\n");
  }
  return kOk;
}

int cmd_eval(const Options& opt) {
  const wlf::PipelineConfig cfg = load_config(opt);
  wlf::MetricAccumulator acc;
  std::size_t evaluated = 0;
  for (const auto& path : input_frames(cfg)) {
    const wlf::FrameBundle bundle = wlf::read_bundle(path);
    if (!bundle.frame.has_ground_truth()) {
      spdlog::warn("eval: {} has no ground truth; skipped", bundle.frame.frame_id);
      continue;
    }
    const wlf::PseudoLabels labels = input_labels(opt, path, bundle);
    acc.add_frame(labels, *bundle.frame.gt_semantic, *bundle.frame.gt_instance);
    ++evaluated;
  }
  if (evaluated == 0) {
    throw wlf::InputError("no frame with ground truth to evaluate");
  }
  const wlf::MetricReport report = acc.report();
  const auto& names = wlf::default_class_names();
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    wlf::io::write_text(fs::path(opt.out) / "report.json", wlf::report_to_json(report, names).dump(2) + "\n");
    wlf::io::write_text(fs::path(opt.out) / "report.txt", wlf::report_to_text(report, names));
  }
  std::cout << wlf::report_to_text(report, names);
  return kOk;
}

void add_common(CLI::App* app, Options& opt) {
  app->add_option("--config", opt.config, "JSON config file");
  app->add_option("--frames", opt.frames, "Bundle directories or glob patterns");
  app->add_option("--out", opt.out, "Output directory");
  app->add_option("--seed", opt.seed, "Random seed");
  app->add_option("--threads", opt.threads, "Worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options opt;
  CLI::App app{"Weakly supervised LiDAR pseudo-label tools"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate synthetic frame bundles");
  add_common(synth, opt);
  synth->add_option("--count", opt.count, "Number of frames (seeds seed .. seed+count-1)");
  synth->add_option("--preset", opt.preset, "Scene preset: default or dense");
  synth->add_option("--votes", opt.votes, "Also write this many epochs of fabricated teacher votes");
  synth->add_option("--masks", opt.masks, "Also write this many fabricated 2D masks per box");

  auto* pipeline = app.add_subcommand("pipeline", "Run the full label pipeline");
  add_common(pipeline, opt);
  pipeline->add_option("--stages", opt.stages, "Comma-separated stages: spg,pvc,rsc");

  auto* spg = app.add_subcommand("spg", "Frustum crop, ring segments and per-box clustering");
  add_common(spg, opt);
  spg->add_flag("--dump", opt.dump, "Write range.f32, segments.u32 and trinary.i8");

  auto* pvc = app.add_subcommand("pvc", "Correct labels by historical votes (<bundle>/votes)");
  add_common(pvc, opt);
  pvc->add_option("--labels", opt.labels, "Root of <frame_id>/ label directories");

  auto* rsc = app.add_subcommand("rsc", "Correct labels by ring-segment votes");
  add_common(rsc, opt);
  rsc->add_option("--labels", opt.labels, "Root of <frame_id>/ label directories");

  auto* ipg = app.add_subcommand("ipg", "Fuse 2D mask predictions (<bundle>/masks) per box");
  add_common(ipg, opt);

  auto* eval = app.add_subcommand("eval", "Score pseudo labels against ground truth");
  add_common(eval, opt);
  eval->add_option("--labels", opt.labels, "Root of <frame_id>/ label directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*synth) return cmd_synth(opt);
    if (*pipeline) return cmd_pipeline(opt);
    if (*spg) return cmd_spg(opt);
    if (*pvc) return cmd_pvc(opt);
    if (*rsc) return cmd_rsc(opt);
    if (*ipg) return cmd_ipg(opt);
    if (*eval) return cmd_eval(opt);
  } catch (const wlf::InputError& e) {
    spdlog::error("{}", e.what());
    return kMissingInput;
  } catch (const wlf::InvalidFrameError& e) {
    spdlog::error("invalid frame: {}", e.what());
    return kMissingInput;
  } catch (const wlf::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kBadConfig;
  } catch (const wlf::InvariantError& e) {
    spdlog::error("invariant violated: {}", e.what());
    return kInvariant;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kFailure;
}
