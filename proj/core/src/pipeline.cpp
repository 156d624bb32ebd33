#include "wlf/pipeline.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <spdlog/spdlog.h>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"
#include "wlf/range_image.hpp"
#include "wlf/spg.hpp"
#include "wlf/synth.hpp"

using nlohmann::json;

namespace wlf {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError("'" + where + "' must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown config key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool is_bundle_dir(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::is_directory(p, ec) &&
         std::filesystem::is_regular_file(p / kManifestFile, ec);
}

json timings_json(const StageTimings& t) {
  return json{{"project_ms", t.project_ms}, {"frustum_ms", t.frustum_ms}, {"dcs_ms", t.dcs_ms},
              {"spg_ms", t.spg_ms},         {"pvc_ms", t.pvc_ms},         {"rsc_ms", t.rsc_ms}};
}

struct FrameSlot {
  std::string frame_id;
  PseudoLabels labels;
  std::optional<std::vector<std::int32_t>> gt_semantic;
  std::optional<std::vector<std::int32_t>> gt_instance;
  StageTimings timings;
  std::exception_ptr error;
};

}  // namespace

StageToggles parse_stages(std::string_view csv) {
  StageToggles t{false, false, false};
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t end = std::min(csv.find(',', pos), csv.size());
    std::string_view tok = csv.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok == "spg") {
      t.spg = true;
    } else if (tok == "pvc") {
      t.pvc = true;
    } else if (tok == "rsc") {
      t.rsc = true;
    } else if (!tok.empty() && tok != "ccl") {
      throw ConfigError("unknown stage '" + std::string(tok) + "' (expected spg, pvc, rsc)");
    }
    pos = end + 1;
  }
  return t;
}

std::string stages_to_string(const StageToggles& stages) {
  std::string out = "ccl";
  if (stages.spg) out += ",spg";
  if (stages.pvc) out += ",pvc";
  if (stages.rsc) out += ",rsc";
  return out;
}

void PipelineConfig::validate() const {
  dcs.validate();
  radii.validate();
  if (vote_history < 1) {
    throw ConfigError("pvc.history must be >= 1");
  }
  if (start_epoch < 0) {
    throw ConfigError("pvc.start_epoch must be >= 0");
  }
  pvc.validate(vote_history);
  rsc.validate();
  ipg.validate();
  loss_weights.validate();
  if (!(score_sigma >= 0.0)) {
    throw ConfigError("score_sigma must be non-negative");
  }
  if (threads < 1) {
    throw ConfigError("threads must be >= 1");
  }
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig cfg;
  try {
    check_keys(j, {"frames", "out", "dcs", "radii", "pvc", "rsc", "ipg", "loss_weights", "stages",
                   "score_sigma", "seed", "threads"},
               "config");
    if (j.contains("frames")) {
      const auto& f = j["frames"];
      cfg.frames = f.is_string() ? std::vector<std::string>{f.get<std::string>()}
                                 : f.get<std::vector<std::string>>();
    }
    read_field(j, "out", cfg.out_dir);
    if (j.contains("dcs")) {
      const auto& d = j["dcs"];
      check_keys(d, {"window_base", "depth_base", "reference_range"}, "dcs");
      read_field(d, "window_base", cfg.dcs.window_base);
      read_field(d, "depth_base", cfg.dcs.depth_base);
      read_field(d, "reference_range", cfg.dcs.reference_range);
    }
    if (j.contains("radii")) {
      const auto& r = j["radii"];
      check_keys(r, {"vehicle", "pedestrian", "cyclist"}, "radii");
      read_field(r, "vehicle", cfg.radii.radius[0]);
      read_field(r, "pedestrian", cfg.radii.radius[1]);
      read_field(r, "cyclist", cfg.radii.radius[2]);
    }
    if (j.contains("pvc")) {
      const auto& p = j["pvc"];
      check_keys(p, {"tau_high", "tau_low", "reliable_count", "history", "start_epoch"}, "pvc");
      read_field(p, "tau_high", cfg.pvc.tau_high);
      read_field(p, "tau_low", cfg.pvc.tau_low);
      read_field(p, "reliable_count", cfg.pvc.reliable_count);
      read_field(p, "history", cfg.vote_history);
      read_field(p, "start_epoch", cfg.start_epoch);
    }
    if (j.contains("rsc")) {
      const auto& r = j["rsc"];
      check_keys(r, {"t1", "t2"}, "rsc");
      read_field(r, "t1", cfg.rsc.t1);
      read_field(r, "t2", cfg.rsc.t2);
    }
    if (j.contains("ipg")) {
      const auto& i = j["ipg"];
      check_keys(i, {"k", "tau_low", "tau_high"}, "ipg");
      read_field(i, "k", cfg.ipg.k);
      read_field(i, "tau_low", cfg.ipg.tau_low);
      read_field(i, "tau_high", cfg.ipg.tau_high);
    }
    if (j.contains("loss_weights")) {
      const auto& w = j["loss_weights"];
      check_keys(w, {"boxinst", "pseudo", "cscs_3d_to_2d", "cls", "vote", "cscs_2d_to_3d"},
                 "loss_weights");
      read_field(w, "boxinst", cfg.loss_weights.boxinst);
      read_field(w, "pseudo", cfg.loss_weights.pseudo);
      read_field(w, "cscs_3d_to_2d", cfg.loss_weights.cscs_3d_to_2d);
      read_field(w, "cls", cfg.loss_weights.cls);
      read_field(w, "vote", cfg.loss_weights.vote);
      read_field(w, "cscs_2d_to_3d", cfg.loss_weights.cscs_2d_to_3d);
    }
    if (j.contains("stages")) {
      cfg.stages = parse_stages(j["stages"].get<std::string>());
    }
    read_field(j, "score_sigma", cfg.score_sigma);
    read_field(j, "seed", cfg.seed);
    read_field(j, "threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
  return json{
      {"frames", cfg.frames},
      {"out", cfg.out_dir},
      {"dcs",
       {{"window_base", cfg.dcs.window_base},
        {"depth_base", cfg.dcs.depth_base},
        {"reference_range", cfg.dcs.reference_range}}},
      {"radii",
       {{"vehicle", cfg.radii.radius[0]},
        {"pedestrian", cfg.radii.radius[1]},
        {"cyclist", cfg.radii.radius[2]}}},
      {"pvc",
       {{"tau_high", cfg.pvc.tau_high},
        {"tau_low", cfg.pvc.tau_low},
        {"reliable_count", cfg.pvc.reliable_count},
        {"history", cfg.vote_history},
        {"start_epoch", cfg.start_epoch}}},
      {"rsc", {{"t1", cfg.rsc.t1}, {"t2", cfg.rsc.t2}}},
      {"ipg", {{"k", cfg.ipg.k}, {"tau_low", cfg.ipg.tau_low}, {"tau_high", cfg.ipg.tau_high}}},
      {"loss_weights",
       {{"boxinst", cfg.loss_weights.boxinst},
        {"pseudo", cfg.loss_weights.pseudo},
        {"cscs_3d_to_2d", cfg.loss_weights.cscs_3d_to_2d},
        {"cls", cfg.loss_weights.cls},
        {"vote", cfg.loss_weights.vote},
        {"cscs_2d_to_3d", cfg.loss_weights.cscs_2d_to_3d}}},
      {"stages", stages_to_string(cfg.stages)},
      {"score_sigma", cfg.score_sigma},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
  };
}

StageTimings& StageTimings::operator+=(const StageTimings& o) {
  project_ms += o.project_ms;
  frustum_ms += o.frustum_ms;
  dcs_ms += o.dcs_ms;
  spg_ms += o.spg_ms;
  pvc_ms += o.pvc_ms;
  rsc_ms += o.rsc_ms;
  return *this;
}

FrameOutput process_frame(const FrameBundle& bundle, const PipelineConfig& cfg,
                          const std::filesystem::path& votes_dir) {
  const Frame& frame = bundle.frame;
  validate_frame(frame);
  FrameOutput out;

  auto t0 = Clock::now();
  const ProjectedPoints proj = project_points(bundle.calib, frame);
  out.timings.project_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const std::vector<std::int32_t> box_assign = crop_frustum(proj, bundle.boxes);
  out.timings.frustum_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const RangeImage image = build_range_image(frame, frame.num_beams, frame.num_columns);
  const RingSegments segments = dcs_dynamic(image, cfg.dcs);
  out.timings.dcs_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const TrinaryLabels trinary =
      cfg.stages.spg ? refine_by_segments(box_assign, segments) : frustum_trinary(box_assign);
  out.labels = generate_labels(frame, trinary, box_assign, bundle.boxes, cfg.radii);
  out.timings.spg_ms = elapsed_ms(t0);

  if (cfg.stages.pvc) {
    t0 = Clock::now();
    VoteBuffer buffer(cfg.vote_history, cfg.start_epoch);
    std::size_t loaded = 0;
    if (!votes_dir.empty() && std::filesystem::is_directory(votes_dir)) {
      loaded = load_vote_history(votes_dir, frame.frame_id, buffer);
    }
    if (loaded == 0 && frame.gt_semantic) {
      // Simulated teacher: one noisy score vector per epoch.
      const std::uint64_t seed = cfg.seed ^ fnv1a64(frame.frame_id);
      for (int epoch = 1; epoch <= cfg.vote_history; ++epoch) {
        buffer.record_epoch(frame.frame_id,
                            foreground_scores(fabricate_scores(frame, cfg.score_sigma, seed, epoch)));
      }
      buffer.set_current_epoch(cfg.vote_history);
      loaded = static_cast<std::size_t>(cfg.vote_history);
    }
    if (loaded > 0) {
      out.labels = vote_correct(buffer, cfg.pvc, out.labels, frame.frame_id, box_assign, bundle.boxes);
      out.pvc_applied = true;
    } else {
      spdlog::warn("frame {}: no stored votes and no ground truth; skipping PVC", frame.frame_id);
    }
    out.timings.pvc_ms = elapsed_ms(t0);
  }

  if (cfg.stages.rsc) {
    t0 = Clock::now();
    out.labels = apply_rsc(out.labels, segments, cfg.rsc, bundle.boxes);
    out.timings.rsc_ms = elapsed_ms(t0);
  }

  check_label_invariants(out.labels, bundle.boxes);
  return out;
}

std::vector<std::filesystem::path> resolve_frames(const std::vector<std::string>& patterns) {
  std::set<std::filesystem::path> found;
  for (const auto& pattern : patterns) {
    std::vector<std::filesystem::path> candidates;
    const std::filesystem::path p(pattern);
    std::error_code ec;
    if (std::filesystem::is_directory(p, ec)) {
      candidates.push_back(p);
    } else {
      glob_t g{};
      if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) {
          candidates.emplace_back(g.gl_pathv[i]);
        }
      }
      globfree(&g);
    }
    std::size_t before = found.size();
    for (const auto& c : candidates) {
      if (is_bundle_dir(c)) {
        found.insert(c.lexically_normal());
      } else if (std::filesystem::is_directory(c, ec)) {
        // A directory of bundles.
        for (const auto& entry : std::filesystem::directory_iterator(c)) {
          if (is_bundle_dir(entry.path())) {
            found.insert(entry.path().lexically_normal());
          }
        }
      }
    }
    if (found.size() == before) {
      throw InputError("no frame bundles match '" + pattern + "'");
    }
  }
  return {found.begin(), found.end()};
}

RunSummary run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.frames.empty()) {
    throw InputError("no input frames given");
  }
  if (cfg.out_dir.empty()) {
    throw ConfigError("no output directory given");
  }
  const auto paths = resolve_frames(cfg.frames);
  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  spdlog::info("pipeline: {} frame(s), stages {}, {} thread(s)", paths.size(),
               stages_to_string(cfg.stages), cfg.threads);

  const auto wall_start = Clock::now();
  std::vector<FrameSlot> slots(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      FrameSlot& slot = slots[i];
      try {
        FrameBundle bundle = read_bundle(paths[i]);
        FrameOutput result = process_frame(bundle, cfg, paths[i] / "votes");
        slot.frame_id = bundle.frame.frame_id;
        slot.timings = result.timings;
        slot.gt_semantic = std::move(bundle.frame.gt_semantic);
        slot.gt_instance = std::move(bundle.frame.gt_instance);
        slot.labels = std::move(result.labels);
        spdlog::debug("frame {} done", slot.frame_id);
      } catch (...) {
        slot.error = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(std::max<std::size_t>(paths.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }
  for (const auto& slot : slots) {
    if (slot.error) {
      std::rethrow_exception(slot.error);
    }
  }

  std::set<std::string> seen;
  for (const auto& slot : slots) {
    if (!seen.insert(slot.frame_id).second) {
      throw ArgumentError("duplicate frame id '" + slot.frame_id + "' among inputs");
    }
  }

  RunSummary summary;
  summary.num_frames = slots.size();
  MetricAccumulator total;
  bool any_gt = false;
  double frame_miou_sum = 0.0;
  std::size_t frame_miou_count = 0;
  const auto& names = default_class_names();
  for (const auto& slot : slots) {
    const auto dir = out_dir / slot.frame_id;
    std::filesystem::create_directories(dir);
    write_labels(dir, slot.labels);
    summary.timings += slot.timings;
    if (slot.gt_semantic && slot.gt_instance) {
      any_gt = true;
      total.add_frame(slot.labels, *slot.gt_semantic, *slot.gt_instance);
      MetricAccumulator one;
      one.add_frame(slot.labels, *slot.gt_semantic, *slot.gt_instance);
      const MetricReport r = one.report();
      if (r.iou.miou) {
        frame_miou_sum += *r.iou.miou;
        ++frame_miou_count;
      }
      io::write_text(dir / "report.json", report_to_json(r, names).dump(2) + "\n");
    }
  }

  if (any_gt) {
    summary.report = total.report();
    json report = report_to_json(*summary.report, names);
    report["stages"] = stages_to_string(cfg.stages);
    report["frame_mean_miou"] =
        frame_miou_count > 0 ? json(frame_miou_sum / static_cast<double>(frame_miou_count)) : json();
    io::write_text(out_dir / "report.json", report.dump(2) + "\n");
    io::write_text(out_dir / "report.txt", report_to_text(*summary.report, names));
  }

  const std::string canonical = pipeline_config_to_json(cfg).dump();
  json run{{"config_hash", hex64(fnv1a64(canonical))},
           {"versions",
            {{"wlf", library_version()},
             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                           "." + std::to_string(EIGEN_MINOR_VERSION)},
             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
           {"num_frames", summary.num_frames},
           {"stages", stages_to_string(cfg.stages)},
           {"threads", cfg.threads},
           {"timings", timings_json(summary.timings)},
           {"wall_ms", elapsed_ms(wall_start)}};
  io::write_text(out_dir / "run.json", run.dump(2) + "\n");
  spdlog::info("pipeline: wrote {}", out_dir.string());
  return summary;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string library_version() { return WLF_VERSION; }

}  // namespace wlf
