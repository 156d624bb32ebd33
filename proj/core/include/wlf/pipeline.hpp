#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wlf/bundle.hpp"
#include "wlf/ccl.hpp"
#include "wlf/dcs.hpp"
#include "wlf/ipg.hpp"
#include "wlf/labels.hpp"
#include "wlf/losses.hpp"
#include "wlf/metrics.hpp"
#include "wlf/pvc.hpp"
#include "wlf/rsc.hpp"

namespace wlf {

// Mirrors the ablation rows: segment refinement, historical voting and
// ring-segment correction switch on and off independently.
struct StageToggles {
  bool spg = true;
  bool pvc = false;
  bool rsc = false;
};

StageToggles parse_stages(std::string_view csv);
std::string stages_to_string(const StageToggles& stages);

struct PipelineConfig {
  std::vector<std::string> frames;  // bundle directories or glob patterns
  std::string out_dir;
  DcsConfig dcs;
  ClassRadii radii;
  PvcConfig pvc;
  int vote_history = 4;  // N_his
  int start_epoch = 1;   // E_s
  RscConfig rsc;
  IpgConfig ipg;
  LossWeights loss_weights;
  StageToggles stages;
  // Sigma of the simulated teacher when a bundle has no stored votes.
  double score_sigma = 0.2;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

// Missing keys keep their defaults; unknown keys or wrong types throw
// ConfigError.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

struct StageTimings {
  double project_ms = 0.0;
  double frustum_ms = 0.0;
  double dcs_ms = 0.0;
  double spg_ms = 0.0;
  double pvc_ms = 0.0;
  double rsc_ms = 0.0;

  StageTimings& operator+=(const StageTimings& o);
};

struct FrameOutput {
  PseudoLabels labels;
  StageTimings timings;
  bool pvc_applied = false;
};

// project -> frustum -> DCS -> SPG -> (PVC) -> (RSC) for one bundle. Votes
// come from `votes_dir` when it holds votes_<epoch>.f32 files, otherwise from
// a simulated teacher on the ground truth.
FrameOutput process_frame(const FrameBundle& bundle, const PipelineConfig& cfg,
                          const std::filesystem::path& votes_dir = {});

// Expands directories and glob patterns into sorted bundle directories.
// Throws InputError if a pattern matches nothing.
std::vector<std::filesystem::path> resolve_frames(const std::vector<std::string>& patterns);

struct RunSummary {
  std::size_t num_frames = 0;
  std::optional<MetricReport> report;
  StageTimings timings;
};

// Processes every frame and writes:
//   <out>/<frame_id>/sem.i32, inst.i32 (+ report.json with ground truth)
//   <out>/report.json, <out>/report.txt
//   <out>/run.json (config hash, version, stage timings)
RunSummary run_pipeline(const PipelineConfig& cfg);

std::uint64_t fnv1a64(std::string_view data);
std::string library_version();

}  // namespace wlf
