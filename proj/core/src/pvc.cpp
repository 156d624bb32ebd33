#include "wlf/pvc.hpp"

#include <algorithm>
#include <regex>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"
#include "wlf/losses.hpp"

namespace fs = std::filesystem;

namespace wlf {

void PvcConfig::validate(int history) const {
  if (!(tau_low >= 0.0 && tau_low <= tau_high && tau_high <= 1.0)) {
    throw ConfigError("PVC thresholds need 0 <= tau_low <= tau_high <= 1");
  }
  if (reliable_count < 1 || reliable_count > history) {
    throw ConfigError("PVC reliable_count must lie in [1, " + std::to_string(history) + "]");
  }
}

VoteBuffer::VoteBuffer(int capacity, int start_epoch)
    : capacity_(capacity), start_epoch_(start_epoch) {
  if (capacity < 1) {
    throw ConfigError("vote buffer capacity must be >= 1");
  }
}

void VoteBuffer::record_epoch(const std::string& frame_id, std::vector<float> scores) {
  for (float s : scores) {
    if (!(s >= 0.0f && s <= 1.0f)) {
      throw ArgumentError("frame " + frame_id + ": vote scores must lie in [0, 1]");
    }
  }
  auto [it, inserted] = frames_.try_emplace(frame_id);
  FrameHistory& h = it->second;
  if (inserted) {
    h.num_points = scores.size();
  } else if (scores.size() != h.num_points) {
    throw ArgumentError("frame " + frame_id + ": expected " + std::to_string(h.num_points) +
                        " scores, got " + std::to_string(scores.size()));
  }
  h.epochs.push_back(std::move(scores));
  while (h.epochs.size() > static_cast<std::size_t>(capacity_)) {
    h.epochs.pop_front();
  }
}

bool VoteBuffer::contains(const std::string& frame_id) const { return frames_.contains(frame_id); }

std::size_t VoteBuffer::stored_epochs(const std::string& frame_id) const {
  const auto it = frames_.find(frame_id);
  return it == frames_.end() ? 0 : it->second.epochs.size();
}

const std::deque<std::vector<float>>& VoteBuffer::history(const std::string& frame_id) const {
  const auto it = frames_.find(frame_id);
  if (it == frames_.end()) {
    throw ArgumentError("no vote history for frame " + frame_id);
  }
  return it->second.epochs;
}

PseudoLabels vote_correct(const VoteBuffer& buffer, const PvcConfig& cfg, const PseudoLabels& labels,
                          const std::string& frame_id, std::span<const std::int32_t> box_assign,
                          std::span<const Box2D> boxes) {
  if (!(cfg.tau_low >= 0.0 && cfg.tau_low <= cfg.tau_high && cfg.tau_high <= 1.0) ||
      cfg.reliable_count < 1) {
    throw ConfigError("invalid PVC configuration");
  }
  const auto& epochs = buffer.history(frame_id);
  const std::size_t n = labels.size();
  if (box_assign.size() != n || labels.instance.size() != n) {
    throw ArgumentError("labels and box assignment differ in length");
  }
  if (!epochs.empty() && epochs.front().size() != n) {
    throw ArgumentError("frame " + frame_id + ": vote history covers " +
                        std::to_string(epochs.front().size()) + " points, labels " +
                        std::to_string(n));
  }

  PseudoLabels out = labels;
  if (buffer.current_epoch() < buffer.start_epoch() ||
      epochs.size() < static_cast<std::size_t>(buffer.capacity())) {
    return out;
  }

  const int needed = cfg.reliable_count;
  for (std::size_t i = 0; i < n; ++i) {
    int fg = 0;
    int bg = 0;
    for (const auto& scores : epochs) {
      const double s = scores[i];
      if (s > cfg.tau_high) {
        ++fg;
      } else if (s < cfg.tau_low) {
        ++bg;
      }
    }
    bool to_fg = fg >= needed;
    bool to_bg = bg >= needed;
    if (to_fg && to_bg) {
      // Only reachable with T_h <= N_his / 2; the larger vote wins.
      to_fg = fg > bg;
      to_bg = bg > fg;
    }
    if (to_fg && box_assign[i] > 0) {
      const Box2D* box = find_box(boxes, box_assign[i]);
      if (box != nullptr) {
        out.semantic[i] = box->class_id;
        out.instance[i] = box->box_id;
      }
    } else if (to_bg) {
      out.semantic[i] = kBackgroundClass;
      out.instance[i] = 0;
    }
  }
  return out;
}

std::vector<float> foreground_scores(const PointScores& scores) {
  std::vector<float> out(scores.num_points(), 0.0f);
  for (std::size_t i = 0; i < scores.num_points(); ++i) {
    double best = 0.0;
    for (std::size_t c = 0; c < scores.num_classes(); ++c) {
      best = std::max(best, scores.at(i, c));
    }
    out[i] = static_cast<float>(best);
  }
  return out;
}

fs::path vote_file(const fs::path& dir, int epoch) {
  return dir / ("votes_" + std::to_string(epoch) + ".f32");
}

void save_vote_epoch(const fs::path& dir, int epoch, std::span<const float> scores) {
  fs::create_directories(dir);
  io::write_array<float>(vote_file(dir, epoch), scores);
}

std::size_t load_vote_history(const fs::path& dir, const std::string& frame_id,
                              VoteBuffer& buffer) {
  if (!fs::is_directory(dir)) {
    return 0;
  }
  static const std::regex pattern(R"(votes_(\d+)\.f32)");
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, pattern)) {
      files.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& [epoch, path] : files) {
    buffer.record_epoch(frame_id, io::read_array<float>(path));
    buffer.set_current_epoch(epoch);
  }
  return files.size();
}

}  // namespace wlf
