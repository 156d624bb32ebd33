#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wlf/frame.hpp"
#include "wlf/labels.hpp"

namespace wlf {

class PointScores;

struct PvcConfig {
  double tau_high = 0.5;
  double tau_low = 0.5;
  int reliable_count = 3;  // T_h

  // 0 <= tau_low <= tau_high <= 1 and 1 <= T_h <= history.
  void validate(int history) const;
};

// Ring buffer of the last `capacity` teacher foreground-score vectors per
// frame, plus the epoch counters that gate voting.
class VoteBuffer {
 public:
  explicit VoteBuffer(int capacity = 4, int start_epoch = 1);

  int capacity() const { return capacity_; }
  int start_epoch() const { return start_epoch_; }
  int current_epoch() const { return current_epoch_; }
  void set_current_epoch(int epoch) { current_epoch_ = epoch; }

  // Appends one epoch of scores, evicting the oldest when full. The first
  // record fixes the frame's point count; later mismatches throw
  // ArgumentError, as do scores outside [0, 1].
  void record_epoch(const std::string& frame_id, std::vector<float> scores);

  bool contains(const std::string& frame_id) const;
  std::size_t stored_epochs(const std::string& frame_id) const;
  // Oldest first. Throws ArgumentError for unknown frames.
  const std::deque<std::vector<float>>& history(const std::string& frame_id) const;

 private:
  struct FrameHistory {
    std::size_t num_points = 0;
    std::deque<std::vector<float>> epochs;
  };

  int capacity_;
  int start_epoch_;
  int current_epoch_ = 0;
  std::map<std::string, FrameHistory> frames_;
};

// Overrides pseudo labels by majority of reliable historical votes. Before the
// start epoch, or with fewer than `capacity` stored epochs, the labels come
// back unchanged. A foreground override needs the point to sit in a box,
// whose class and id it takes. Throws ArgumentError for unknown frames or
// mismatched lengths.
PseudoLabels vote_correct(const VoteBuffer& buffer, const PvcConfig& cfg, const PseudoLabels& labels,
                          const std::string& frame_id, std::span<const std::int32_t> box_assign,
                          std::span<const Box2D> boxes);

// Foreground score per point: the maximum over foreground classes.
std::vector<float> foreground_scores(const PointScores& scores);

// votes_<epoch>.f32 files under `dir`.
std::filesystem::path vote_file(const std::filesystem::path& dir, int epoch);
void save_vote_epoch(const std::filesystem::path& dir, int epoch, std::span<const float> scores);
// Loads every votes_<epoch>.f32 in ascending epoch order into `buffer` under
// `frame_id` and advances the buffer's current epoch to the newest one.
// Returns the number of files read.
std::size_t load_vote_history(const std::filesystem::path& dir, const std::string& frame_id,
                              VoteBuffer& buffer);

}  // namespace wlf
