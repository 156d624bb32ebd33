#include "wlf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "wlf/error.hpp"

using nlohmann::json;

namespace wlf {
namespace {

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) {
    return std::nullopt;
  }
  return sum / static_cast<double>(n);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string class_name(const std::vector<std::string>& names, std::size_t cls) {
  return cls < names.size() ? names[cls] : "class_" + std::to_string(cls);
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) {
    return "-";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

ConfusionAccumulator::ConfusionAccumulator(int num_classes)
    : num_classes_(num_classes),
      tp_(static_cast<std::size_t>(num_classes), 0),
      fp_(static_cast<std::size_t>(num_classes), 0),
      fn_(static_cast<std::size_t>(num_classes), 0) {}

void ConfusionAccumulator::add(std::span<const std::int32_t> pred,
                               std::span<const std::int32_t> gt) {
  if (pred.size() != gt.size()) {
    throw ArgumentError("prediction and ground truth differ in length");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto g = gt[i];
    if (g == kIgnoreLabel) {
      continue;
    }
    const auto p = pred[i];
    const bool p_fg = p >= 1 && p <= num_classes_;
    const bool g_fg = g >= 1 && g <= num_classes_;
    if (p_fg && p == g) {
      ++tp_[static_cast<std::size_t>(p - 1)];
      continue;
    }
    if (p_fg) {
      ++fp_[static_cast<std::size_t>(p - 1)];
    }
    if (g_fg) {
      ++fn_[static_cast<std::size_t>(g - 1)];
    }
  }
}

IouResult ConfusionAccumulator::result() const {
  IouResult r;
  r.per_class.resize(static_cast<std::size_t>(num_classes_));
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto denom = tp_[c] + fp_[c] + fn_[c];
    if (denom > 0) {
      r.per_class[c] = static_cast<double>(tp_[c]) / static_cast<double>(denom);
    }
  }
  r.miou = mean_of(r.per_class);
  return r;
}

IouResult miou(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
               int num_classes) {
  ConfusionAccumulator acc(num_classes);
  acc.add(pred, gt);
  return acc.result();
}

double point_set_iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

const std::array<double, 10>& coco_iou_thresholds() {
  static const std::array<double, 10> thresholds = [] {
    std::array<double, 10> t{};
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<double>(50 + 5 * i) / 100.0;
    }
    return t;
  }();
  return thresholds;
}

double interpolated_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0) {
    return 0.0;
  }
  const std::size_t n = ranked_tp.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked_tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = static_cast<double>(k) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) {
      sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
  }
  return sum / 101.0;
}

ApAccumulator::ApAccumulator(int num_classes)
    : num_classes_(num_classes),
      detections_(static_cast<std::size_t>(num_classes)),
      num_gt_(static_cast<std::size_t>(num_classes), 0) {}

void ApAccumulator::add_frame(std::span<const InstanceMask> preds,
                              std::span<const InstanceMask> gts) {
  const auto& thresholds = coco_iou_thresholds();
  for (int cls = 1; cls <= num_classes_; ++cls) {
    std::vector<const InstanceMask*> p;
    std::vector<const InstanceMask*> g;
    for (const auto& m : preds) {
      if (m.class_id == cls) {
        p.push_back(&m);
      }
    }
    for (const auto& m : gts) {
      if (m.class_id == cls) {
        g.push_back(&m);
      }
    }
    const auto ci = static_cast<std::size_t>(cls - 1);
    num_gt_[ci] += g.size();
    std::stable_sort(p.begin(), p.end(), [](const InstanceMask* a, const InstanceMask* b) {
      return a->score > b->score;
    });

    std::vector<double> iou(p.size() * g.size());
    for (std::size_t d = 0; d < p.size(); ++d) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        iou[d * g.size() + k] = point_set_iou(p[d]->points, g[k]->points);
      }
    }

    std::vector<Detection> dets(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) {
      dets[d].score = p[d]->score;
      dets[d].order = next_order_++;
      dets[d].matched.fill(false);
    }
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<bool> gt_taken(g.size(), false);
      for (std::size_t d = 0; d < p.size(); ++d) {
        std::ptrdiff_t best = -1;
        double best_iou = thresholds[t];
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double v = iou[d * g.size() + k];
          if (gt_taken[k] || v < thresholds[t]) {
            continue;
          }
          if (best < 0 || v > best_iou) {
            best = static_cast<std::ptrdiff_t>(k);
            best_iou = v;
          }
        }
        if (best >= 0) {
          gt_taken[static_cast<std::size_t>(best)] = true;
          dets[d].matched[t] = true;
        }
      }
    }
    auto& sink = detections_[ci];
    sink.insert(sink.end(), dets.begin(), dets.end());
  }
}

ApResult ApAccumulator::result() const {
  const auto& thresholds = coco_iou_thresholds();
  ApResult r;
  r.per_class.resize(static_cast<std::size_t>(num_classes_));
  std::vector<std::vector<std::optional<double>>> by_threshold(
      thresholds.size(), std::vector<std::optional<double>>(static_cast<std::size_t>(num_classes_)));

  for (std::size_t c = 0; c < static_cast<std::size_t>(num_classes_); ++c) {
    if (num_gt_[c] == 0) {
      continue;
    }
    std::vector<Detection> dets = detections_[c];
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
      if (a.score != b.score) {
        return a.score > b.score;
      }
      return a.order < b.order;
    });
    double sum = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<bool> flags(dets.size());
      for (std::size_t d = 0; d < dets.size(); ++d) {
        flags[d] = dets[d].matched[t];
      }
      const double ap = interpolated_ap(flags, num_gt_[c]);
      by_threshold[t][c] = ap;
      sum += ap;
    }
    r.per_class[c] = sum / static_cast<double>(thresholds.size());
  }
  r.per_threshold.resize(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    r.per_threshold[t] = mean_of(by_threshold[t]);
  }
  r.ap = mean_of(r.per_class);
  r.ap50 = r.per_threshold[0];
  r.ap75 = r.per_threshold[5];
  return r;
}

ApResult instance_ap(std::span<const InstanceMask> preds, std::span<const InstanceMask> gts,
                     int num_classes) {
  ApAccumulator acc(num_classes);
  acc.add_frame(preds, gts);
  return acc.result();
}

std::vector<InstanceMask> prediction_instances(const PseudoLabels& labels,
                                               std::span<const std::int32_t> gt_semantic) {
  if (!gt_semantic.empty() && gt_semantic.size() != labels.size()) {
    throw ArgumentError("labels and ground truth differ in length");
  }
  std::map<std::int32_t, InstanceMask> by_id;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto inst = labels.instance[i];
    if (inst <= 0 || labels.semantic[i] <= 0) {
      continue;
    }
    if (!gt_semantic.empty() && gt_semantic[i] == kIgnoreLabel) {
      continue;
    }
    auto& m = by_id[inst];
    m.class_id = labels.semantic[i];
    m.points.push_back(i);
  }
  std::size_t largest = 0;
  for (const auto& [id, m] : by_id) {
    largest = std::max(largest, m.points.size());
  }
  std::vector<InstanceMask> out;
  out.reserve(by_id.size());
  for (auto& [id, m] : by_id) {
    m.score = static_cast<double>(m.points.size()) / static_cast<double>(largest);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<InstanceMask> ground_truth_instances(std::span<const std::int32_t> gt_semantic,
                                                 std::span<const std::int32_t> gt_instance) {
  if (gt_semantic.size() != gt_instance.size()) {
    throw ArgumentError("ground-truth semantic and instance arrays differ in length");
  }
  std::map<std::int32_t, InstanceMask> by_id;
  for (std::size_t i = 0; i < gt_instance.size(); ++i) {
    if (gt_instance[i] <= 0 || gt_semantic[i] <= 0) {
      continue;
    }
    auto& m = by_id[gt_instance[i]];
    m.class_id = gt_semantic[i];
    m.points.push_back(i);
  }
  std::vector<InstanceMask> out;
  out.reserve(by_id.size());
  for (auto& [id, m] : by_id) {
    out.push_back(std::move(m));
  }
  return out;
}

MetricAccumulator::MetricAccumulator(int num_classes) : confusion_(num_classes), ap_(num_classes) {}

void MetricAccumulator::add_frame(const PseudoLabels& labels,
                                  std::span<const std::int32_t> gt_semantic,
                                  std::span<const std::int32_t> gt_instance) {
  confusion_.add(labels.semantic, gt_semantic);
  const auto preds = prediction_instances(labels, gt_semantic);
  const auto gts = ground_truth_instances(gt_semantic, gt_instance);
  ap_.add_frame(preds, gts);
  ++num_frames_;
  num_points_ += labels.size();
}

MetricReport MetricAccumulator::report() const {
  return MetricReport{confusion_.result(), ap_.result(), num_frames_, num_points_};
}

json report_to_json(const MetricReport& report, const std::vector<std::string>& class_names) {
  json per_class_iou = json::object();
  json per_class_ap = json::object();
  for (std::size_t c = 0; c < report.iou.per_class.size(); ++c) {
    per_class_iou[class_name(class_names, c + 1)] = optional_json(report.iou.per_class[c]);
  }
  for (std::size_t c = 0; c < report.ap.per_class.size(); ++c) {
    per_class_ap[class_name(class_names, c + 1)] = optional_json(report.ap.per_class[c]);
  }
  json per_threshold = json::object();
  const auto& thresholds = coco_iou_thresholds();
  for (std::size_t t = 0; t < report.ap.per_threshold.size(); ++t) {
    char key[16];
    std::snprintf(key, sizeof(key), "%.2f", thresholds[t]);
    per_threshold[key] = optional_json(report.ap.per_threshold[t]);
  }
  return json{{"num_frames", report.num_frames},
              {"num_points", report.num_points},
              {"miou", optional_json(report.iou.miou)},
              {"per_class_iou", per_class_iou},
              {"ap", optional_json(report.ap.ap)},
              {"ap50", optional_json(report.ap.ap50)},
              {"ap75", optional_json(report.ap.ap75)},
              {"ap_per_threshold", per_threshold},
              {"per_class_ap", per_class_ap}};
}

std::string report_to_text(const MetricReport& report, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "frames: %zu  points: %zu\n", report.num_frames,
                report.num_points);
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "class", "IoU", "AP");
  out << line;
  for (std::size_t c = 0; c < report.iou.per_class.size(); ++c) {
    const std::optional<double> ap =
        c < report.ap.per_class.size() ? report.ap.per_class[c] : std::nullopt;
    std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", class_name(class_names, c + 1).c_str(),
                  format_optional(report.iou.per_class[c]).c_str(), format_optional(ap).c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "mean",
                format_optional(report.iou.miou).c_str(), format_optional(report.ap.ap).c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "AP50", "",
                format_optional(report.ap.ap50).c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "AP75", "",
                format_optional(report.ap.ap75).c_str());
  out << line;
  return out.str();
}

}  // namespace wlf
