#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopdet/detect.hpp"

namespace coopdet {

struct PRPoint {
  double recall = 0;
  double precision = 0;
  double confidence = 0;
};

struct MatchResult {
  std::vector<int> order;           // detection indices, descending confidence
  std::vector<std::uint8_t> flags;  // 1 = TP, aligned with order
};

// Greedy confidence-descending matching against same-class ground truths at
// the given IoU threshold; one match per ground truth.
MatchResult match(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                  double iou_threshold = 0.7);

// All-points interpolated AP over confidence-sorted TP/FP flags.
double average_precision(const std::vector<std::uint8_t>& flags, int gt_count);

std::vector<PRPoint> pr_curve(const std::vector<std::uint8_t>& flags, int gt_count,
                              const std::vector<double>& confidences);

struct EvalRow {
  std::string model;
  std::string mode;
  double vehicle_ap = 0;
  double pedestrian_ap = 0;
};

// CSV table, one row per (model, mode), rows ordered by model then mode.
std::string compare_csv(std::vector<EvalRow> rows);

std::string format_double(double v);

}  // namespace coopdet
