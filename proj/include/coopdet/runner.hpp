#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "coopdet/evalkit.hpp"
#include "coopdet/pipeline.hpp"

namespace coopdet {

struct InferOptions {
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  AlignmentMode mode = AlignmentMode::tma;
  double conf_threshold = 0.2;
  double nms_iou = 0.5;
  bool cooperative = true;
  double drop_probability = 0.0;
  std::uint64_t channel_seed = 7;
  int workers = 1;
};

struct FrameResult {
  int frame_id = 0;
  std::vector<Detection> dets;
  int c_t = 0;            // 0 when the frame fell back to ego-only
  std::size_t bytes = 0;  // message size actually sent (0 on fallback)
  bool fallback = false;
};

// Per-frame inference under a byte budget. Encoder selection and channel
// outcomes are decided sequentially in frame order so results are identical
// for any worker count.
std::vector<FrameResult> run_inference(const CoopModel& model,
                                       const std::vector<Frame>& frames,
                                       const InferOptions& opts);

struct ClassEval {
  double ap = 0;
  int tp = 0, fp = 0, fn = 0, gt = 0;
  std::vector<PRPoint> curve;
};

// Per-frame matching pooled into one confidence sweep per class.
std::map<int, ClassEval> evaluate_detections(const std::vector<FrameResult>& results,
                                             const std::vector<Frame>& frames,
                                             double iou_threshold);

std::string detections_to_csv(const std::vector<FrameResult>& results);
std::vector<FrameResult> detections_from_csv(const std::string& text);

}  // namespace coopdet
