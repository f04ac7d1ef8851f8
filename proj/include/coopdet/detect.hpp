#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coopdet/errors.hpp"
#include "coopdet/tensor.hpp"

namespace coopdet {

// Grid head layout: per cell, boxes_per_cell groups of (tx,ty,tw,th,tc)
// followed by class_count shared class scores.
struct HeadSpec {
  int boxes_per_cell = 2;
  int class_count = 2;
  double fixel_size = 1.0;  // meters per cell

  int channels() const { return boxes_per_cell * 5 + class_count; }
};

struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;  // global meters, axis-aligned
};

struct Detection {
  int cls = 0;
  double confidence = 0;
  Box box;
};

struct GtBox {
  int cls = 0;
  Box box;
};

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double iou(const Box& a, const Box& b);

// Greedy per-class suppression by descending confidence; ties broken by
// (class, cx, cy) for determinism.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold = 0.5);

// Decode raw head output anchored at the grid origin (meters, the corner of
// cell (0,0)).
template <class T>
std::vector<Detection> decode_grid(const Tensor<T>& raw, double origin_x_m,
                                   double origin_y_m, const HeadSpec& spec,
                                   double conf_threshold) {
  if (raw.c != spec.channels())
    throw ShapeError("decode_grid: channel count mismatch");
  std::vector<Detection> dets;
  const double fs = spec.fixel_size;
  for (int fy = 0; fy < raw.h; ++fy) {
    for (int fx = 0; fx < raw.w; ++fx) {
      int best_cls = 0;
      double best_score = raw.at(spec.boxes_per_cell * 5, fy, fx);
      for (int c = 1; c < spec.class_count; ++c) {
        const double s = raw.at(spec.boxes_per_cell * 5 + c, fy, fx);
        if (s > best_score) {
          best_score = s;
          best_cls = c;
        }
      }
      for (int b = 0; b < spec.boxes_per_cell; ++b) {
        const double conf = sigmoid(raw.at(5 * b + 4, fy, fx));
        if (conf < conf_threshold) continue;
        Detection d;
        d.cls = best_cls;
        d.confidence = conf;
        d.box.cx = origin_x_m + (fx + sigmoid(raw.at(5 * b + 0, fy, fx))) * fs;
        d.box.cy = origin_y_m + (fy + sigmoid(raw.at(5 * b + 1, fy, fx))) * fs;
        d.box.w = std::exp(static_cast<double>(raw.at(5 * b + 2, fy, fx))) * fs;
        d.box.h = std::exp(static_cast<double>(raw.at(5 * b + 3, fy, fx))) * fs;
        dets.push_back(d);
      }
    }
  }
  return dets;
}

// Inverse of decode_grid for representable targets; used by tests and for
// constructing loss regression targets.
template <class T>
void encode_target(Tensor<T>& raw, const GtBox& gt, int box_index,
                   double origin_x_m, double origin_y_m, const HeadSpec& spec,
                   double conf_logit = 40.0) {
  const double fs = spec.fixel_size;
  const double gx = (gt.box.cx - origin_x_m) / fs;
  const double gy = (gt.box.cy - origin_y_m) / fs;
  const int fx = static_cast<int>(std::floor(gx));
  const int fy = static_cast<int>(std::floor(gy));
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  raw.at(5 * box_index + 0, fy, fx) = static_cast<T>(logit(gx - fx));
  raw.at(5 * box_index + 1, fy, fx) = static_cast<T>(logit(gy - fy));
  raw.at(5 * box_index + 2, fy, fx) = static_cast<T>(std::log(gt.box.w / fs));
  raw.at(5 * box_index + 3, fy, fx) = static_cast<T>(std::log(gt.box.h / fs));
  raw.at(5 * box_index + 4, fy, fx) = static_cast<T>(conf_logit);
  for (int c = 0; c < spec.class_count; ++c)
    raw.at(spec.boxes_per_cell * 5 + c, fy, fx) = static_cast<T>(c == gt.cls ? 1 : 0);
}

template <class T>
struct YoloLossResult {
  T loss = T(0);
  Tensor<T> grad;
  int skipped = 0;  // targets outside the grid
};

// Sum-of-squared-errors grid detection loss with sqrt size terms, confidence
// on responsible boxes, damped confidence elsewhere, and per-cell class
// scores; the gradient w.r.t. the raw grid is exact.
template <class T>
YoloLossResult<T> yolo_loss(const Tensor<T>& raw, const std::vector<GtBox>& gts,
                            const HeadSpec& spec, double origin_x_m,
                            double origin_y_m, T lambda_coord = T(5),
                            T lambda_noobj = T(0.5)) {
  if (raw.c != spec.channels()) throw ShapeError("yolo_loss: channel count mismatch");
  YoloLossResult<T> res;
  res.grad = Tensor<T>(raw.c, raw.h, raw.w);
  const double fs = spec.fixel_size;
  const int nb = spec.boxes_per_cell;

  // responsible[cell] bitmask of claimed boxes; class target per object cell
  std::vector<std::uint8_t> claimed(static_cast<std::size_t>(raw.h) * raw.w, 0);
  std::vector<int> cell_class(static_cast<std::size_t>(raw.h) * raw.w, -1);

  auto sig = [](T t) { return T(1) / (T(1) + std::exp(-t)); };

  for (const auto& gt : gts) {
    const double gx = (gt.box.cx - origin_x_m) / fs;
    const double gy = (gt.box.cy - origin_y_m) / fs;
    const int fx = static_cast<int>(std::floor(gx));
    const int fy = static_cast<int>(std::floor(gy));
    if (fx < 0 || fx >= raw.w || fy < 0 || fy >= raw.h) {
      ++res.skipped;
      continue;
    }
    const std::size_t cell = static_cast<std::size_t>(fy) * raw.w + fx;
    // responsible predictor: unclaimed box with highest IoU against target
    int best_b = -1;
    double best_iou = -1.0;
    for (int b = 0; b < nb; ++b) {
      if (claimed[cell] & (1u << b)) continue;
      Box pred;
      pred.cx = origin_x_m + (fx + sigmoid(static_cast<double>(raw.at(5 * b + 0, fy, fx)))) * fs;
      pred.cy = origin_y_m + (fy + sigmoid(static_cast<double>(raw.at(5 * b + 1, fy, fx)))) * fs;
      pred.w = std::exp(static_cast<double>(raw.at(5 * b + 2, fy, fx))) * fs;
      pred.h = std::exp(static_cast<double>(raw.at(5 * b + 3, fy, fx))) * fs;
      const double i = iou(pred, gt.box);
      if (i > best_iou) {
        best_iou = i;
        best_b = b;
      }
    }
    if (best_b < 0) {
      ++res.skipped;  // all predictors in this cell already claimed
      continue;
    }
    claimed[cell] |= static_cast<std::uint8_t>(1u << best_b);
    if (cell_class[cell] < 0) cell_class[cell] = gt.cls;

    const int b = best_b;
    const T tx_target = static_cast<T>(gx - fx);
    const T ty_target = static_cast<T>(gy - fy);
    const T sw_target = static_cast<T>(std::sqrt(gt.box.w));
    const T sh_target = static_cast<T>(std::sqrt(gt.box.h));

    const T stx = sig(raw.at(5 * b + 0, fy, fx));
    const T sty = sig(raw.at(5 * b + 1, fy, fx));
    const T sw = std::sqrt(std::exp(raw.at(5 * b + 2, fy, fx)) * T(fs));
    const T sh = std::sqrt(std::exp(raw.at(5 * b + 3, fy, fx)) * T(fs));
    const T stc = sig(raw.at(5 * b + 4, fy, fx));

    res.loss += lambda_coord * ((stx - tx_target) * (stx - tx_target) +
                                (sty - ty_target) * (sty - ty_target) +
                                (sw - sw_target) * (sw - sw_target) +
                                (sh - sh_target) * (sh - sh_target));
    res.loss += (stc - T(1)) * (stc - T(1));

    res.grad.at(5 * b + 0, fy, fx) +=
        T(2) * lambda_coord * (stx - tx_target) * stx * (T(1) - stx);
    res.grad.at(5 * b + 1, fy, fx) +=
        T(2) * lambda_coord * (sty - ty_target) * sty * (T(1) - sty);
    // d(sqrt(exp(tw)*fs))/dtw = sw/2
    res.grad.at(5 * b + 2, fy, fx) += lambda_coord * (sw - sw_target) * sw;
    res.grad.at(5 * b + 3, fy, fx) += lambda_coord * (sh - sh_target) * sh;
    res.grad.at(5 * b + 4, fy, fx) += T(2) * (stc - T(1)) * stc * (T(1) - stc);
  }

  for (int fy = 0; fy < raw.h; ++fy) {
    for (int fx = 0; fx < raw.w; ++fx) {
      const std::size_t cell = static_cast<std::size_t>(fy) * raw.w + fx;
      for (int b = 0; b < nb; ++b) {
        if (claimed[cell] & (1u << b)) continue;
        const T stc = sig(raw.at(5 * b + 4, fy, fx));
        res.loss += lambda_noobj * stc * stc;
        res.grad.at(5 * b + 4, fy, fx) +=
            T(2) * lambda_noobj * stc * stc * (T(1) - stc);
      }
      if (cell_class[cell] >= 0) {
        for (int c = 0; c < spec.class_count; ++c) {
          const T target = T(c == cell_class[cell] ? 1 : 0);
          const T score = raw.at(nb * 5 + c, fy, fx);
          res.loss += (score - target) * (score - target);
          res.grad.at(nb * 5 + c, fy, fx) += T(2) * (score - target);
        }
      }
    }
  }
  return res;
}

}  // namespace coopdet
