#include "coopdet/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace coopdet {

MatchResult match(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                  double iou_threshold) {
  MatchResult res;
  res.order.resize(dets.size());
  std::iota(res.order.begin(), res.order.end(), 0);
  // ties broken by insertion order
  std::stable_sort(res.order.begin(), res.order.end(), [&](int a, int b) {
    return dets[a].confidence > dets[b].confidence;
  });
  std::vector<std::uint8_t> used(gts.size(), 0);
  res.flags.resize(dets.size(), 0);
  for (std::size_t i = 0; i < res.order.size(); ++i) {
    const Detection& d = dets[res.order[i]];
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].cls != d.cls) continue;
      const double v = iou(d.box, gts[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = 1;
      res.flags[i] = 1;
    }
  }
  return res;
}

double average_precision(const std::vector<std::uint8_t>& flags, int gt_count) {
  if (gt_count <= 0) return flags.empty() ? 1.0 : 0.0;
  const std::size_t n = flags.size();
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (flags[i]) ++tp;
    recall[i] = static_cast<double>(tp) / gt_count;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // precision envelope from the right, then sum recall steps
  double ap = 0.0, prev_recall = 0.0, env = 0.0;
  std::vector<double> envelope(n);
  for (std::size_t i = n; i-- > 0;) {
    env = std::max(env, precision[i]);
    envelope[i] = env;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * envelope[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

std::vector<PRPoint> pr_curve(const std::vector<std::uint8_t>& flags, int gt_count,
                              const std::vector<double>& confidences) {
  std::vector<PRPoint> pts;
  int tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) ++tp;
    PRPoint p;
    p.recall = gt_count > 0 ? static_cast<double>(tp) / gt_count : 0.0;
    p.precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    p.confidence = i < confidences.size() ? confidences[i] : 0.0;
    pts.push_back(p);
  }
  return pts;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string compare_csv(std::vector<EvalRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
    return std::tie(a.model, a.mode) < std::tie(b.model, b.mode);
  });
  std::string out = "model,mode,vehicle_ap,pedestrian_ap\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.mode + "," + format_double(r.vehicle_ap) + "," +
           format_double(r.pedestrian_ap) + "\n";
  }
  return out;
}

}  // namespace coopdet
