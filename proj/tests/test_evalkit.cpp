#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coopdet/evalkit.hpp"

using namespace coopdet;

TEST_CASE("perfect detections all match") {
  std::vector<GtBox> gts{{0, {0, 0, 2, 2}}, {0, {5, 5, 2, 2}}};
  std::vector<Detection> dets{{0, 0.9, {0, 0, 2, 2}}, {0, 0.8, {5, 5, 2, 2}}};
  const MatchResult mr = match(dets, gts, 0.7);
  REQUIRE(mr.flags.size() == 2);
  CHECK(mr.flags[0] == 1);
  CHECK(mr.flags[1] == 1);
}

TEST_CASE("a ground truth can be claimed only once") {
  std::vector<GtBox> gts{{0, {0, 0, 2, 2}}};
  std::vector<Detection> dets{{0, 0.8, {0.1, 0, 2, 2}}, {0, 0.9, {0, 0, 2, 2}}};
  const MatchResult mr = match(dets, gts, 0.5);
  // Sorted by confidence: the 0.9 detection wins, the 0.8 one is FP.
  REQUIRE(mr.order.size() == 2);
  CHECK(mr.order[0] == 1);
  CHECK(mr.flags[0] == 1);
  CHECK(mr.flags[1] == 0);
}

TEST_CASE("class mismatch never matches") {
  std::vector<GtBox> gts{{1, {0, 0, 2, 2}}};
  std::vector<Detection> dets{{0, 0.9, {0, 0, 2, 2}}};
  CHECK(match(dets, gts, 0.5).flags[0] == 0);
}

namespace {

// Reference greedy matcher written independently: walk detections by
// descending confidence (ties by index) and give each the best unmatched
// same-class gt at or above the threshold.
std::vector<std::uint8_t> match_oracle(const std::vector<Detection>& dets,
                                       const std::vector<GtBox>& gts, double thr) {
  std::vector<int> idx(dets.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<bool> used(gts.size(), false);
  std::vector<std::uint8_t> flags;
  for (const int i : idx) {
    int best = -1;
    double best_iou = thr;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].cls != dets[i].cls) continue;
      const double v = iou(dets[i].box, gts[g].box);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = true;
      flags.push_back(1);
    } else {
      flags.push_back(0);
    }
  }
  return flags;
}

// Direct evaluation of the all-points interpolated area.
double ap_oracle(const std::vector<std::uint8_t>& flags, int gt) {
  if (gt <= 0) return flags.empty() ? 1.0 : 0.0;
  double ap = 0, prev_recall = 0;
  int tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    ++tp;
    const double recall = static_cast<double>(tp) / gt;
    // max precision over all operating points with recall >= this one
    double best_prec = 0;
    int tp2 = 0;
    for (std::size_t j = 0; j < flags.size(); ++j) {
      tp2 += flags[j] ? 1 : 0;
      if (tp2 >= tp)
        best_prec = std::max(best_prec, static_cast<double>(tp2) / (j + 1));
    }
    ap += (recall - prev_recall) * best_prec;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace

TEST_CASE("matching agrees with the exhaustive oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-3, 3), sz(0.5, 2.5), conf(0.01, 0.99);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<Detection> dets;
    std::vector<GtBox> gts;
    for (int i = 0; i < 5; ++i)
      dets.push_back({static_cast<int>(rng() % 2), conf(rng),
                      {pos(rng), pos(rng), sz(rng), sz(rng)}});
    for (int i = 0; i < 3; ++i)
      gts.push_back({static_cast<int>(rng() % 2), {pos(rng), pos(rng), sz(rng), sz(rng)}});
    const MatchResult mr = match(dets, gts, 0.3);
    CHECK(mr.flags == match_oracle(dets, gts, 0.3));
  }
}

TEST_CASE("hand-computed and edge-case AP values") {
  CHECK(average_precision({1, 1}, 2) == doctest::Approx(1.0));
  CHECK(average_precision({}, 3) == 0.0);
  CHECK(average_precision({}, 0) == 1.0);
  CHECK(average_precision({0, 0}, 0) == 0.0);
  CHECK(average_precision({1, 0, 1}, 2) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("AP equals the oracle on every flag vector up to length 6") {
  for (int len = 0; len <= 6; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::vector<std::uint8_t> flags;
      int tp = 0;
      for (int i = 0; i < len; ++i) {
        flags.push_back((bits >> i) & 1);
        tp += (bits >> i) & 1;
      }
      for (int gt = std::max(1, tp); gt <= tp + 2; ++gt)
        CHECK(average_precision(flags, gt) == doctest::Approx(ap_oracle(flags, gt)));
    }
  }
}

TEST_CASE("AP is invariant under monotone confidence transforms") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-3, 3), sz(0.5, 2.5), conf(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection> dets;
    std::vector<GtBox> gts;
    for (int i = 0; i < 6; ++i)
      dets.push_back({0, conf(rng), {pos(rng), pos(rng), sz(rng), sz(rng)}});
    for (int i = 0; i < 3; ++i)
      gts.push_back({0, {pos(rng), pos(rng), sz(rng), sz(rng)}});
    std::vector<Detection> warped = dets;
    for (auto& d : warped) d.confidence = std::tanh(3.0 * d.confidence);  // monotone
    const MatchResult a = match(dets, gts, 0.3);
    const MatchResult b = match(warped, gts, 0.3);
    CHECK(average_precision(a.flags, 3) ==
          doctest::Approx(average_precision(b.flags, 3)));
  }
}

TEST_CASE("appending a false positive never raises AP") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> flags;
    const int n = static_cast<int>(rng() % 6);
    int tp = 0;
    for (int i = 0; i < n; ++i) {
      flags.push_back(rng() % 2);
      tp += flags.back();
    }
    const int gt = std::max(1, tp + static_cast<int>(rng() % 2));
    const double before = average_precision(flags, gt);
    flags.push_back(0);
    CHECK(average_precision(flags, gt) <= before + 1e-12);
  }
}

TEST_CASE("pr curve recall is non-decreasing and precision bounded") {
  const std::vector<std::uint8_t> flags{1, 0, 1, 1, 0};
  const std::vector<double> confs{0.9, 0.8, 0.7, 0.6, 0.5};
  const std::vector<PRPoint> curve = pr_curve(flags, 4, confs);
  REQUIRE(curve.size() == flags.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].precision >= 0.0);
    CHECK(curve[i].precision <= 1.0);
    if (i > 0) CHECK(curve[i].recall >= curve[i - 1].recall);
  }
  CHECK(curve.back().recall == doctest::Approx(0.75));
}

TEST_CASE("comparison table layout") {
  std::vector<EvalRow> rows{{"b_model", "nma", 0.5, 0.25}, {"a_model", "tma", 0.75, 0.5}};
  const std::string csv = compare_csv(rows);
  CHECK(csv.rfind("model,mode,vehicle_ap,pedestrian_ap\n", 0) == 0);
  const std::size_t a = csv.find("a_model");
  const std::size_t b = csv.find("b_model");
  CHECK(a != std::string::npos);
  CHECK(b != std::string::npos);
  CHECK(a < b);  // rows ordered by model name
  const std::string single = compare_csv({{"m", "tma", 1.0, 0.0}});
  CHECK(std::count(single.begin(), single.end(), '\n') == 2);  // header + one row
}
