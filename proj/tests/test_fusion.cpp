#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <random>

#include "coopdet/errors.hpp"
#include "coopdet/fusion.hpp"

using namespace coopdet;

namespace {

FeatureMap<float> random_fmap(int c, int h, int w, std::int64_t gx0,
                              std::int64_t gy0, std::uint64_t seed) {
  FeatureMap<float> f;
  f.data = Tensor<float>(c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto& v : f.data.v) v = u(rng);
  f.has_origin = true;
  f.gx0 = gx0;
  f.gy0 = gy0;
  return f;
}

}  // namespace

TEST_CASE("tma with equal origins is the identity") {
  const FeatureMap<float> remote = random_fmap(3, 8, 8, 5, -2, 1);
  const FeatureMap<float> out = align_tma(remote, 5, -2, 8, 8);
  CHECK(out.data.v == remote.data.v);
  CHECK(out.gx0 == 5);
  CHECK(out.gy0 == -2);
}

TEST_CASE("tma shifts content by the integer origin difference") {
  const FeatureMap<float> remote = random_fmap(2, 6, 6, 2, 0, 2);
  // Ego origin at (0,0): remote content lands 2 columns to the right.
  const FeatureMap<float> out = align_tma(remote, 0, 0, 6, 6);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 6; ++r) {
      CHECK(out.data.at(c, r, 0) == 0.0f);
      CHECK(out.data.at(c, r, 1) == 0.0f);
      for (int col = 2; col < 6; ++col)
        CHECK(out.data.at(c, r, col) == remote.data.at(c, r, col - 2));
    }
}

TEST_CASE("tma with disjoint extents is all zero") {
  const FeatureMap<float> remote = random_fmap(2, 4, 4, 100, 100, 3);
  const FeatureMap<float> out = align_tma(remote, 0, 0, 4, 4);
  for (const float v : out.data.v) CHECK(v == 0.0f);
}

TEST_CASE("tma requires a fixel origin") {
  FeatureMap<float> remote = random_fmap(1, 4, 4, 0, 0, 4);
  remote.has_origin = false;
  CHECK_THROWS_AS(align_tma(remote, 0, 0, 4, 4), ShapeError);
}

TEST_CASE("nma with identical poses is the identity") {
  const FeatureMap<float> remote = random_fmap(2, 8, 8, 0, 0, 5);
  const Pose2D pose{3.3, -1.1, 0.2};
  const FeatureMap<float> out =
      align_nma(remote, pose, pose, GridSpec::tiny(), 4, 8, 8);
  CHECK(out.data.v == remote.data.v);
}

TEST_CASE("nma equals tma for whole-fixel pose differences") {
  const GridSpec grid = GridSpec::tiny();  // 2 px/m, k=4 -> fixel = 2 m
  const int k = 4;
  const FeatureMap<float> remote = random_fmap(2, 8, 8, 3, 1, 6);
  const Pose2D ego{0, 0, 0};
  const Pose2D coop{6.0, 2.0, 0};  // exactly (3, 1) fixels
  const auto [dx, dy] = nma_offset(coop, ego, grid, k);
  CHECK(dx == 3);
  CHECK(dy == 1);
  const FeatureMap<float> via_nma = align_nma(remote, coop, ego, grid, k, 8, 8);
  const FeatureMap<float> via_tma = align_tma(remote, 0, 0, 8, 8);
  CHECK(via_nma.data.v == via_tma.data.v);
}

TEST_CASE("nma rounds half-fixel differences, tma does not") {
  const GridSpec grid = GridSpec::tiny();
  const int k = 4;  // fixel = 2 m
  const Pose2D ego{0, 0, 0};
  const Pose2D coop{1.0, 0, 0};  // half a fixel
  const auto [dx, dy] = nma_offset(coop, ego, grid, k);
  CHECK(dx == 1);  // rounded away from zero
  CHECK(dy == 0);
  const Pose2D coop_neg{-1.0, 0, 0};
  CHECK(nma_offset(coop_neg, ego, grid, k).first == -1);
  const Pose2D coop_small{0.4, 0, 0};
  CHECK(nma_offset(coop_small, ego, grid, k).first == 0);
}

TEST_CASE("placement and gathering are adjoint") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(-1, 1);
  Tensor<float> remote(2, 5, 6);
  for (auto& v : remote.v) v = u(rng);
  Tensor<float> ego_grad(2, 7, 4);
  for (auto& v : ego_grad.v) v = u(rng);
  const std::int64_t dx = -2, dy = 3;
  const Tensor<float> placed = place_at_offset(remote, dx, dy, 7, 4);
  const Tensor<float> gathered = gather_from_offset(ego_grad, dx, dy, 5, 6);
  // <place(x), g> == <x, gather(g)>
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < placed.v.size(); ++i)
    lhs += static_cast<double>(placed.v[i]) * ego_grad.v[i];
  for (std::size_t i = 0; i < gathered.v.size(); ++i)
    rhs += static_cast<double>(gathered.v[i]) * remote.v[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("fusion is an element-wise sum and checks shapes") {
  const FeatureMap<float> a = random_fmap(2, 4, 4, 0, 0, 8);
  const FeatureMap<float> b = random_fmap(2, 4, 4, 0, 0, 9);
  const Tensor<float> out = fuse(a.data, b.data);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    CHECK(out.v[i] == a.data.v[i] + b.data.v[i]);
  const Tensor<float> zero(2, 4, 4);
  CHECK(fuse(a.data, zero).v == a.data.v);
  Tensor<float> wrong(2, 4, 5);
  CHECK_THROWS_AS(fuse(a.data, wrong), ShapeError);
}
