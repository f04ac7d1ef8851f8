#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coopdet/bev.hpp"
#include "coopdet/codec.hpp"
#include "coopdet/detect.hpp"
#include "coopdet/errors.hpp"
#include "coopdet/fusion.hpp"
#include "coopdet/modalign.hpp"
#include "coopdet/net.hpp"
#include "coopdet/simworld.hpp"

namespace coopdet {

// Full cooperative detector: shared-parameter feature extractor, an
// encoder/decoder bank keyed by transmit channel count, and the grid head.
template <class T>
struct CoopModelT {
  std::string preset = "tiny";
  GridSpec grid = GridSpec::tiny();
  int k = 4;
  HeadSpec head_spec;
  NetworkConfig fec_cfg, head_cfg;
  Parameters<T> fec, head;
  std::map<int, BankMemberT<T>> bank;
};

using CoopModel = CoopModelT<float>;

template <class T>
CoopModelT<T> make_model(const std::string& preset, const std::vector<int>& bank_channels,
                         std::uint64_t seed) {
  CoopModelT<T> m;
  m.preset = preset;
  if (preset == "tiny") {
    m.grid = GridSpec::tiny();
    m.fec_cfg = tiny_fec();
    m.head_spec = HeadSpec{2, 2, 0.0};
    m.head_cfg = tiny_head(m.head_spec.channels(), m.fec_cfg.out_channels());
  } else if (preset == "table1") {
    m.grid = GridSpec::defaults();
    m.fec_cfg = table1_fec();
    m.head_spec = HeadSpec{2, 2, 0.0};
    m.head_cfg = detector_head(m.head_spec.channels(), m.fec_cfg.out_channels());
  } else {
    throw DataError("unknown preset: " + preset);
  }
  m.k = m.fec_cfg.downsample_rate();
  m.head_spec.fixel_size = m.k / m.grid.resolution;
  std::uint64_t s = seed;
  m.fec = init_parameters<T>(m.fec_cfg, s ^ 0xfecull);
  m.head = init_parameters<T>(m.head_cfg, s ^ 0x6eadull);
  for (int c_t : bank_channels) {
    BankMemberT<T> member;
    member.enc_cfg = encoder(c_t, m.fec_cfg.out_channels());
    member.dec_cfg = decoder(m.fec_cfg.out_channels());
    member.dec_cfg.in_channels = c_t;
    member.enc = init_parameters<T>(member.enc_cfg, s ^ (0xe0c0ull + c_t));
    member.dec = init_parameters<T>(member.dec_cfg, s ^ (0xdec0ull + c_t));
    m.bank.emplace(c_t, std::move(member));
  }
  return m;
}

template <class U, class T>
CoopModelT<U> convert_model(const CoopModelT<T>& m) {
  CoopModelT<U> out;
  out.preset = m.preset;
  out.grid = m.grid;
  out.k = m.k;
  out.head_spec = m.head_spec;
  out.fec_cfg = m.fec_cfg;
  out.head_cfg = m.head_cfg;
  out.fec = convert_parameters<U>(m.fec);
  out.head = convert_parameters<U>(m.head);
  for (const auto& [c_t, member] : m.bank) {
    BankMemberT<U> o;
    o.enc_cfg = member.enc_cfg;
    o.dec_cfg = member.dec_cfg;
    o.enc = convert_parameters<U>(member.enc);
    o.dec = convert_parameters<U>(member.dec);
    out.bank.emplace(c_t, std::move(o));
  }
  return out;
}

// Rasterized and (for TMA) MOD-aligned observation pair with its lattice
// anchors. The head grid origin is the meter position of fixel (0,0)'s
// corner in the ego map.
template <class T>
struct FramePrep {
  Tensor<T> ego_img, coop_img;
  std::int64_t ego_gx0 = 0, ego_gy0 = 0;
  std::int64_t coop_gx0 = 0, coop_gy0 = 0;
  Pose2D ego_pose, coop_pose;
  double origin_x_m = 0, origin_y_m = 0;
};

template <class T>
Tensor<T> bev_to_tensor(const BevImage& img) {
  Tensor<T> t(kBevChannels, img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    t.v[i] = static_cast<T>(img.data[i]);
  return t;
}

template <class T>
FramePrep<T> prepare_frame(const Frame& frame, const GridSpec& grid, int k,
                           AlignmentMode mode) {
  FramePrep<T> fp;
  fp.ego_pose = frame.ego_pose;
  fp.coop_pose = frame.coop_pose;
  auto build = [&](const PointCloud& cloud, const Pose2D& pose, Tensor<T>& out,
                   std::int64_t& gx0, std::int64_t& gy0) -> PixelExtent {
    const PointCloud global = rotate_to_global(cloud, pose.heading);
    const PixelExtent extent = world_anchor(pose, grid);
    BevImage img = rasterize(global, pose, extent, grid);
    if (mode == AlignmentMode::tma) {
      const PaddingSpec pad = mod_padding(extent, k);
      img = apply_padding(img, pad);
      const FixelExtent fe = fixel_origin(img.extent, k);
      gx0 = fe.gx0;
      gy0 = fe.gy0;
    } else {
      if (img.width % k != 0 || img.height % k != 0)
        throw ShapeError("prepare_frame: grid dims must divide by k in NMA mode");
    }
    out = bev_to_tensor<T>(img);
    return img.extent;
  };
  const PixelExtent ego_extent =
      build(frame.ego_cloud, frame.ego_pose, fp.ego_img, fp.ego_gx0, fp.ego_gy0);
  build(frame.coop_cloud, frame.coop_pose, fp.coop_img, fp.coop_gx0, fp.coop_gy0);
  fp.origin_x_m = static_cast<double>(ego_extent.x0) / grid.resolution;
  fp.origin_y_m = static_cast<double>(ego_extent.y0) / grid.resolution;
  return fp;
}

template <class T>
struct PipelineState {
  bool coop = false;
  int c_t = 0;
  std::int64_t dx = 0, dy = 0;
  Activations<T> ego_fec, coop_fec, enc, dec, head;
  Tensor<T> fused;
  T loss = T(0);
  Tensor<T> head_grad;
  int skipped = 0;
};

// Forward through both observation paths, alignment, fusion, and the head.
// gt == nullptr skips the loss. coop_enabled == false fuses a zero map
// (single-vehicle degenerate case).
template <class T>
PipelineState<T> pipeline_forward(const CoopModelT<T>& model, const FramePrep<T>& fp,
                                  int c_t, AlignmentMode mode, RunMode rm,
                                  const std::vector<GtBox>* gt, bool coop_enabled) {
  PipelineState<T> st;
  st.coop = coop_enabled;
  st.c_t = c_t;
  st.ego_fec = forward(model.fec_cfg, model.fec, fp.ego_img, rm);
  const Tensor<T>& ego_feat = st.ego_fec.output();
  if (coop_enabled) {
    const auto it = model.bank.find(c_t);
    if (it == model.bank.end())
      throw ShapeError("pipeline: unknown c_t " + std::to_string(c_t));
    st.coop_fec = forward(model.fec_cfg, model.fec, fp.coop_img, rm);
    st.enc = forward(it->second.enc_cfg, it->second.enc, st.coop_fec.output(), rm);
    st.dec = forward(it->second.dec_cfg, it->second.dec, st.enc.output(), rm);
    if (mode == AlignmentMode::tma) {
      st.dx = fp.coop_gx0 - fp.ego_gx0;
      st.dy = fp.coop_gy0 - fp.ego_gy0;
    } else {
      const auto [dx, dy] = nma_offset(fp.coop_pose, fp.ego_pose, model.grid, model.k);
      st.dx = dx;
      st.dy = dy;
    }
    const Tensor<T> aligned =
        place_at_offset(st.dec.output(), st.dx, st.dy, ego_feat.h, ego_feat.w);
    st.fused = fuse(ego_feat, aligned);
  } else {
    st.fused = ego_feat;
  }
  st.head = forward(model.head_cfg, model.head, st.fused, rm);
  if (gt != nullptr) {
    auto res = yolo_loss(st.head.output(), *gt, model.head_spec, fp.origin_x_m,
                         fp.origin_y_m);
    st.loss = res.loss;
    st.head_grad = std::move(res.grad);
    st.skipped = res.skipped;
  }
  return st;
}

template <class T>
struct PipelineGrads {
  bool coop = false;
  int c_t = 0;
  Gradients<T> fec, head, enc, dec;
};

// Reverse pass; gradients flow into the shared extractor through both
// observation paths.
template <class T>
PipelineGrads<T> pipeline_backward(const CoopModelT<T>& model, const FramePrep<T>& fp,
                                   const PipelineState<T>& st) {
  (void)fp;
  PipelineGrads<T> g;
  g.coop = st.coop;
  g.c_t = st.c_t;
  g.head = backward(model.head_cfg, model.head, st.head, st.head_grad);
  const Tensor<T>& g_fused = g.head.input;
  g.fec = backward(model.fec_cfg, model.fec, st.ego_fec, g_fused);
  if (st.coop) {
    const auto& member = model.bank.at(st.c_t);
    const Tensor<T>& dec_out = st.dec.output();
    Tensor<T> g_dec_out =
        gather_from_offset(g_fused, st.dx, st.dy, dec_out.h, dec_out.w);
    g.dec = backward(member.dec_cfg, member.dec, st.dec, g_dec_out);
    g.enc = backward(member.enc_cfg, member.enc, st.enc, g.dec.input);
    Gradients<T> coop_fec = backward(model.fec_cfg, model.fec, st.coop_fec, g.enc.input);
    accumulate(g.fec, coop_fec);
  }
  return g;
}

}  // namespace coopdet
