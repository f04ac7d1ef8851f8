#include "coopdet/runner.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <thread>

namespace coopdet {

std::vector<FrameResult> run_inference(const CoopModel& model,
                                       const std::vector<Frame>& frames,
                                       const InferOptions& opts) {
  const int n = static_cast<int>(frames.size());
  std::vector<FrameResult> results(n);

  // Sequential pre-pass: encoder selection and channel outcomes in frame
  // order (geometry only, no heavy compute).
  struct Plan {
    bool coop = false;
    int c_t = 0;
    std::size_t bytes = 0;
  };
  std::vector<Plan> plans(n);
  ChannelModel channel(opts.budget, opts.drop_probability, opts.channel_seed);
  EncoderBank bank_view;
  for (const auto& [c_t, member] : model.bank) bank_view.members[c_t] = member;
  for (int i = 0; i < n; ++i) {
    results[i].frame_id = frames[i].id;
    if (!opts.cooperative) continue;
    const PixelExtent extent = world_anchor(frames[i].coop_pose, model.grid);
    int h = model.grid.height_px, w = model.grid.width_px;
    if (opts.mode == AlignmentMode::tma) {
      const PaddingSpec pad = mod_padding(extent, model.k);
      h += pad.p_t + pad.p_b;
      w += pad.p_l + pad.p_r;
    }
    const int fh = h / model.k, fw = w / model.k;
    try {
      plans[i].c_t = select_encoder(bank_view, opts.budget, fh, fw);
    } catch (const NoFittingEncoderError&) {
      continue;  // fallback: ego-only
    }
    plans[i].bytes = message_size(fh, fw, plans[i].c_t);
    if (channel.transmit(plans[i].bytes) != TransmitOutcome::delivered) continue;
    plans[i].coop = true;
  }

  auto run_frame = [&](int i) {
    const Frame& frame = frames[i];
    const FramePrep<float> fp =
        prepare_frame<float>(frame, model.grid, model.k, opts.mode);
    const PipelineState<float> st =
        pipeline_forward(model, fp, plans[i].c_t, opts.mode, RunMode::eval,
                         nullptr, plans[i].coop);
    std::vector<Detection> dets =
        decode_grid(st.head.output(), fp.origin_x_m, fp.origin_y_m, model.head_spec,
                    opts.conf_threshold);
    results[i].dets = nms(std::move(dets), opts.nms_iou);
    results[i].fallback = opts.cooperative && !plans[i].coop;
    results[i].c_t = plans[i].coop ? plans[i].c_t : 0;
    results[i].bytes = plans[i].coop ? plans[i].bytes : 0;
  };
  const int workers = std::max(1, opts.workers);
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) run_frame(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int i = w; i < n; i += workers) run_frame(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return results;
}

std::map<int, ClassEval> evaluate_detections(const std::vector<FrameResult>& results,
                                             const std::vector<Frame>& frames,
                                             double iou_threshold) {
  std::map<int, std::vector<std::pair<double, std::uint8_t>>> pooled;
  std::map<int, ClassEval> evals;
  std::map<int, const Frame*> by_id;
  for (const auto& f : frames) by_id[f.id] = &f;
  for (const auto& r : results) {
    const auto it = by_id.find(r.frame_id);
    if (it == by_id.end()) throw DataError("evaluate: unknown frame id in results");
    const Frame& frame = *it->second;
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<Detection> dets;
      std::vector<GtBox> gts;
      for (const auto& d : r.dets)
        if (d.cls == cls) dets.push_back(d);
      for (const auto& g : frame.gt)
        if (g.cls == cls) gts.push_back(g);
      const MatchResult mr = match(dets, gts, iou_threshold);
      for (std::size_t i = 0; i < mr.order.size(); ++i)
        pooled[cls].push_back({dets[mr.order[i]].confidence, mr.flags[i]});
      evals[cls].gt += static_cast<int>(gts.size());
    }
  }
  for (auto& [cls, entries] : pooled) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::uint8_t> flags;
    std::vector<double> confs;
    for (const auto& [conf, flag] : entries) {
      flags.push_back(flag);
      confs.push_back(conf);
    }
    ClassEval& ev = evals[cls];
    ev.ap = average_precision(flags, ev.gt);
    ev.curve = pr_curve(flags, ev.gt, confs);
    for (const auto f : flags) f ? ++ev.tp : ++ev.fp;
    ev.fn = ev.gt - ev.tp;
  }
  for (auto& [cls, ev] : evals) {
    if (pooled.find(cls) == pooled.end()) {
      ev.ap = ev.gt == 0 ? 1.0 : 0.0;
      ev.fn = ev.gt;
    }
  }
  return evals;
}

std::string detections_to_csv(const std::vector<FrameResult>& results) {
  std::string out = "frame,class,confidence,cx,cy,w,h,c_t,bytes,fallback\n";
  for (const auto& r : results) {
    const std::string tail = "," + std::to_string(r.c_t) + "," +
                             std::to_string(r.bytes) + "," +
                             (r.fallback ? "1" : "0") + "\n";
    if (r.dets.empty()) {
      out += std::to_string(r.frame_id) + ",,,,,," + tail;
    } else {
      for (const auto& d : r.dets) {
        out += std::to_string(r.frame_id) + "," + std::to_string(d.cls) + "," +
               format_double(d.confidence) + "," + format_double(d.box.cx) + "," +
               format_double(d.box.cy) + "," + format_double(d.box.w) + "," +
               format_double(d.box.h) + tail;
      }
    }
  }
  return out;
}

std::vector<FrameResult> detections_from_csv(const std::string& text) {
  std::vector<FrameResult> results;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("detections csv: empty file");
  if (line.rfind("frame,", 0) != 0)
    throw DataError("detections csv: bad header");
  FrameResult* cur = nullptr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cols.push_back(line.substr(pos, comma == std::string::npos
                                          ? std::string::npos
                                          : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cols.size() != 10) throw DataError("detections csv: bad column count");
    const int frame_id = std::stoi(cols[0]);
    if (cur == nullptr || cur->frame_id != frame_id) {
      results.push_back({});
      cur = &results.back();
      cur->frame_id = frame_id;
      cur->c_t = std::stoi(cols[7]);
      cur->bytes = static_cast<std::size_t>(std::stoull(cols[8]));
      cur->fallback = cols[9] == "1";
    }
    if (!cols[1].empty()) {
      Detection d;
      d.cls = std::stoi(cols[1]);
      d.confidence = std::stod(cols[2]);
      d.box = {std::stod(cols[3]), std::stod(cols[4]), std::stod(cols[5]),
               std::stod(cols[6])};
      cur->dets.push_back(d);
    }
  }
  return results;
}

}  // namespace coopdet
