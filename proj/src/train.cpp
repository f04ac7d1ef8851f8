#include "coopdet/train.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "coopdet/evalkit.hpp"
#include "coopdet/model_io.hpp"

namespace coopdet {

namespace {

std::uint64_t next_rand(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void zero_like(const std::vector<LayerParams<float>>& src,
               std::vector<LayerParams<float>>& dst) {
  dst.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i].w.assign(src[i].w.size(), 0.0f);
    dst[i].b.assign(src[i].b.size(), 0.0f);
    dst[i].gamma.assign(src[i].gamma.size(), 0.0f);
    dst[i].beta.assign(src[i].beta.size(), 0.0f);
  }
}

AdamMoments make_moments(const Parameters<float>& p) {
  AdamMoments mom;
  zero_like(p.layers, mom.m);
  zero_like(p.layers, mom.v);
  return mom;
}

void adam_apply_array(std::vector<float>& p, std::vector<float>& m,
                      std::vector<float>& v, const std::vector<float>& g,
                      const TrainConfig& cfg, float bias1, float bias2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g[i] * g[i];
    const float mhat = m[i] / bias1;
    const float vhat = v[i] / bias2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

void adam_update(Parameters<float>& params, AdamMoments& mom,
                 const Gradients<float>& grads, const TrainConfig& cfg) {
  ++mom.t;
  const float bias1 = 1.0f - std::pow(cfg.beta1, static_cast<float>(mom.t));
  const float bias2 = 1.0f - std::pow(cfg.beta2, static_cast<float>(mom.t));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    adam_apply_array(params.layers[i].w, mom.m[i].w, mom.v[i].w, grads.layers[i].w,
                     cfg, bias1, bias2);
    adam_apply_array(params.layers[i].b, mom.m[i].b, mom.v[i].b, grads.layers[i].b,
                     cfg, bias1, bias2);
    adam_apply_array(params.layers[i].gamma, mom.m[i].gamma, mom.v[i].gamma,
                     grads.layers[i].gamma, cfg, bias1, bias2);
    adam_apply_array(params.layers[i].beta, mom.m[i].beta, mom.v[i].beta,
                     grads.layers[i].beta, cfg, bias1, bias2);
  }
}

void scale_gradients(Gradients<float>& g, float s) {
  for (auto& l : g.layers) {
    for (auto* arr : {&l.w, &l.b, &l.gamma, &l.beta})
      for (float& v : *arr) v *= s;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (bank.empty()) throw DataError("train config: bank must be nonempty");
  if (!std::is_sorted(bank.begin(), bank.end()) ||
      std::adjacent_find(bank.begin(), bank.end()) != bank.end())
    throw DataError("train config: bank must be strictly ascending");
  if (epochs < 0 || batch_size < 1 || workers < 1)
    throw DataError("train config: bad epochs/batch_size/workers");
}

AdamStates make_adam_states(const CoopModel& model) {
  AdamStates s;
  s.fec = make_moments(model.fec);
  s.head = make_moments(model.head);
  for (const auto& [c_t, member] : model.bank)
    s.bank.emplace(c_t, std::make_pair(make_moments(member.enc), make_moments(member.dec)));
  return s;
}

StepResult train_step(CoopModel& model, AdamStates& adam,
                      const std::vector<const Frame*>& batch, const TrainConfig& cfg,
                      std::uint64_t& rng_state, int force_c_t) {
  const int c_t =
      force_c_t >= 0
          ? force_c_t
          : cfg.bank[next_rand(rng_state) % static_cast<std::uint64_t>(cfg.bank.size())];
  const int n = static_cast<int>(batch.size());
  std::vector<FramePrep<float>> preps(n);
  std::vector<PipelineState<float>> states(n);
  std::vector<PipelineGrads<float>> grads(n);

  auto run_item = [&](int i) {
    preps[i] = prepare_frame<float>(*batch[i], model.grid, model.k, cfg.mode);
    states[i] = pipeline_forward(model, preps[i], c_t, cfg.mode, RunMode::train,
                                 &batch[i]->gt, true);
    grads[i] = pipeline_backward(model, preps[i], states[i]);
  };
  const int workers = std::min(cfg.workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) run_item(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int i = w; i < n; i += workers) run_item(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  float loss = 0.0f;
  Gradients<float> g_fec = zero_gradients(model.fec_cfg, model.fec);
  Gradients<float> g_head = zero_gradients(model.head_cfg, model.head);
  auto& member = model.bank.at(c_t);
  Gradients<float> g_enc = zero_gradients(member.enc_cfg, member.enc);
  Gradients<float> g_dec = zero_gradients(member.dec_cfg, member.dec);
  for (int i = 0; i < n; ++i) {
    loss += states[i].loss;
    accumulate(g_fec, grads[i].fec);
    accumulate(g_head, grads[i].head);
    accumulate(g_enc, grads[i].enc);
    accumulate(g_dec, grads[i].dec);
    // running stats folded in item order: ego path, then cooperative path
    update_running_stats(model.fec_cfg, model.fec, states[i].ego_fec);
    update_running_stats(model.fec_cfg, model.fec, states[i].coop_fec);
    update_running_stats(member.enc_cfg, member.enc, states[i].enc);
    update_running_stats(member.dec_cfg, member.dec, states[i].dec);
    update_running_stats(model.head_cfg, model.head, states[i].head);
  }
  loss /= static_cast<float>(n);
  if (!std::isfinite(loss))
    throw NumericError("train_step: non-finite loss (c_t=" + std::to_string(c_t) + ")");
  const float inv = 1.0f / static_cast<float>(n);
  scale_gradients(g_fec, inv);
  scale_gradients(g_head, inv);
  scale_gradients(g_enc, inv);
  scale_gradients(g_dec, inv);

  adam_update(model.fec, adam.fec, g_fec, cfg);
  adam_update(model.head, adam.head, g_head, cfg);
  auto& [enc_m, dec_m] = adam.bank.at(c_t);
  adam_update(member.enc, enc_m, g_enc, cfg);
  adam_update(member.dec, dec_m, g_dec, cfg);
  return {loss, c_t};
}

TrainReport train(const std::vector<Frame>& frames, const TrainConfig& cfg,
                  CoopModel& model) {
  cfg.validate();
  TrainReport report;
  if (frames.empty() || cfg.epochs == 0) return report;
  AdamStates adam = make_adam_states(model);
  std::uint64_t rng = cfg.seed ^ 0x7ea1ull;
  std::vector<int> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // seeded Fisher-Yates
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = next_rand(rng) % i;
      std::swap(order[i - 1], order[j]);
    }
    EpochRow row;
    row.epoch = epoch;
    std::map<int, std::pair<double, int>> bank_acc;
    double loss_sum = 0;
    int steps = 0;
    for (std::size_t start = 0; start + 1 <= order.size(); start += cfg.batch_size) {
      std::vector<const Frame*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&frames[order[i]]);
      const StepResult sr = train_step(model, adam, batch, cfg, rng);
      loss_sum += sr.loss;
      ++steps;
      auto& acc = bank_acc[sr.c_t];
      acc.first += sr.loss;
      ++acc.second;
    }
    row.mean_loss = steps > 0 ? loss_sum / steps : 0.0;
    for (const auto& [c_t, acc] : bank_acc)
      row.per_bank_loss[c_t] = acc.first / acc.second;
    report.rows.push_back(row);
  }
  return report;
}

float evaluate_loss(const CoopModel& model, const std::vector<Frame>& frames,
                    AlignmentMode mode, int c_t) {
  float total = 0.0f;
  for (const auto& frame : frames) {
    const FramePrep<float> fp = prepare_frame<float>(frame, model.grid, model.k, mode);
    const PipelineState<float> st =
        pipeline_forward(model, fp, c_t, mode, RunMode::eval, &frame.gt, true);
    total += st.loss;
  }
  return frames.empty() ? 0.0f : total / static_cast<float>(frames.size());
}

std::string TrainReport::to_csv() const {
  std::string out = "epoch,mean_loss,c_t,bank_loss\n";
  for (const auto& row : rows) {
    if (row.per_bank_loss.empty()) {
      out += std::to_string(row.epoch) + "," + format_double(row.mean_loss) + ",,\n";
    } else {
      for (const auto& [c_t, loss] : row.per_bank_loss) {
        out += std::to_string(row.epoch) + "," + format_double(row.mean_loss) + "," +
               std::to_string(c_t) + "," + format_double(loss) + "\n";
      }
    }
  }
  return out;
}

void save_coop_model(const std::string& path, const CoopModel& model) {
  std::vector<ModelSection> sections;
  nlohmann::json meta;
  meta["preset"] = model.preset;
  meta["k"] = model.k;
  meta["grid"] = {{"resolution", model.grid.resolution},
                  {"range", model.grid.range},
                  {"width_px", model.grid.width_px},
                  {"height_px", model.grid.height_px}};
  meta["head"] = {{"boxes_per_cell", model.head_spec.boxes_per_cell},
                  {"class_count", model.head_spec.class_count},
                  {"fixel_size", model.head_spec.fixel_size}};
  nlohmann::json bank_list = nlohmann::json::array();
  for (const auto& [c_t, member] : model.bank) bank_list.push_back(c_t);
  meta["bank"] = bank_list;
  const std::string meta_str = meta.dump();
  sections.push_back({"meta", std::vector<std::uint8_t>(meta_str.begin(), meta_str.end())});
  sections.push_back({"fec", encode_network(model.fec_cfg, model.fec)});
  sections.push_back({"head", encode_network(model.head_cfg, model.head)});
  for (const auto& [c_t, member] : model.bank) {
    sections.push_back({"enc_" + std::to_string(c_t),
                        encode_network(member.enc_cfg, member.enc)});
    sections.push_back({"dec_" + std::to_string(c_t),
                        encode_network(member.dec_cfg, member.dec)});
  }
  write_sections(path, sections);
}

CoopModel load_coop_model(const std::string& path) {
  const auto sections = read_sections(path);
  CoopModel model;
  bool have_meta = false, have_fec = false, have_head = false;
  for (const auto& s : sections) {
    if (s.name == "meta") {
      nlohmann::json meta;
      try {
        meta = nlohmann::json::parse(s.bytes.begin(), s.bytes.end());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model meta parse error: ") + e.what());
      }
      model.preset = meta["preset"].get<std::string>();
      model.k = meta["k"].get<int>();
      model.grid.resolution = meta["grid"]["resolution"].get<double>();
      model.grid.range = meta["grid"]["range"].get<double>();
      model.grid.width_px = meta["grid"]["width_px"].get<int>();
      model.grid.height_px = meta["grid"]["height_px"].get<int>();
      model.head_spec.boxes_per_cell = meta["head"]["boxes_per_cell"].get<int>();
      model.head_spec.class_count = meta["head"]["class_count"].get<int>();
      model.head_spec.fixel_size = meta["head"]["fixel_size"].get<double>();
      have_meta = true;
    } else if (s.name == "fec") {
      std::tie(model.fec_cfg, model.fec) = decode_network(s.bytes);
      have_fec = true;
    } else if (s.name == "head") {
      std::tie(model.head_cfg, model.head) = decode_network(s.bytes);
      have_head = true;
    } else if (s.name.rfind("enc_", 0) == 0) {
      const int c_t = std::stoi(s.name.substr(4));
      auto [cfg, params] = decode_network(s.bytes);
      model.bank[c_t].enc_cfg = cfg;
      model.bank[c_t].enc = std::move(params);
    } else if (s.name.rfind("dec_", 0) == 0) {
      const int c_t = std::stoi(s.name.substr(4));
      auto [cfg, params] = decode_network(s.bytes);
      model.bank[c_t].dec_cfg = cfg;
      model.bank[c_t].dec = std::move(params);
    }
  }
  if (!have_meta || !have_fec || !have_head)
    throw DataError("model file missing required sections");
  return model;
}

}  // namespace coopdet
