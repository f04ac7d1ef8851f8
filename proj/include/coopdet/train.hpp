#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coopdet/pipeline.hpp"

namespace coopdet {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 4;
  float lr = 1e-3f;
  float beta1 = 0.9f, beta2 = 0.999f, adam_eps = 1e-8f;
  std::vector<int> bank{2, 4};  // ascending transmit channel counts
  AlignmentMode mode = AlignmentMode::tma;
  std::string preset = "tiny";
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct EpochRow {
  int epoch = 0;
  double mean_loss = 0;
  std::map<int, double> per_bank_loss;  // mean loss of steps that drew each c_t
};

struct TrainReport {
  std::vector<EpochRow> rows;
  std::string to_csv() const;
};

// Per-network Adam moments, updated only on steps that produced gradients
// for that network.
struct AdamMoments {
  std::vector<LayerParams<float>> m, v;
  long t = 0;
};

struct AdamStates {
  AdamMoments fec, head;
  std::map<int, std::pair<AdamMoments, AdamMoments>> bank;  // enc, dec
};

AdamStates make_adam_states(const CoopModel& model);

struct StepResult {
  float loss = 0;
  int c_t = 0;
};

// One optimizer step over a batch of frames: a single encoder/decoder pair
// is drawn uniformly from the bank, per-item gradients are reduced in item
// order, and the shared extractor receives gradients from both paths.
// force_c_t >= 0 bypasses the random draw.
StepResult train_step(CoopModel& model, AdamStates& adam,
                      const std::vector<const Frame*>& batch, const TrainConfig& cfg,
                      std::uint64_t& rng_state, int force_c_t = -1);

TrainReport train(const std::vector<Frame>& frames, const TrainConfig& cfg,
                  CoopModel& model);

// Dataset-order batch loss without an update, for audits.
float evaluate_loss(const CoopModel& model, const std::vector<Frame>& frames,
                    AlignmentMode mode, int c_t);

void save_coop_model(const std::string& path, const CoopModel& model);
CoopModel load_coop_model(const std::string& path);

}  // namespace coopdet
