#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "coopdet/geometry.hpp"
#include "coopdet/net.hpp"
#include "coopdet/tensor.hpp"

namespace coopdet {

// Wire unit. 42-byte header: magic "AFSC", version u16, vehicle_id u16,
// frame_id u64, pose (x, y, heading as f32), fixel origin (2 x s32),
// height/width/c_t (3 x u16); then h*w*c_t little-endian f32 payload,
// channel-major then row-major. Total size = 42 + 4*h*w*c_t bytes.
struct FeatureMessage {
  std::uint16_t version = 1;
  std::uint16_t vehicle_id = 0;
  std::uint64_t frame_id = 0;
  float pose_x = 0.0f, pose_y = 0.0f, heading = 0.0f;
  std::int32_t gx0 = 0, gy0 = 0;
  std::uint16_t height = 0, width = 0, c_t = 0;
  std::vector<float> payload;
};

inline constexpr std::size_t kMessageHeaderBytes = 42;
inline constexpr std::uint16_t kMessageFormatVersion = 1;

inline std::size_t message_size(int h, int w, int c_t) {
  return kMessageHeaderBytes +
         4 * static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * c_t;
}

template <class T>
struct BankMemberT {
  NetworkConfig enc_cfg, dec_cfg;
  Parameters<T> enc, dec;
};

using BankMember = BankMemberT<float>;

// Encoder/decoder pairs keyed by transmit channel count.
struct EncoderBank {
  std::map<int, BankMember> members;
};

// Largest c_t whose full message fits the byte budget.
int select_encoder(const EncoderBank& bank, std::size_t budget_bytes, int h, int w);

// 1x1-conv compression; spatial dims and fixel origin pass through.
FeatureMap<float> encode(const FeatureMap<float>& fmap, const EncoderBank& bank, int c_t);

// Decompression back to the feature-extractor channel count; fixel origin is
// copied from the message header.
FeatureMap<float> decode(const FeatureMessage& msg, const EncoderBank& bank);

std::vector<std::uint8_t> serialize(const FeatureMap<float>& fmap, const Pose2D& pose,
                                    std::uint16_t vehicle_id, std::uint64_t frame_id);
FeatureMessage deserialize(const std::vector<std::uint8_t>& bytes);

enum class TransmitOutcome { delivered, dropped, rejected };

// Capacity-constrained lossy link; outcomes are deterministic given the seed.
struct ChannelModel {
  std::size_t capacity = 0;
  double drop_probability = 0.0;

  ChannelModel(std::size_t cap, double drop_p, std::uint64_t seed)
      : capacity(cap), drop_probability(drop_p), state_(seed) {}

  TransmitOutcome transmit(std::size_t message_bytes);

 private:
  std::uint64_t state_;
};

}  // namespace coopdet
