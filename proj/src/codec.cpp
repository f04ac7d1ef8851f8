#include "coopdet/codec.hpp"

#include <bit>
#include <cstring>

#include "coopdet/errors.hpp"

namespace coopdet {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'S', 'C'};

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t splitmix_next(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

int select_encoder(const EncoderBank& bank, std::size_t budget_bytes, int h, int w) {
  if (bank.members.empty()) throw ShapeError("select_encoder: empty bank");
  int best = -1;
  for (const auto& [c_t, member] : bank.members) {
    if (message_size(h, w, c_t) <= budget_bytes) best = c_t;
  }
  if (best < 0)
    throw NoFittingEncoderError("no encoder fits budget of " +
                                std::to_string(budget_bytes) + " bytes");
  return best;
}

FeatureMap<float> encode(const FeatureMap<float>& fmap, const EncoderBank& bank, int c_t) {
  auto it = bank.members.find(c_t);
  if (it == bank.members.end())
    throw ShapeError("encode: unknown c_t " + std::to_string(c_t));
  Activations<float> acts =
      forward(it->second.enc_cfg, it->second.enc, fmap.data, RunMode::eval);
  FeatureMap<float> out;
  out.data = acts.output();
  out.has_origin = fmap.has_origin;
  out.gx0 = fmap.gx0;
  out.gy0 = fmap.gy0;
  return out;
}

FeatureMap<float> decode(const FeatureMessage& msg, const EncoderBank& bank) {
  auto it = bank.members.find(msg.c_t);
  if (it == bank.members.end())
    throw ShapeError("decode: unknown c_t " + std::to_string(msg.c_t));
  Tensor<float> t(msg.c_t, msg.height, msg.width);
  if (t.size() != msg.payload.size())
    throw LengthMismatchError("decode: payload length mismatch");
  t.v = msg.payload;
  Activations<float> acts = forward(it->second.dec_cfg, it->second.dec, t, RunMode::eval);
  FeatureMap<float> out;
  out.data = acts.output();
  out.has_origin = true;
  out.gx0 = msg.gx0;
  out.gy0 = msg.gy0;
  return out;
}

std::vector<std::uint8_t> serialize(const FeatureMap<float>& fmap, const Pose2D& pose,
                                    std::uint16_t vehicle_id, std::uint64_t frame_id) {
  const Tensor<float>& t = fmap.data;
  if (t.h > 0xffff || t.w > 0xffff || t.c > 0xffff)
    throw ShapeError("serialize: dims exceed 16-bit fields");
  std::vector<std::uint8_t> b;
  b.reserve(message_size(t.h, t.w, t.c));
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u16(b, kMessageFormatVersion);
  put_u16(b, vehicle_id);
  put_u64(b, frame_id);
  put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(pose.x)));
  put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(pose.y)));
  put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(pose.heading)));
  put_u32(b, static_cast<std::uint32_t>(static_cast<std::int32_t>(fmap.gx0)));
  put_u32(b, static_cast<std::uint32_t>(static_cast<std::int32_t>(fmap.gy0)));
  put_u16(b, static_cast<std::uint16_t>(t.h));
  put_u16(b, static_cast<std::uint16_t>(t.w));
  put_u16(b, static_cast<std::uint16_t>(t.c));
  for (float v : t.v) put_u32(b, std::bit_cast<std::uint32_t>(v));
  return b;
}

FeatureMessage deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMessageHeaderBytes)
    throw TruncatedError("message shorter than header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw BadMagicError("bad message magic");
  FeatureMessage m;
  const std::uint8_t* p = bytes.data();
  m.version = get_u16(p + 4);
  if (m.version != kMessageFormatVersion)
    throw UnsupportedVersionError("unsupported message version");
  m.vehicle_id = get_u16(p + 6);
  m.frame_id = get_u64(p + 8);
  m.pose_x = std::bit_cast<float>(get_u32(p + 16));
  m.pose_y = std::bit_cast<float>(get_u32(p + 20));
  m.heading = std::bit_cast<float>(get_u32(p + 24));
  m.gx0 = static_cast<std::int32_t>(get_u32(p + 28));
  m.gy0 = static_cast<std::int32_t>(get_u32(p + 32));
  m.height = get_u16(p + 36);
  m.width = get_u16(p + 38);
  m.c_t = get_u16(p + 40);
  const std::size_t expected = message_size(m.height, m.width, m.c_t);
  if (bytes.size() < expected) throw TruncatedError("message payload truncated");
  if (bytes.size() > expected)
    throw LengthMismatchError("message longer than header implies");
  const std::size_t n = static_cast<std::size_t>(m.height) * m.width * m.c_t;
  m.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    m.payload[i] = std::bit_cast<float>(get_u32(p + kMessageHeaderBytes + 4 * i));
  return m;
}

TransmitOutcome ChannelModel::transmit(std::size_t message_bytes) {
  if (message_bytes > capacity) return TransmitOutcome::rejected;
  const double u = static_cast<double>(splitmix_next(state_) >> 11) *
                   (1.0 / 9007199254740992.0);
  if (u < drop_probability) return TransmitOutcome::dropped;
  return TransmitOutcome::delivered;
}

}  // namespace coopdet
