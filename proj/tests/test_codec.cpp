#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <random>

#include "coopdet/codec.hpp"
#include "coopdet/errors.hpp"

using namespace coopdet;

namespace {

EncoderBank make_bank(const std::vector<int>& channels, int width,
                      std::uint64_t seed) {
  EncoderBank bank;
  for (const int c_t : channels) {
    BankMember m;
    m.enc_cfg = encoder(c_t, width);
    m.dec_cfg = decoder(width);
    m.dec_cfg.in_channels = c_t;
    m.enc = init_parameters<float>(m.enc_cfg, seed ^ (0x100u + c_t));
    m.dec = init_parameters<float>(m.dec_cfg, seed ^ (0x200u + c_t));
    bank.members.emplace(c_t, std::move(m));
  }
  return bank;
}

FeatureMap<float> random_fmap(int c, int h, int w, std::uint64_t seed) {
  FeatureMap<float> f;
  f.data = Tensor<float>(c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto& v : f.data.v) v = u(rng);
  f.has_origin = true;
  f.gx0 = -7;
  f.gy0 = 12;
  return f;
}

}  // namespace

TEST_CASE("message size formula") {
  CHECK(message_size(52, 52, 4) == 43306u);
  CHECK(message_size(52, 52, 2) == 21674u);
  CHECK(message_size(52, 52, 8) == 86570u);
  CHECK(message_size(0, 0, 0) == kMessageHeaderBytes);
}

TEST_CASE("encoder selection picks the largest fitting member") {
  const EncoderBank bank = make_bank({2, 4, 8}, 16, 1);
  CHECK(select_encoder(bank, 50000, 52, 52) == 4);
  CHECK(select_encoder(bank, 1u << 30, 52, 52) == 8);
  CHECK_THROWS_AS(select_encoder(bank, 1000, 52, 52), NoFittingEncoderError);
  CHECK_THROWS_AS(select_encoder(EncoderBank{}, 1000, 52, 52), ShapeError);
}

TEST_CASE("encoder selection is monotone in the budget") {
  const EncoderBank bank = make_bank({2, 4, 8}, 16, 2);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> b(message_size(16, 16, 2), 200000);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t b1 = b(rng), b2 = b(rng);
    if (b1 > b2) std::swap(b1, b2);
    CHECK(select_encoder(bank, b1, 16, 16) <= select_encoder(bank, b2, 16, 16));
  }
}

TEST_CASE("encode compresses channels and keeps dims and origin") {
  const EncoderBank bank = make_bank({2, 4}, 16, 4);
  const FeatureMap<float> in = random_fmap(16, 16, 16, 5);
  const FeatureMap<float> out = encode(in, bank, 2);
  CHECK(out.data.c == 2);
  CHECK(out.data.h == 16);
  CHECK(out.data.w == 16);
  CHECK(out.has_origin);
  CHECK(out.gx0 == in.gx0);
  CHECK(out.gy0 == in.gy0);
  CHECK_THROWS_AS(encode(in, bank, 3), ShapeError);
}

TEST_CASE("decode restores the extractor channel count") {
  const EncoderBank bank = make_bank({2, 4}, 16, 6);
  const FeatureMap<float> in = random_fmap(16, 16, 16, 7);
  const FeatureMap<float> enc = encode(in, bank, 4);
  const std::vector<std::uint8_t> bytes = serialize(enc, {1.5, -2.5, 0.3}, 9, 77);
  CHECK(bytes.size() == message_size(16, 16, 4));
  const FeatureMessage msg = deserialize(bytes);
  const FeatureMap<float> dec = decode(msg, bank);
  CHECK(dec.data.c == 16);
  CHECK(dec.data.h == 16);
  CHECK(dec.data.w == 16);
  CHECK(dec.has_origin);
  CHECK(dec.gx0 == in.gx0);
  CHECK(dec.gy0 == in.gy0);
  // Lossy by construction: shapes restored, values not.
  CHECK(dec.data.v != in.data.v);
}

TEST_CASE("serialization round trip is bitwise") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-100, 100);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + static_cast<int>(rng() % 6);
    const int h = 1 + static_cast<int>(rng() % 20);
    const int w = 1 + static_cast<int>(rng() % 20);
    FeatureMap<float> f;
    f.data = Tensor<float>(c, h, w);
    for (auto& v : f.data.v) v = u(rng);
    f.has_origin = true;
    f.gx0 = static_cast<std::int64_t>(rng() % 2000) - 1000;
    f.gy0 = static_cast<std::int64_t>(rng() % 2000) - 1000;
    const Pose2D pose{u(rng), u(rng), u(rng) / 50};
    const std::uint16_t vid = static_cast<std::uint16_t>(rng() % 1000);
    const std::uint64_t fid = rng();
    const std::vector<std::uint8_t> bytes = serialize(f, pose, vid, fid);
    CHECK(bytes.size() == message_size(h, w, c));
    const FeatureMessage m = deserialize(bytes);
    CHECK(m.version == kMessageFormatVersion);
    CHECK(m.vehicle_id == vid);
    CHECK(m.frame_id == fid);
    CHECK(m.pose_x == static_cast<float>(pose.x));
    CHECK(m.pose_y == static_cast<float>(pose.y));
    CHECK(m.heading == static_cast<float>(pose.heading));
    CHECK(m.gx0 == f.gx0);
    CHECK(m.gy0 == f.gy0);
    CHECK(m.height == h);
    CHECK(m.width == w);
    CHECK(m.c_t == c);
    CHECK(m.payload == f.data.v);
    for (const float v : m.payload) CHECK(std::isfinite(v));
  }
}

TEST_CASE("header layout is byte-exact") {
  FeatureMap<float> f;
  f.data = Tensor<float>(1, 1, 1);
  f.data.v[0] = 1.0f;
  f.has_origin = true;
  f.gx0 = 1;
  f.gy0 = -1;
  const std::vector<std::uint8_t> bytes = serialize(f, {0, 0, 0}, 0x0201, 0);
  REQUIRE(bytes.size() == 46u);
  CHECK(bytes[0] == 'A');
  CHECK(bytes[1] == 'F');
  CHECK(bytes[2] == 'S');
  CHECK(bytes[3] == 'C');
  CHECK(bytes[4] == 1);  // version lo
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 0x01);  // vehicle id, little endian
  CHECK(bytes[7] == 0x02);
  CHECK(bytes[28] == 0x01);  // gx0 = 1
  CHECK(bytes[32] == 0xff);  // gy0 = -1 two's complement
  CHECK(bytes[35] == 0xff);
  CHECK(bytes[36] == 1);  // height
  CHECK(bytes[38] == 1);  // width
  CHECK(bytes[40] == 1);  // c_t
}

TEST_CASE("corrupt messages raise distinct errors") {
  const FeatureMap<float> f = random_fmap(2, 3, 3, 9);
  std::vector<std::uint8_t> bytes = serialize(f, {0, 0, 0}, 1, 2);

  std::vector<std::uint8_t> bad_magic = bytes;
  bad_magic[0] = 'Z';
  CHECK_THROWS_AS(deserialize(bad_magic), BadMagicError);

  std::vector<std::uint8_t> bad_version = bytes;
  bad_version[4] = 99;
  CHECK_THROWS_AS(deserialize(bad_version), UnsupportedVersionError);

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(deserialize(truncated), TruncatedError);

  std::vector<std::uint8_t> trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), LengthMismatchError);

  std::vector<std::uint8_t> short_payload = bytes;
  short_payload.pop_back();
  CHECK_THROWS_AS(deserialize(short_payload), DataError);
}

TEST_CASE("channel outcomes") {
  ChannelModel zero_cap(0, 0.0, 1);
  CHECK(zero_cap.transmit(1) == TransmitOutcome::rejected);

  ChannelModel reliable(1000, 0.0, 2);
  for (int i = 0; i < 100; ++i)
    CHECK(reliable.transmit(500) == TransmitOutcome::delivered);

  ChannelModel lossy(1000, 1.0, 3);
  for (int i = 0; i < 100; ++i)
    CHECK(lossy.transmit(500) == TransmitOutcome::dropped);

  // Deterministic sequence given the seed.
  ChannelModel a(1000, 0.5, 4), b(1000, 0.5, 4);
  for (int i = 0; i < 200; ++i) CHECK(a.transmit(10) == b.transmit(10));

  // Drop rate roughly matches the probability.
  ChannelModel c(1000, 0.3, 5);
  int drops = 0;
  for (int i = 0; i < 2000; ++i)
    if (c.transmit(10) == TransmitOutcome::dropped) ++drops;
  CHECK(drops > 450);
  CHECK(drops < 750);
}
