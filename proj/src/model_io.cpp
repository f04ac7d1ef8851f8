#include "coopdet/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "coopdet/errors.hpp"

namespace coopdet {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'S', 'M'};

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

void put_f32(std::vector<std::uint8_t>& b, float v) {
  put_u32(b, std::bit_cast<std::uint32_t>(v));
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw TruncatedError("model file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf[pos]) |
                      static_cast<std::uint16_t>(buf[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

void read_f32_array(Reader& r, std::vector<float>& out, std::size_t n) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = r.f32();
}

}  // namespace

void write_sections(const std::string& path, const std::vector<ModelSection>& sections) {
  std::vector<std::uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u16(b, kModelFormatVersion);
  put_u16(b, static_cast<std::uint16_t>(sections.size()));
  for (const auto& s : sections) {
    put_u16(b, static_cast<std::uint16_t>(s.name.size()));
    b.insert(b.end(), s.name.begin(), s.name.end());
    put_u64(b, s.bytes.size());
    b.insert(b.end(), s.bytes.begin(), s.bytes.end());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw MissingFileError("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(b.data()),
          static_cast<std::streamsize>(b.size()));
  if (!f) throw DataError("write failed: " + path);
}

std::vector<ModelSection> read_sections(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingFileError("cannot open: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  Reader r{buf};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw BadMagicError("bad model magic");
  r.pos = 4;
  const std::uint16_t version = r.u16();
  if (version != kModelFormatVersion)
    throw UnsupportedVersionError("unsupported model version " + std::to_string(version));
  const std::uint16_t count = r.u16();
  std::vector<ModelSection> sections;
  for (std::uint16_t i = 0; i < count; ++i) {
    ModelSection s;
    const std::uint16_t name_len = r.u16();
    r.need(name_len);
    s.name.assign(reinterpret_cast<const char*>(buf.data() + r.pos), name_len);
    r.pos += name_len;
    const std::uint64_t len = r.u64();
    r.need(len);
    s.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(r.pos),
                   buf.begin() + static_cast<std::ptrdiff_t>(r.pos + len));
    r.pos += len;
    sections.push_back(std::move(s));
  }
  if (r.pos != buf.size())
    throw LengthMismatchError("trailing bytes in model file");
  return sections;
}

std::vector<std::uint8_t> encode_network(const NetworkConfig& cfg,
                                         const Parameters<float>& params) {
  std::vector<std::uint8_t> b;
  put_u32(b, static_cast<std::uint32_t>(cfg.in_channels));
  put_u16(b, static_cast<std::uint16_t>(cfg.layers.size()));
  for (const auto& l : cfg.layers) {
    b.push_back(static_cast<std::uint8_t>(l.kind));
    b.push_back(static_cast<std::uint8_t>(l.kernel));
    b.push_back(l.batchnorm ? 1 : 0);
    b.push_back(l.leaky_relu ? 1 : 0);
    put_u32(b, static_cast<std::uint32_t>(l.out_channels));
  }
  for (const auto& lp : params.layers) {
    for (const auto* arr : {&lp.w, &lp.b, &lp.gamma, &lp.beta, &lp.rmean, &lp.rvar})
      for (float v : *arr) put_f32(b, v);
  }
  return b;
}

std::pair<NetworkConfig, Parameters<float>> decode_network(
    const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  NetworkConfig cfg;
  cfg.in_channels = static_cast<int>(r.u32());
  const std::uint16_t n_layers = r.u16();
  for (std::uint16_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw DataError("bad layer kind in model");
    l.kind = static_cast<LayerKind>(kind);
    l.kernel = r.u8();
    l.batchnorm = r.u8() != 0;
    l.leaky_relu = r.u8() != 0;
    l.out_channels = static_cast<int>(r.u32());
    cfg.layers.push_back(l);
  }
  Parameters<float> params;
  int in_ch = cfg.in_channels;
  for (const auto& l : cfg.layers) {
    LayerParams<float> lp;
    if (l.kind == LayerKind::conv) {
      read_f32_array(r, lp.w,
                     static_cast<std::size_t>(l.out_channels) * in_ch * l.kernel * l.kernel);
      read_f32_array(r, lp.b, static_cast<std::size_t>(l.out_channels));
      if (l.batchnorm) {
        read_f32_array(r, lp.gamma, static_cast<std::size_t>(l.out_channels));
        read_f32_array(r, lp.beta, static_cast<std::size_t>(l.out_channels));
        read_f32_array(r, lp.rmean, static_cast<std::size_t>(l.out_channels));
        read_f32_array(r, lp.rvar, static_cast<std::size_t>(l.out_channels));
      }
      in_ch = l.out_channels;
    }
    params.layers.push_back(std::move(lp));
  }
  if (r.pos != bytes.size())
    throw LengthMismatchError("network section length mismatch");
  return {cfg, params};
}

void save_model(const std::string& path, const NetworkConfig& cfg,
                const Parameters<float>& params) {
  write_sections(path, {{"net", encode_network(cfg, params)}});
}

std::pair<NetworkConfig, Parameters<float>> load_model(const std::string& path) {
  const auto sections = read_sections(path);
  for (const auto& s : sections)
    if (s.name != "meta") return decode_network(s.bytes);
  throw DataError("no network section in model file");
}

}  // namespace coopdet
