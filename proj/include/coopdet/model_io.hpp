#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coopdet/net.hpp"

namespace coopdet {

// Model container: "AFSM" magic, u16 version, u16 section count, then named
// sections. A network section carries the layer count, per-layer shape
// headers, and 32-bit little-endian weight payloads.
inline constexpr std::uint16_t kModelFormatVersion = 1;

struct ModelSection {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

void write_sections(const std::string& path, const std::vector<ModelSection>& sections);
std::vector<ModelSection> read_sections(const std::string& path);

std::vector<std::uint8_t> encode_network(const NetworkConfig& cfg,
                                         const Parameters<float>& params);
std::pair<NetworkConfig, Parameters<float>> decode_network(
    const std::vector<std::uint8_t>& bytes);

// Single-network convenience wrappers.
void save_model(const std::string& path, const NetworkConfig& cfg,
                const Parameters<float>& params);
std::pair<NetworkConfig, Parameters<float>> load_model(const std::string& path);

}  // namespace coopdet
