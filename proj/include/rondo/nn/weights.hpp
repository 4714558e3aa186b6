#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "rondo/nn/network.hpp"

namespace rondo::nn {

class WeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kWeightVersion = 1;

struct WeightMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version;
  bool operator==(const WeightMeta&) const = default;
};

std::string network_config_text(const NetworkConfig& cfg);
NetworkConfig parse_network_config(const std::string& text);

/// `RONDOWT1` header, metadata, a name/shape/checksum table, then float32 data.
std::string encode_weights(const Network<float>& net, const WeightMeta& meta);
Network<float> decode_weights(const std::string& bytes, WeightMeta* meta = nullptr);

void save_weights(const Network<float>& net, const WeightMeta& meta, const std::string& path);
Network<float> load_weights(const std::string& path, WeightMeta* meta = nullptr);

}  // namespace rondo::nn
