#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcc/agent/qnetwork.hpp"

namespace mpcc::agent {

// Binary parameter container:
//   8 bytes  magic "MPCCQNET"
//   u32      format version
//   u32      length of the JSON network config, then the JSON bytes
//   u32      tensor count, then per tensor: u32 name length, name,
//            u32 rows, u32 cols
//   f32[]    tensor data in table order
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const QNetwork& net, const std::vector<double>& params);

struct LoadedCheckpoint {
  nlohmann::json network_config;
  std::vector<ParamSpec> table;
  std::vector<double> params;
};

// Throws std::runtime_error describing the first inconsistency.
LoadedCheckpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const QNetwork& net, const std::vector<double>& params);
LoadedCheckpoint load_checkpoint(const std::string& path);
// Loads `path` and checks its shape table against `net`.
std::vector<double> load_params_for(const std::string& path, const QNetwork& net);

}  // namespace mpcc::agent
