#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mpcc/telemetry/observation.hpp"

namespace mpcc::telemetry {

inline constexpr std::size_t kMaxFrameBody = 1u << 20;

// Session setup sent once by the proxy before the first observation.
struct Hello {
  int num_subflows = 0;
  int num_features = kNumFeatures;
  int cwnd_min = 0;
  std::vector<int> cwnd_max;
  std::int64_t window_us = 0;
  nlohmann::json engine_config = nlohmann::json::object();

  bool operator==(const Hello&) const = default;
};

struct Bye {
  bool operator==(const Bye&) const = default;
};

using WireMessage = std::variant<Hello, ConnectionObservation, ControlDirective, Bye>;

class WireError : public std::runtime_error {
 public:
  WireError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

const char* message_type(const WireMessage& msg);

nlohmann::json to_json(const WireMessage& msg);
// Throws WireError (offset 4, the body start) on schema violations.
WireMessage from_json(const nlohmann::json& body);

// 4-byte big-endian body length followed by the UTF-8 JSON body.
std::vector<std::uint8_t> encode(const WireMessage& msg);
// Decodes exactly one complete frame; trailing bytes are an error.
WireMessage decode(std::span<const std::uint8_t> frame);
// Length of the first frame in `buffer` if it is complete, else nullopt.
// Throws WireError when the announced length exceeds kMaxFrameBody.
std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffer);

}  // namespace mpcc::telemetry
