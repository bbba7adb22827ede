#include "mpcc/telemetry/wire.hpp"

#include <algorithm>
#include <cstring>

namespace mpcc::telemetry {

using nlohmann::json;

namespace {

constexpr std::size_t kPrefix = 4;

json stats_to_json(const WindowAggregate& a) {
  return json{{"subflow_id", a.subflow_id},
              {"window_start_us", a.window_start.us()},
              {"window_end_us", a.window_end.us()},
              {"mean_throughput_bps", a.mean_throughput_bps},
              {"mean_rtt_us", a.mean_rtt_us},
              {"ack_count", a.ack_count},
              {"delivered_bytes", a.delivered_bytes},
              {"cwnd", a.cwnd_at_close},
              {"min_rtt_us", a.min_rtt_us},
              {"base_rtt_us", a.base_rtt_us},
              {"max_delivery_rate_bps", a.max_delivery_rate_bps}};
}

WindowAggregate stats_from_json(const json& j) {
  WindowAggregate a;
  a.subflow_id = j.at("subflow_id").get<int>();
  a.window_start = SimTime(j.at("window_start_us").get<std::int64_t>());
  a.window_end = SimTime(j.at("window_end_us").get<std::int64_t>());
  a.mean_throughput_bps = j.at("mean_throughput_bps").get<double>();
  a.mean_rtt_us = j.at("mean_rtt_us").get<double>();
  a.ack_count = j.at("ack_count").get<std::int64_t>();
  a.delivered_bytes = j.at("delivered_bytes").get<std::int64_t>();
  a.cwnd_at_close = j.at("cwnd").get<int>();
  a.min_rtt_us = j.at("min_rtt_us").get<std::int64_t>();
  a.base_rtt_us = j.at("base_rtt_us").get<std::int64_t>();
  a.max_delivery_rate_bps = j.at("max_delivery_rate_bps").get<double>();
  return a;
}

struct ToJson {
  json operator()(const Hello& h) const {
    return json{{"type", "Hello"},
                {"num_subflows", h.num_subflows},
                {"num_features", h.num_features},
                {"cwnd_min", h.cwnd_min},
                {"cwnd_max", h.cwnd_max},
                {"window_us", h.window_us},
                {"engine_config", h.engine_config}};
  }
  json operator()(const ConnectionObservation& o) const {
    json subs = json::array();
    for (const auto& s : o.subflows) {
      subs.push_back(json{{"features", s.obs.features}, {"stats", stats_to_json(s.stats)}});
    }
    return json{{"type", "Observation"}, {"step", o.step}, {"at_us", o.at.us()}, {"final", o.final},
                {"subflows", subs}};
  }
  json operator()(const ControlDirective& d) const {
    return json{{"type", "Directive"},
                {"step", d.step},
                {"targets", d.targets},
                {"issued_at_us", d.issued_at.us()},
                {"apply_at_us", d.apply_at.us()}};
  }
  json operator()(const Bye&) const { return json{{"type", "Bye"}}; }
};

}  // namespace

const char* message_type(const WireMessage& msg) {
  static constexpr const char* names[] = {"Hello", "Observation", "Directive", "Bye"};
  return names[msg.index()];
}

json to_json(const WireMessage& msg) { return std::visit(ToJson{}, msg); }

WireMessage from_json(const json& body) {
  try {
    if (!body.is_object()) throw WireError("message body is not a JSON object", kPrefix);
    const auto type = body.at("type").get<std::string>();
    if (type == "Hello") {
      Hello h;
      h.num_subflows = body.at("num_subflows").get<int>();
      h.num_features = body.at("num_features").get<int>();
      h.cwnd_min = body.at("cwnd_min").get<int>();
      h.cwnd_max = body.at("cwnd_max").get<std::vector<int>>();
      h.window_us = body.at("window_us").get<std::int64_t>();
      if (auto it = body.find("engine_config"); it != body.end()) h.engine_config = *it;
      return h;
    }
    if (type == "Observation") {
      ConnectionObservation o;
      o.step = body.at("step").get<std::int64_t>();
      o.at = SimTime(body.at("at_us").get<std::int64_t>());
      o.final = body.value("final", false);
      for (const auto& s : body.at("subflows")) {
        SubflowObservation so;
        const auto f = s.at("features").get<std::vector<double>>();
        if (f.size() != static_cast<std::size_t>(kNumFeatures)) {
          throw WireError("observation needs " + std::to_string(kNumFeatures) + " features per subflow", kPrefix);
        }
        std::copy(f.begin(), f.end(), so.obs.features.begin());
        so.stats = stats_from_json(s.at("stats"));
        o.subflows.push_back(so);
      }
      return o;
    }
    if (type == "Directive") {
      ControlDirective d;
      d.step = body.at("step").get<std::int64_t>();
      d.targets = body.at("targets").get<std::vector<int>>();
      d.issued_at = SimTime(body.value("issued_at_us", std::int64_t{0}));
      d.apply_at = SimTime(body.value("apply_at_us", std::int64_t{0}));
      return d;
    }
    if (type == "Bye") return Bye{};
    throw WireError("unknown message type '" + type + "'", kPrefix);
  } catch (const json::exception& e) {
    throw WireError(std::string("schema violation: ") + e.what(), kPrefix);
  }
}

std::vector<std::uint8_t> encode(const WireMessage& msg) {
  const std::string body = to_json(msg).dump();
  if (body.size() > kMaxFrameBody) throw WireError("message body exceeds 1 MiB", 0);
  std::vector<std::uint8_t> out(kPrefix + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::memcpy(out.data() + kPrefix, body.data(), body.size());
  return out;
}

std::optional<std::size_t> complete_frame_size(std::span<const std::uint8_t> buffer) {
  if (buffer.size() < kPrefix) return std::nullopt;
  const std::size_t n = (std::size_t{buffer[0]} << 24) | (std::size_t{buffer[1]} << 16) |
                        (std::size_t{buffer[2]} << 8) | std::size_t{buffer[3]};
  if (n > kMaxFrameBody) throw WireError("announced body length " + std::to_string(n) + " exceeds 1 MiB", 0);
  if (buffer.size() < kPrefix + n) return std::nullopt;
  return kPrefix + n;
}

WireMessage decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kPrefix) throw WireError("truncated length prefix", frame.size());
  const auto size = complete_frame_size(frame);
  if (!size) throw WireError("truncated body", frame.size());
  if (*size != frame.size()) throw WireError("trailing bytes after frame", *size);
  json body;
  try {
    body = json::parse(frame.begin() + kPrefix, frame.end());
  } catch (const json::parse_error& e) {
    throw WireError(std::string("malformed JSON: ") + e.what(), kPrefix + (e.byte > 0 ? e.byte - 1 : 0));
  }
  return from_json(body);
}

}  // namespace mpcc::telemetry
