#include "mpcc/agent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace mpcc::agent {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'C', 'C', 'Q', 'N', 'E', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > b_.size()) {
      throw std::runtime_error(std::string("checkpoint truncated while reading ") + what + " at offset " +
                               std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  float f32() {
    const std::uint32_t bits = u32("tensor data");
    return std::bit_cast<float>(bits);
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const QNetwork& net, const std::vector<double>& params) {
  if (params.size() != net.num_params()) throw std::invalid_argument("parameter count does not match network");
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, kCheckpointVersion);
  const std::string cfg = net.config().dump();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  put_bytes(out, cfg);
  put_u32(out, static_cast<std::uint32_t>(net.layout().size()));
  for (const auto& p : net.layout()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    put_bytes(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.rows));
    put_u32(out, static_cast<std::uint32_t>(p.cols));
  }
  for (double v : params) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

LoadedCheckpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(8, "magic");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw std::runtime_error("not a Q-network checkpoint (bad magic)");
  r.str(8, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  LoadedCheckpoint out;
  const std::uint32_t cfg_len = r.u32("config length");
  try {
    out.network_config = nlohmann::json::parse(r.str(cfg_len, "config"));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  const std::uint32_t count = r.u32("tensor count");
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamSpec p;
    p.name = r.str(r.u32("name length"), "name");
    p.rows = static_cast<int>(r.u32("rows"));
    p.cols = static_cast<int>(r.u32("cols"));
    p.offset = total;
    total += p.size();
    out.table.push_back(p);
  }
  r.need(total * 4, "tensor data");
  out.params.resize(total);
  for (std::size_t i = 0; i < total; ++i) out.params[i] = r.f32();
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint data at offset " + std::to_string(r.pos()));
  return out;
}

void save_checkpoint(const std::string& path, const QNetwork& net, const std::vector<double>& params) {
  const auto bytes = serialize_checkpoint(net, params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

std::vector<double> load_params_for(const std::string& path, const QNetwork& net) {
  auto ck = load_checkpoint(path);
  const auto& layout = net.layout();
  if (ck.table.size() != layout.size()) {
    throw std::runtime_error("checkpoint has " + std::to_string(ck.table.size()) + " tensors, network has " +
                             std::to_string(layout.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& a = ck.table[i];
    const auto& b = layout[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) {
      throw std::runtime_error("checkpoint tensor " + a.name + " [" + std::to_string(a.rows) + "x" +
                               std::to_string(a.cols) + "] does not match network tensor " + b.name + " [" +
                               std::to_string(b.rows) + "x" + std::to_string(b.cols) + "]");
    }
  }
  return std::move(ck.params);
}

}  // namespace mpcc::agent
