#include "mpcc/bench/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mpcc::bench {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out.push_back(',');
      out += cells[i];
    }
    out.push_back('\n');
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw std::invalid_argument("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                                    std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const std::vector<std::string> kSeriesHeader = {"t_us", "conn",   "subflow",  "throughput_bps", "mean_rtt_us",
                                                "acks", "cwnd",   "inflight", "queue_pkts"};

CsvTable series_table(const std::vector<SeriesRow>& rows) {
  CsvTable t;
  t.header = kSeriesHeader;
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.t_us), std::to_string(r.conn), std::to_string(r.subflow),
                      format_number(r.throughput_bps), format_number(r.mean_rtt_us), std::to_string(r.acks),
                      std::to_string(r.cwnd), std::to_string(r.inflight), std::to_string(r.queue_pkts)});
  }
  return t;
}

}  // namespace mpcc::bench
