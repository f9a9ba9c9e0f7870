#include "patchselect/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "patchselect/errors.hpp"
#include "binary.hpp"

namespace patchselect::io {
namespace {

using detail::get_le;
using detail::put_le;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

template <typename T>
T parse_number(const std::string& s, const char* field) {
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw FormatError(std::string("bad value for ") + field + ": '" + s + "'");
  return value;
}

// Shortest round-trip representation.
std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

constexpr const char* kTruthHeader = "object_id,lane_id,downtrack_position_m,depth_time_index,amplitude,lane_area_m2";
constexpr const char* kAlarmHeader =
    "alarm_id,lane_id,run_id,downtrack_index,downtrack_position_m,prescreen_score,label,truth_object_id,confidence,"
    "cluster_id";

}  // namespace

void write_bscan(std::ostream& out, const BScan& bscan) {
  out.write(kBScanMagic, 4);
  put_le<std::uint16_t>(out, kBScanVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bscan.time_samples()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bscan.downtrack_samples()));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(bscan.downtrack_spacing_m()));
  put_le<std::uint32_t>(out, bscan.lane_id());
  put_le<std::uint32_t>(out, bscan.run_id());
  for (double v : bscan.samples()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw IoError("failed writing B-scan");
}

BScan read_bscan(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kBScanMagic, 4)) {
    throw FormatError("not a B-scan file (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != kBScanVersion) throw FormatError("unsupported B-scan version " + std::to_string(version));
  const auto t = get_le<std::uint32_t>(in, "T");
  const auto x = get_le<std::uint32_t>(in, "X");
  const double spacing = std::bit_cast<double>(get_le<std::uint64_t>(in, "spacing"));
  const auto lane = get_le<std::uint32_t>(in, "lane");
  const auto run = get_le<std::uint32_t>(in, "run");
  if (t < kMinScanExtent || x < kMinScanExtent || t > (1u << 24) || x > (1u << 24)) {
    throw FormatError("B-scan dimensions out of range");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw FormatError("B-scan spacing must be positive");
  const std::size_t n = static_cast<std::size_t>(t) * x;
  std::vector<char> raw(n * 4);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("B-scan payload shorter than T*X samples");
  }
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + b])) << (8 * b);
    samples[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  BScan scan(static_cast<int>(t), static_cast<int>(x), spacing, lane, run, std::move(samples));
  try {
    scan.validate();
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  return scan;
}

void save_bscan(const BScan& bscan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_bscan(out, bscan);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

BScan load_bscan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_bscan(in);
}

namespace {

// Leading lines starting with '#' carry metadata and are skipped.
bool header_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') return true;
  }
  return false;
}

}  // namespace

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << kTruthHeader << '\n';
  for (const TruthObject& o : truth.objects) {
    out << o.object_id << ',' << o.lane_id << ',' << fmt_double(o.downtrack_position_m) << ',' << o.depth_time_index
        << ',' << fmt_double(o.amplitude) << ',' << fmt_double(truth.lane_area_m2) << '\n';
  }
}

GroundTruth read_truth_csv(std::istream& in) {
  std::string line;
  if (!header_line(in, line) || split_csv(line) != split_csv(kTruthHeader)) {
    throw FormatError("truth CSV header mismatch");
  }
  GroundTruth truth;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw FormatError("truth CSV row has " + std::to_string(f.size()) + " fields");
    TruthObject o;
    o.object_id = parse_number<std::uint32_t>(f[0], "object_id");
    o.lane_id = parse_number<std::uint32_t>(f[1], "lane_id");
    o.downtrack_position_m = parse_number<double>(f[2], "downtrack_position_m");
    o.depth_time_index = parse_number<int>(f[3], "depth_time_index");
    o.amplitude = parse_number<double>(f[4], "amplitude");
    truth.lane_area_m2 = parse_number<double>(f[5], "lane_area_m2");
    truth.objects.push_back(o);
  }
  return truth;
}

void write_alarms_csv(std::ostream& out, std::span<const Alarm> alarms) {
  out << kAlarmHeader << '\n';
  for (const Alarm& a : alarms) {
    out << a.id << ',' << a.lane_id << ',' << a.run_id << ',' << a.downtrack_index << ','
        << fmt_double(a.downtrack_position_m) << ',' << fmt_double(a.prescreen_score) << ','
        << (a.label == Label::Target ? "target" : "nontarget") << ',';
    if (a.truth_object_id) out << *a.truth_object_id;
    out << ',';
    if (a.confidence) out << fmt_double(*a.confidence);
    out << ',';
    if (a.cluster_id) out << *a.cluster_id;
    out << '\n';
  }
}

std::vector<Alarm> read_alarms_csv(std::istream& in) {
  std::string line;
  if (!header_line(in, line) || split_csv(line) != split_csv(kAlarmHeader)) {
    throw FormatError("alarm CSV header mismatch");
  }
  std::vector<Alarm> alarms;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw FormatError("alarm CSV row has " + std::to_string(f.size()) + " fields");
    Alarm a;
    a.id = parse_number<std::uint32_t>(f[0], "alarm_id");
    a.lane_id = parse_number<std::uint32_t>(f[1], "lane_id");
    a.run_id = parse_number<std::uint32_t>(f[2], "run_id");
    a.downtrack_index = parse_number<int>(f[3], "downtrack_index");
    a.downtrack_position_m = parse_number<double>(f[4], "downtrack_position_m");
    a.prescreen_score = parse_number<double>(f[5], "prescreen_score");
    if (f[6] == "target") {
      a.label = Label::Target;
    } else if (f[6] == "nontarget") {
      a.label = Label::NonTarget;
    } else {
      throw FormatError("bad label '" + f[6] + "'");
    }
    if (!f[7].empty()) a.truth_object_id = parse_number<std::uint32_t>(f[7], "truth_object_id");
    if (!f[8].empty()) a.confidence = parse_number<double>(f[8], "confidence");
    if (!f[9].empty()) a.cluster_id = parse_number<std::uint32_t>(f[9], "cluster_id");
    if ((a.label == Label::Target) != a.truth_object_id.has_value()) {
      throw FormatError("alarm " + f[0] + ": target label and truth_object_id disagree");
    }
    alarms.push_back(a);
  }
  return alarms;
}

}  // namespace patchselect::io
