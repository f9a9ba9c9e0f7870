#include "patchselect/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "patchselect/errors.hpp"
#include "patchselect/rng.hpp"

namespace patchselect {
namespace {

constexpr double kDepthEps = 1e-12;

int span_count(int time_samples, int margin) { return time_samples - 2 * margin + 1; }

}  // namespace

void MsekParams::validate() const {
  if (smooth_window < 1 || smooth_window % 2 == 0) throw ConfigError("smooth_window must be odd and >= 1");
  if (max_keypoints < 1) throw ConfigError("max_keypoints must be >= 1");
  if (margin < 0) throw ConfigError("margin must be >= 0");
}

BScan depth_normalize(const BScan& bscan) {
  BScan out = bscan;
  const int nx = bscan.downtrack_samples();
  for (int t = 0; t < bscan.time_samples(); ++t) {
    const auto in = bscan.row(t);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= nx;
    double ss = 0.0;
    for (double v : in) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / nx);
    auto dst = out.row(t);
    for (int x = 0; x < nx; ++x) dst[static_cast<std::size_t>(x)] = (in[static_cast<std::size_t>(x)] - mean) / (sd + kDepthEps);
  }
  return out;
}

std::vector<double> smoothed_energy(std::span<const double> ascan, int smooth_window) {
  const int n = static_cast<int>(ascan.size());
  const int half = smooth_window / 2;
  std::vector<double> sq(ascan.size());
  for (std::size_t t = 0; t < ascan.size(); ++t) sq[t] = ascan[t] * ascan[t];
  std::vector<double> s(ascan.size());
  for (int t = 0; t < n; ++t) {
    const int a = std::max(0, t - half);
    const int b = std::min(n - 1, t + half);
    double sum = 0.0;
    for (int u = a; u <= b; ++u) sum += sq[static_cast<std::size_t>(u)];
    s[static_cast<std::size_t>(t)] = sum / (b - a + 1);
  }
  return s;
}

std::vector<int> local_maxima(std::span<const double> s, int lo, int hi) {
  const int n = static_cast<int>(s.size());
  lo = std::max(lo, 1);
  hi = std::min(hi, n - 2);
  std::vector<int> out;
  for (int t = lo; t <= hi; ++t) {
    const double v = s[static_cast<std::size_t>(t)];
    if (!(v > s[static_cast<std::size_t>(t) - 1])) continue;
    int r = t + 1;
    while (r < n && s[static_cast<std::size_t>(r)] == v) ++r;
    if (r < n && s[static_cast<std::size_t>(r)] < v) out.push_back(t);
  }
  return out;
}

std::vector<Keypoint> msek_ascan(std::span<const double> ascan, const MsekParams& p) {
  p.validate();
  const int n = static_cast<int>(ascan.size());
  const auto s = smoothed_energy(ascan, p.smooth_window);
  const auto peaks = local_maxima(s, p.margin, n - p.margin);

  std::vector<Keypoint> kps;
  kps.reserve(peaks.size());
  for (int t : peaks) kps.push_back({0, t, s[static_cast<std::size_t>(t)]});
  std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
  if (kps.size() > static_cast<std::size_t>(p.max_keypoints)) kps.resize(static_cast<std::size_t>(p.max_keypoints));
  return kps;
}

std::vector<Keypoint> msek(const BScan& normalized, int downtrack_index, const MsekParams& p) {
  if (downtrack_index < 0 || downtrack_index >= normalized.downtrack_samples()) {
    throw RangeError("downtrack index " + std::to_string(downtrack_index) + " outside the B-scan");
  }
  auto kps = msek_ascan(normalized.column(downtrack_index), p);
  for (auto& kp : kps) kp.downtrack_index = downtrack_index;
  return kps;
}

std::vector<int> sample_regular(int time_samples, int n, int margin) {
  if (n < 1) throw RangeError("sample_regular needs n >= 1");
  const int count = span_count(time_samples, margin);
  if (count < n) {
    throw RangeError("sample_regular: " + std::to_string(count) + " admissible indices < n=" + std::to_string(n));
  }
  if (n == 1) return {static_cast<int>(std::lround((time_samples - 1) / 2.0))};
  const double step = static_cast<double>(time_samples - 2 * margin) / (n - 1);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(std::lround(margin + i * step));
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

std::vector<int> sample_random(int time_samples, int n, int margin, std::uint64_t seed) {
  if (n < 1) throw RangeError("sample_random needs n >= 1");
  const int count = span_count(time_samples, margin);
  if (count < n) {
    throw RangeError("sample_random: " + std::to_string(count) + " admissible indices < n=" + std::to_string(n));
  }
  // partial Fisher-Yates over the admissible range
  std::vector<int> pool(static_cast<std::size_t>(count));
  std::iota(pool.begin(), pool.end(), margin);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(count - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> sample_down_depth(int time_samples, int stride, int margin) {
  if (stride < 1) throw RangeError("sample_down_depth needs stride >= 1");
  std::vector<int> out;
  for (int t = margin; t <= time_samples - margin; t += stride) out.push_back(t);
  return out;
}

}  // namespace patchselect
