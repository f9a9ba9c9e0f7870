#include "patchselect/gpr_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "patchselect/errors.hpp"

namespace patchselect {

BScan::BScan(int time_samples, int downtrack_samples, double downtrack_spacing_m, LaneId lane, RunId run)
    : BScan(time_samples, downtrack_samples, downtrack_spacing_m, lane, run,
            std::vector<double>(static_cast<std::size_t>(std::max(time_samples, 0)) *
                                static_cast<std::size_t>(std::max(downtrack_samples, 0))))
{}

BScan::BScan(int time_samples, int downtrack_samples, double downtrack_spacing_m, LaneId lane, RunId run,
             std::vector<double> samples)
    : time_samples_(time_samples),
      downtrack_samples_(downtrack_samples),
      spacing_m_(downtrack_spacing_m),
      lane_(lane),
      run_(run),
      samples_(std::move(samples)) {
  if (time_samples < kMinScanExtent || downtrack_samples < kMinScanExtent) {
    throw ConfigError("BScan must be at least 18x18, got " + std::to_string(time_samples) + "x" +
                      std::to_string(downtrack_samples));
  }
  if (!(downtrack_spacing_m > 0.0)) throw ConfigError("BScan downtrack spacing must be positive");
  if (samples_.size() != static_cast<std::size_t>(time_samples) * static_cast<std::size_t>(downtrack_samples)) {
    throw ConfigError("BScan sample count does not match T*X");
  }
}

std::vector<double> BScan::column(int x) const {
  std::vector<double> out(static_cast<std::size_t>(time_samples_));
  for (int t = 0; t < time_samples_; ++t) out[static_cast<std::size_t>(t)] = at(t, x);
  return out;
}

void BScan::validate() const {
  if (time_samples_ < kMinScanExtent || downtrack_samples_ < kMinScanExtent)
    throw ConfigError("BScan smaller than 18x18");
  if (!(spacing_m_ > 0.0)) throw ConfigError("BScan downtrack spacing must be positive");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw ConfigError("BScan contains non-finite samples");
  }
}

bool window_fits(int time_samples, int downtrack_samples, int time_index, int downtrack_index) noexcept {
  const auto fits = [](int extent, int center) {
    return center - kPatchHalf >= 0 && center + (kPatchSize - kPatchHalf - 1) < extent;
  };
  return fits(time_samples, time_index) && fits(downtrack_samples, downtrack_index);
}

Patch extract_patch(const BScan& bscan, const Keypoint& kp, AlarmId source_alarm) {
  if (!window_fits(bscan.time_samples(), bscan.downtrack_samples(), kp.time_index, kp.downtrack_index)) {
    throw MarginViolation("18x18 window at (t=" + std::to_string(kp.time_index) +
                          ", x=" + std::to_string(kp.downtrack_index) + ") exceeds the B-scan");
  }
  Patch patch;
  patch.source_alarm = source_alarm;
  patch.source_keypoint = kp;

  const int t0 = kp.time_index - kPatchHalf;
  const int x0 = kp.downtrack_index - kPatchHalf;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c < kPatchSize; ++c) {
      const double v = bscan.at(t0 + r, x0 + c);
      patch.values[static_cast<std::size_t>(r * kPatchSize + c)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double range = hi - lo;
  if (!(range > 0.0)) {
    patch.values.fill(0.0);
    return patch;
  }
  for (double& v : patch.values) v = 2.0 * (v - lo) / range - 1.0;
  return patch;
}

std::vector<Alarm> label_alarms(std::span<const Alarm> alarms, const GroundTruth& truth, double halo_radius_m) {
  if (!(halo_radius_m > 0.0)) throw ConfigError("halo_radius_m must be positive");

  std::vector<Alarm> work(alarms.begin(), alarms.end());
  std::sort(work.begin(), work.end(), [](const Alarm& a, const Alarm& b) {
    return std::tie(a.lane_id, a.run_id, a.downtrack_position_m, a.downtrack_index, a.id) <
           std::tie(b.lane_id, b.run_id, b.downtrack_position_m, b.downtrack_index, b.id);
  });

  // Nearest object within the halo for each alarm (ties: smaller object id).
  std::vector<std::optional<std::size_t>> candidate(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < truth.objects.size(); ++k) {
      const TruthObject& obj = truth.objects[k];
      if (obj.lane_id != work[i].lane_id) continue;
      const double d = std::abs(obj.downtrack_position_m - work[i].downtrack_position_m);
      if (d > halo_radius_m) continue;
      if (d < best || (d == best && obj.object_id < truth.objects[*candidate[i]].object_id)) {
        best = d;
        candidate[i] = k;
      }
    }
  }

  // Per (run, object): the nearest alarm wins; ties go to the smaller downtrack index.
  std::map<std::pair<RunId, std::size_t>, std::size_t> winner;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!candidate[i]) continue;
    const auto key = std::make_pair(work[i].run_id, *candidate[i]);
    auto it = winner.find(key);
    if (it == winner.end()) {
      winner.emplace(key, i);
      continue;
    }
    const TruthObject& obj = truth.objects[*candidate[i]];
    const Alarm& cur = work[it->second];
    const double d_new = std::abs(obj.downtrack_position_m - work[i].downtrack_position_m);
    const double d_cur = std::abs(obj.downtrack_position_m - cur.downtrack_position_m);
    if (d_new < d_cur || (d_new == d_cur && work[i].downtrack_index < cur.downtrack_index)) it->second = i;
  }

  std::vector<Alarm> out;
  out.reserve(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    Alarm a = work[i];
    if (candidate[i]) {
      const auto key = std::make_pair(work[i].run_id, *candidate[i]);
      if (winner.at(key) != i) continue;  // duplicate of a nearer alarm
      a.label = Label::Target;
      a.truth_object_id = truth.objects[*candidate[i]].object_id;
    } else {
      a.label = Label::NonTarget;
      a.truth_object_id.reset();
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace patchselect
