#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patchselect {

using LaneId = std::uint32_t;
using RunId = std::uint32_t;
using AlarmId = std::uint32_t;
using ObjectId = std::uint32_t;

inline constexpr int kPatchSize = 18;
inline constexpr int kPatchHalf = 9;  // rows above the center; 8 rows below
inline constexpr int kPatchPixels = kPatchSize * kPatchSize;
inline constexpr int kMinScanExtent = kPatchSize;

/// One B-scan: amplitudes indexed [time][downtrack], stored time-major.
/// Samples are kept in double precision in memory; the on-disk format is f32.
class BScan {
 public:
  BScan() = default;
  BScan(int time_samples, int downtrack_samples, double downtrack_spacing_m, LaneId lane, RunId run);
  BScan(int time_samples, int downtrack_samples, double downtrack_spacing_m, LaneId lane, RunId run,
        std::vector<double> samples);

  int time_samples() const noexcept { return time_samples_; }
  int downtrack_samples() const noexcept { return downtrack_samples_; }
  double downtrack_spacing_m() const noexcept { return spacing_m_; }
  LaneId lane_id() const noexcept { return lane_; }
  RunId run_id() const noexcept { return run_; }

  double at(int t, int x) const noexcept { return samples_[index(t, x)]; }
  double& at(int t, int x) noexcept { return samples_[index(t, x)]; }

  std::span<const double> row(int t) const noexcept {
    return {samples_.data() + index(t, 0), static_cast<std::size_t>(downtrack_samples_)};
  }
  std::span<double> row(int t) noexcept {
    return {samples_.data() + index(t, 0), static_cast<std::size_t>(downtrack_samples_)};
  }

  /// Copy of the A-scan at downtrack index x.
  std::vector<double> column(int x) const;

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<double> samples() noexcept { return samples_; }

  /// Throws ConfigError if the invariants (finite samples, minimum extent,
  /// positive spacing) do not hold.
  void validate() const;

 private:
  std::size_t index(int t, int x) const noexcept {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(downtrack_samples_) +
           static_cast<std::size_t>(x);
  }

  int time_samples_ = 0;
  int downtrack_samples_ = 0;
  double spacing_m_ = 0.0;
  LaneId lane_ = 0;
  RunId run_ = 0;
  std::vector<double> samples_;
};

enum class Label : std::uint8_t { NonTarget = 0, Target = 1 };

struct Alarm {
  AlarmId id = 0;
  LaneId lane_id = 0;
  RunId run_id = 0;
  int downtrack_index = 0;
  double downtrack_position_m = 0.0;
  double prescreen_score = 0.0;
  Label label = Label::NonTarget;
  std::optional<ObjectId> truth_object_id;
  std::optional<double> confidence;
  std::optional<std::uint32_t> cluster_id;
};

struct Keypoint {
  int downtrack_index = 0;
  int time_index = 0;
  double score = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct Patch {
  std::array<double, kPatchPixels> values{};
  AlarmId source_alarm = 0;
  Keypoint source_keypoint;

  double at(int r, int c) const noexcept { return values[static_cast<std::size_t>(r * kPatchSize + c)]; }
};

struct TruthObject {
  ObjectId object_id = 0;
  LaneId lane_id = 0;
  double downtrack_position_m = 0.0;
  int depth_time_index = 0;
  double amplitude = 0.0;
};

struct GroundTruth {
  std::vector<TruthObject> objects;
  double lane_area_m2 = 0.0;
};

/// True when an 18x18 window centered at (time_index, downtrack_index) fits.
bool window_fits(int time_samples, int downtrack_samples, int time_index, int downtrack_index) noexcept;

/// 18x18 window centered at the keypoint (rows t-9..t+8, columns x-9..x+8),
/// min-max rescaled to [-1, 1]. A constant window becomes all zeros.
/// Throws MarginViolation if the window leaves the grid.
Patch extract_patch(const BScan& bscan, const Keypoint& kp, AlarmId source_alarm = 0);

/// Matches alarms against truth objects in the same lane. Within each run, an
/// alarm inside halo_radius_m of an object is a candidate for the nearest such
/// object; each object keeps only its nearest candidate (the others are
/// removed as duplicates). Alarms with no object in range become NonTarget.
/// Input order does not matter; output is sorted by (lane, run, downtrack).
std::vector<Alarm> label_alarms(std::span<const Alarm> alarms, const GroundTruth& truth,
                                double halo_radius_m = 0.25);

}  // namespace patchselect
