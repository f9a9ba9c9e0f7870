#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "patchselect/gpr_core.hpp"

namespace patchselect {

struct MsekParams {
  int smooth_window = 9;   // odd, >= 1
  int max_keypoints = 12;  // K
  int margin = kPatchHalf;

  void validate() const;
};

/// Per-row z-score across downtrack: a'(t,x) = (a(t,x) - mean_t) / (std_t + 1e-12).
BScan depth_normalize(const BScan& bscan);

/// Edge-truncated centered moving average of a(t)^2.
std::vector<double> smoothed_energy(std::span<const double> ascan, int smooth_window);

/// Indices of local maxima of `s` in [lo, hi]: s[t] > s[t-1] and the first
/// differing value to the right is smaller. A plateau reports its leftmost
/// index. Ascending order.
std::vector<int> local_maxima(std::span<const double> s, int lo, int hi);

/// Max-smoothed-energy keypoints of one A-scan: top-K local maxima of the
/// smoothed squared signal inside [margin, T - margin], by descending score
/// (ties: smaller time index). downtrack_index of the result is 0.
std::vector<Keypoint> msek_ascan(std::span<const double> ascan, const MsekParams& p);

/// MSEK on the central A-scan at downtrack_index of a depth-normalized scan.
std::vector<Keypoint> msek(const BScan& normalized, int downtrack_index, const MsekParams& p);

/// n indices evenly spaced over [margin, T - margin], both ends included.
std::vector<int> sample_regular(int time_samples, int n, int margin);

/// n distinct indices drawn uniformly from [margin, T - margin], sorted.
std::vector<int> sample_random(int time_samples, int n, int margin, std::uint64_t seed);

/// {margin, margin + stride, ...} up to T - margin.
std::vector<int> sample_down_depth(int time_samples, int stride, int margin);

}  // namespace patchselect
