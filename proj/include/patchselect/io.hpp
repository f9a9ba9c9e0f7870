#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "patchselect/gpr_core.hpp"

namespace patchselect::io {

inline constexpr char kBScanMagic[4] = {'G', 'P', 'R', 'B'};
inline constexpr std::uint16_t kBScanVersion = 1;

/// Binary B-scan layout (little-endian):
///   "GPRB" | u16 version=1 | u32 T | u32 X | f64 spacing_m | u32 lane | u32 run
///   | T*X f32 samples, time-major.
void write_bscan(std::ostream& out, const BScan& bscan);
BScan read_bscan(std::istream& in);

void save_bscan(const BScan& bscan, const std::filesystem::path& path);
BScan load_bscan(const std::filesystem::path& path);

/// Truth manifest CSV (leading "#" lines are skipped on read). Header:
///   object_id,lane_id,downtrack_position_m,depth_time_index,amplitude,lane_area_m2
void write_truth_csv(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth_csv(std::istream& in);

/// Alarm list CSV (leading "#" lines are skipped on read). Header:
///   alarm_id,lane_id,run_id,downtrack_index,downtrack_position_m,prescreen_score,label,truth_object_id,confidence,cluster_id
/// Empty fields encode absent optionals; label is "target" or "nontarget".
void write_alarms_csv(std::ostream& out, std::span<const Alarm> alarms);
std::vector<Alarm> read_alarms_csv(std::istream& in);

}  // namespace patchselect::io
