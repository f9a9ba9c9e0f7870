#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "patchselect/gpr_core.hpp"

namespace patchselect {

enum class FeatureKind : std::uint8_t { Raw = 0, Hog = 1, Ehd = 2 };

constexpr std::size_t feature_dim(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::Raw: return 324;
    case FeatureKind::Hog: return 81;
    case FeatureKind::Ehd: return 45;
  }
  return 0;
}

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view name);  // "raw" | "hog" | "ehd"

struct FeatureVector {
  FeatureKind kind = FeatureKind::Raw;
  std::vector<double> values;
};

namespace hog {
inline constexpr int kCell = 6;
inline constexpr int kCellsPerSide = 3;
inline constexpr int kBins = 9;
inline constexpr double kNormEps = 1e-6;
inline constexpr double kClip = 0.2;
}  // namespace hog

namespace ehd {
inline constexpr int kCell = 6;
inline constexpr int kCellsPerSide = 3;
inline constexpr int kEdgeTypes = 5;  // vertical, horizontal, 45deg, 135deg, non-directional
inline constexpr double kThreshold = 0.15;
}  // namespace ehd

/// Row-major rasterization of the 18x18 patch.
FeatureVector feat_raw(const Patch& patch);

/// HOG on the 18x18 patch: central-difference gradients with replicated
/// edges, unsigned orientation, magnitude-weighted linear vote between the
/// two nearest of 9 bins (centers at 10, 30, ..., 170 degrees) in each 6x6
/// cell, then one 3x3-cell block normalized L2-Hys (eps 1e-6, clip 0.2).
FeatureVector feat_hog(const Patch& patch);

/// MPEG-7 style edge histogram: 3x3 cells of 6x6 pixels, nine 2x2 blocks per
/// cell, five edge filters per block; the strongest filter is counted when
/// its |response| >= 0.15. Counts are divided by 9 (blocks per cell).
FeatureVector feat_ehd(const Patch& patch);

FeatureVector extract_features(FeatureKind kind, const Patch& patch);

/// Writes the features of `patch` into `out` (size feature_dim(kind)).
void extract_features_into(FeatureKind kind, const Patch& patch, std::span<double> out);

}  // namespace patchselect
