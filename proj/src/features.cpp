#include "patchselect/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "patchselect/errors.hpp"

namespace patchselect {
namespace {

void hog_into(const Patch& patch, std::span<double> out) {
  using namespace hog;
  std::fill(out.begin(), out.end(), 0.0);
  constexpr double bin_width = 180.0 / kBins;
  const auto clamp = [](int i) { return std::clamp(i, 0, kPatchSize - 1); };

  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c < kPatchSize; ++c) {
      const double gx = patch.at(r, clamp(c + 1)) - patch.at(r, clamp(c - 1));
      const double gy = patch.at(clamp(r + 1), c) - patch.at(clamp(r - 1), c);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;

      // linear interpolation between the two nearest bin centers, wrapping at 180
      const double pos = angle / bin_width - 0.5;
      const int lower = static_cast<int>(std::floor(pos));
      const double frac = pos - lower;
      const int b0 = (lower + kBins) % kBins;
      const int b1 = (lower + 1) % kBins;

      const int cell = (r / kCell) * kCellsPerSide + (c / kCell);
      out[static_cast<std::size_t>(cell * kBins + b0)] += mag * (1.0 - frac);
      out[static_cast<std::size_t>(cell * kBins + b1)] += mag * frac;
    }
  }

  // L2-Hys over the single block
  const auto l2_normalize = [&out] {
    double ss = 0.0;
    for (double v : out) ss += v * v;
    const double norm = std::sqrt(ss + kNormEps * kNormEps);
    for (double& v : out) v /= norm;
  };
  l2_normalize();
  for (double& v : out) v = std::min(v, kClip);
  l2_normalize();
}

// Filter coefficients over a 2x2 block [a0 a1; a2 a3].
constexpr std::array<std::array<double, 4>, ehd::kEdgeTypes> kEhdFilters = {{
    {1.0, -1.0, 1.0, -1.0},                                        // vertical
    {1.0, 1.0, -1.0, -1.0},                                        // horizontal
    {std::numbers::sqrt2, 0.0, 0.0, -std::numbers::sqrt2},         // 45 degrees
    {0.0, std::numbers::sqrt2, -std::numbers::sqrt2, 0.0},         // 135 degrees
    {2.0, -2.0, -2.0, 2.0},                                        // non-directional
}};

void ehd_into(const Patch& patch, std::span<double> out) {
  using namespace ehd;
  std::fill(out.begin(), out.end(), 0.0);
  constexpr int blocks_per_cell = (kCell / 2) * (kCell / 2);
  for (int cr = 0; cr < kCellsPerSide; ++cr) {
    for (int cc = 0; cc < kCellsPerSide; ++cc) {
      const int cell = cr * kCellsPerSide + cc;
      for (int br = 0; br < kCell / 2; ++br) {
        for (int bc = 0; bc < kCell / 2; ++bc) {
          const int r = cr * kCell + 2 * br;
          const int c = cc * kCell + 2 * bc;
          const std::array<double, 4> a = {patch.at(r, c), patch.at(r, c + 1), patch.at(r + 1, c),
                                           patch.at(r + 1, c + 1)};
          int best = -1;
          double best_response = 0.0;
          for (int k = 0; k < kEdgeTypes; ++k) {
            const auto& f = kEhdFilters[static_cast<std::size_t>(k)];
            const double response = std::abs(f[0] * a[0] + f[1] * a[1] + f[2] * a[2] + f[3] * a[3]);
            if (response > best_response) {
              best_response = response;
              best = k;
            }
          }
          if (best >= 0 && best_response >= kThreshold) out[static_cast<std::size_t>(cell * kEdgeTypes + best)] += 1.0;
        }
      }
      for (int k = 0; k < kEdgeTypes; ++k) out[static_cast<std::size_t>(cell * kEdgeTypes + k)] /= blocks_per_cell;
    }
  }
}

}  // namespace

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::Raw: return "raw";
    case FeatureKind::Hog: return "hog";
    case FeatureKind::Ehd: return "ehd";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "raw") return FeatureKind::Raw;
  if (name == "hog") return FeatureKind::Hog;
  if (name == "ehd") return FeatureKind::Ehd;
  throw ConfigError("unknown feature kind '" + std::string(name) + "'");
}

void extract_features_into(FeatureKind kind, const Patch& patch, std::span<double> out) {
  if (out.size() != feature_dim(kind)) throw KindMismatch("feature buffer has the wrong length");
  switch (kind) {
    case FeatureKind::Raw:
      std::copy(patch.values.begin(), patch.values.end(), out.begin());
      return;
    case FeatureKind::Hog:
      hog_into(patch, out);
      return;
    case FeatureKind::Ehd:
      ehd_into(patch, out);
      return;
  }
}

FeatureVector extract_features(FeatureKind kind, const Patch& patch) {
  FeatureVector fv{kind, std::vector<double>(feature_dim(kind))};
  extract_features_into(kind, patch, fv.values);
  return fv;
}

FeatureVector feat_raw(const Patch& patch) { return extract_features(FeatureKind::Raw, patch); }
FeatureVector feat_hog(const Patch& patch) { return extract_features(FeatureKind::Hog, patch); }
FeatureVector feat_ehd(const Patch& patch) { return extract_features(FeatureKind::Ehd, patch); }

}  // namespace patchselect
