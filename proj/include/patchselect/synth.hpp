#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "patchselect/gpr_core.hpp"

namespace patchselect {

/// Parameters of the synthetic radargram model. A scene is
///
///   a(t, x) = exp(-attenuation_alpha * t) * (noise + ground band + objects)
///
/// where every buried object adds one or more hyperbolic reflections
/// t_r(x) = sqrt((t0 + r * gap)^2 + ((x - x0) / hyperbola_spread)^2), each
/// carrying a Gaussian-derivative (biphasic) wavelet whose amplitude tapers
/// with |x - x0|.
struct SceneConfig {
  int time_samples = 342;
  int downtrack_samples = 1400;
  double downtrack_spacing_m = 0.05;
  int n_targets = 13;
  int n_clutter = 6;
  double noise_sigma = 1.0;
  double attenuation_alpha = 0.004;
  double hyperbola_spread = 0.2;  // downtrack samples per time sample on the limbs
  int wavelet_width = 8;          // samples spanned by the two wavelet lobes
  std::uint64_t seed = 1;

  double lane_width_m = 1.0;
  double ground_band_time = 18.0;
  double ground_band_amplitude = 25.0;
  double taper_width = 12.0;      // Gaussian taper (downtrack samples) of the reflection amplitude
  double target_amplitude_min = 4.0;
  double target_amplitude_max = 7.0;
  double clutter_amplitude_min = 3.0;
  double clutter_amplitude_max = 6.0;
  int depth_min = 60;
  int depth_max = 250;
  int target_regions_min = 3;
  int target_regions_max = 4;
  int clutter_regions_min = 1;
  int clutter_regions_max = 1;
  double clutter_spread_scale_min = 0.4;  // clutter spread = hyperbola_spread * log-uniform scale
  double clutter_spread_scale_max = 2.5;
  double region_gap_min = 16.0;   // time samples between stacked reflections
  double region_gap_max = 24.0;
  int n_scatterers = 40;          // weak clutter placed freely along the lane, any depth
  double scatterer_amplitude_min = 1.0;
  double scatterer_amplitude_max = 3.0;
  double min_object_spacing_m = 3.0;
  double lane_start_m = 3.2;      // leave room for the prescreener's trailing window
  double lane_end_margin_m = 1.0;

  void validate() const;
  double lane_area_m2() const noexcept { return downtrack_samples * downtrack_spacing_m * lane_width_m; }
};

struct PrescreenerParams {
  double threshold = 3.5;    // standardized-energy units
  int background_window = 40;
  int guard = 12;
  double min_separation_m = 1.0;

  void validate() const;
};

struct BuriedObject {
  ObjectId object_id = 0;
  bool is_target = false;
  double downtrack_position_m = 0.0;
  double depth = 0.0;         // apex time index of the first reflection
  double amplitude = 0.0;
  double spread = 0.0;
  int regions = 1;
  double region_gap = 0.0;
};

struct LaneLayout {
  LaneId lane_id = 0;
  std::vector<BuriedObject> objects;
};

/// Random object layout of one lane (targets and clutter).
LaneLayout generate_layout(const SceneConfig& cfg, LaneId lane, std::uint64_t seed);

/// One pass over a lane: deterministic in (cfg, layout, seed).
BScan render_run(const SceneConfig& cfg, const LaneLayout& layout, RunId run, std::uint64_t seed);

/// Truth entries (targets only) of a layout.
GroundTruth ground_truth(const SceneConfig& cfg, const LaneLayout& layout);

/// Single-run scene on lane 0: layout and noise both drawn from cfg.seed.
std::pair<BScan, GroundTruth> generate_scene(const SceneConfig& cfg);

/// Biphasic wavelet (first derivative of a Gaussian, unit peak at tau = +/- width/4).
double wavelet(double tau, int wavelet_width) noexcept;

/// Column energy E(x) = sum_t a(t, x)^2.
std::vector<double> column_energy(const BScan& bscan);

/// E(x) standardized against the mean/std of the trailing background window
/// [x - guard - window, x - guard - 1]. Columns without a full window score 0.
std::vector<double> standardized_energy(std::span<const double> energy, int background_window, int guard);

/// Local maxima of `score` in [lo, hi] exceeding `threshold`, strongest first;
/// a maximum within min_separation_m of an already accepted one is dropped
/// (equal scores: the smaller index is accepted first). Ascending result.
std::vector<int> pick_peaks(std::span<const double> score, int lo, int hi, double threshold, double min_separation_m,
                            double spacing_m);

/// Energy-anomaly prescreener. Alarms come back unlabeled (NonTarget) with
/// ids 0..n-1 in downtrack order.
std::vector<Alarm> prescreen(const BScan& bscan, const PrescreenerParams& p);

}  // namespace patchselect
