#include "patchselect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchselect/errors.hpp"
#include "patchselect/keypoints.hpp"
#include "patchselect/rng.hpp"

namespace patchselect {

void SceneConfig::validate() const {
  if (time_samples < 50) throw ConfigError("scene needs T >= 50");
  if (downtrack_samples < kMinScanExtent) throw ConfigError("scene needs X >= 18");
  if (!(downtrack_spacing_m > 0.0)) throw ConfigError("downtrack_spacing_m must be positive");
  if (scatterer_amplitude_max < scatterer_amplitude_min || scatterer_amplitude_min < 0.0) {
    throw ConfigError("bad scatterer amplitude range");
  }
  if (n_targets < 0 || n_clutter < 0 || n_scatterers < 0) throw ConfigError("object counts must be >= 0");
  if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be positive");
  if (attenuation_alpha < 0.0) throw ConfigError("attenuation_alpha must be >= 0");
  if (!(hyperbola_spread > 0.0)) throw ConfigError("hyperbola_spread must be positive");
  if (wavelet_width < 1) throw ConfigError("wavelet_width must be >= 1");
  if (!(taper_width > 0.0)) throw ConfigError("taper_width must be positive");
  if (depth_min < 0 || depth_max < depth_min || depth_max >= time_samples) throw ConfigError("bad depth range");
  if (target_regions_min < 1 || target_regions_max < target_regions_min || clutter_regions_min < 1 ||
      clutter_regions_max < clutter_regions_min) {
    throw ConfigError("bad region counts");
  }
  if (target_amplitude_max < target_amplitude_min || clutter_amplitude_max < clutter_amplitude_min) {
    throw ConfigError("bad amplitude range");
  }
  if (region_gap_max < region_gap_min || region_gap_min < 0.0) throw ConfigError("bad region gap range");
  if (!(clutter_spread_scale_min > 0.0) || clutter_spread_scale_max < clutter_spread_scale_min) {
    throw ConfigError("bad clutter spread range");
  }
  if (!(min_object_spacing_m > 0.0)) throw ConfigError("min_object_spacing_m must be positive");
}

void PrescreenerParams::validate() const {
  if (!(background_window > guard) || guard < 0) throw ConfigError("prescreener needs background_window > guard >= 0");
  if (!(min_separation_m > 0.0)) throw ConfigError("min_separation_m must be positive");
}

double wavelet(double tau, int wavelet_width) noexcept {
  const double s = wavelet_width / 4.0;
  const double u = tau / s;
  return u * std::exp(0.5 - 0.5 * u * u);
}

LaneLayout generate_layout(const SceneConfig& cfg, LaneId lane, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0x1a7e, lane));
  LaneLayout layout;
  layout.lane_id = lane;

  const double lo = cfg.lane_start_m;
  const double hi = cfg.downtrack_samples * cfg.downtrack_spacing_m - cfg.lane_end_margin_m;
  const int total = cfg.n_targets + cfg.n_clutter;

  // one equal-width slot per object, jittered inside the slot so neighbours
  // stay min_object_spacing_m apart; targets and clutter get shuffled slots
  const double slot = total > 0 ? (hi - lo) / total : 0.0;
  if (total > 0 && slot < cfg.min_object_spacing_m) {
    throw ConfigError("lane too short for " + std::to_string(total) + " objects at the requested spacing");
  }
  std::vector<int> order(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) order[static_cast<std::size_t>(k)] = k;
  rng.shuffle(std::span<int>(order));
  std::vector<double> positions(static_cast<std::size_t>(total));
  const double slack = slot - cfg.min_object_spacing_m;
  for (int k = 0; k < total; ++k) {
    const int s = order[static_cast<std::size_t>(k)];
    positions[static_cast<std::size_t>(k)] = lo + s * slot + 0.5 * cfg.min_object_spacing_m + rng.uniform(0.0, slack);
  }

  for (int k = 0; k < total; ++k) {
    BuriedObject obj;
    obj.is_target = k < cfg.n_targets;
    obj.object_id = lane * 1000u + static_cast<ObjectId>(k);
    obj.downtrack_position_m = std::round(positions[static_cast<std::size_t>(k)] / cfg.downtrack_spacing_m) *
                               cfg.downtrack_spacing_m;
    obj.depth = static_cast<double>(cfg.depth_min + static_cast<int>(rng.below(
                                                        static_cast<std::uint64_t>(cfg.depth_max - cfg.depth_min + 1))));
    if (obj.is_target) {
      obj.amplitude = rng.uniform(cfg.target_amplitude_min, cfg.target_amplitude_max);
      obj.regions = cfg.target_regions_min +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.target_regions_max - cfg.target_regions_min + 1)));
    } else {
      obj.amplitude = rng.uniform(cfg.clutter_amplitude_min, cfg.clutter_amplitude_max);
      obj.regions = cfg.clutter_regions_min +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.clutter_regions_max - cfg.clutter_regions_min + 1)));
    }
    if (obj.is_target) {
      obj.spread = cfg.hyperbola_spread * rng.uniform(0.75, 1.25);
    } else {
      obj.spread = cfg.hyperbola_spread * std::exp(rng.uniform(std::log(cfg.clutter_spread_scale_min),
                                                               std::log(cfg.clutter_spread_scale_max)));
    }
    obj.region_gap = rng.uniform(cfg.region_gap_min, cfg.region_gap_max);
    layout.objects.push_back(obj);
  }

  const double length = cfg.downtrack_samples * cfg.downtrack_spacing_m;
  for (int k = 0; k < cfg.n_scatterers; ++k) {
    BuriedObject obj;
    obj.object_id = lane * 1000u + static_cast<ObjectId>(total + k);
    obj.downtrack_position_m = std::round(rng.uniform(0.0, length) / cfg.downtrack_spacing_m) * cfg.downtrack_spacing_m;
    obj.depth = rng.uniform(cfg.ground_band_time + cfg.wavelet_width, cfg.time_samples - kPatchHalf);
    obj.amplitude = rng.uniform(cfg.scatterer_amplitude_min, cfg.scatterer_amplitude_max);
    obj.spread = cfg.hyperbola_spread * std::exp(rng.uniform(std::log(cfg.clutter_spread_scale_min),
                                                             std::log(cfg.clutter_spread_scale_max)));
    layout.objects.push_back(obj);
  }
  return layout;
}

GroundTruth ground_truth(const SceneConfig& cfg, const LaneLayout& layout) {
  GroundTruth truth;
  truth.lane_area_m2 = cfg.lane_area_m2();
  for (const BuriedObject& o : layout.objects) {
    if (!o.is_target) continue;
    truth.objects.push_back({o.object_id, layout.lane_id, o.downtrack_position_m, static_cast<int>(std::lround(o.depth)),
                             o.amplitude});
  }
  return truth;
}

BScan render_run(const SceneConfig& cfg, const LaneLayout& layout, RunId run, std::uint64_t seed) {
  cfg.validate();
  const int nt = cfg.time_samples, nx = cfg.downtrack_samples;
  BScan scan(nt, nx, cfg.downtrack_spacing_m, layout.lane_id, run);
  Rng rng(derive_seed(seed, 0x5ca7, layout.lane_id, run));

  for (double& v : scan.samples()) v = cfg.noise_sigma * rng.normal();

  const double wavelet_reach = cfg.wavelet_width * 1.5;
  for (int t = 0; t < nt; ++t) {
    const double band = cfg.ground_band_amplitude * wavelet(t - cfg.ground_band_time, cfg.wavelet_width);
    if (band == 0.0) continue;
    for (double& v : scan.row(t)) v += band;
  }

  for (const BuriedObject& o : layout.objects) {
    const double x0 = o.downtrack_position_m / cfg.downtrack_spacing_m;
    const int reach = static_cast<int>(std::ceil(3.0 * cfg.taper_width));
    const int xa = std::max(0, static_cast<int>(std::floor(x0)) - reach);
    const int xb = std::min(nx - 1, static_cast<int>(std::ceil(x0)) + reach);
    for (int x = xa; x <= xb; ++x) {
      const double dx = (x - x0) / cfg.taper_width;
      const double taper = std::exp(-0.5 * dx * dx);
      const double lateral = (x - x0) / o.spread;
      for (int r = 0; r < o.regions; ++r) {
        const double apex = o.depth + r * o.region_gap;
        const double tc = std::sqrt(apex * apex + lateral * lateral);
        const double amp = o.amplitude * taper * std::pow(0.8, r) * (r % 2 == 0 ? 1.0 : -1.0);
        const int ta = std::max(0, static_cast<int>(std::floor(tc - wavelet_reach)));
        const int tb = std::min(nt - 1, static_cast<int>(std::ceil(tc + wavelet_reach)));
        for (int t = ta; t <= tb; ++t) scan.at(t, x) += amp * wavelet(t - tc, cfg.wavelet_width);
      }
    }
  }

  // attenuation envelope; samples are stored at sensor (f32) precision
  for (int t = 0; t < nt; ++t) {
    const double gain = std::exp(-cfg.attenuation_alpha * t);
    for (double& v : scan.row(t)) v = static_cast<double>(static_cast<float>(v * gain));
  }
  return scan;
}

std::pair<BScan, GroundTruth> generate_scene(const SceneConfig& cfg) {
  const LaneLayout layout = generate_layout(cfg, 0, cfg.seed);
  return {render_run(cfg, layout, 0, cfg.seed), ground_truth(cfg, layout)};
}

std::vector<double> column_energy(const BScan& bscan) {
  std::vector<double> energy(static_cast<std::size_t>(bscan.downtrack_samples()), 0.0);
  for (int t = 0; t < bscan.time_samples(); ++t) {
    const auto row = bscan.row(t);
    for (std::size_t x = 0; x < row.size(); ++x) energy[x] += row[x] * row[x];
  }
  return energy;
}

std::vector<double> standardized_energy(std::span<const double> energy, int background_window, int guard) {
  const int nx = static_cast<int>(energy.size());
  std::vector<double> z(energy.size(), 0.0);
  for (int x = background_window + guard; x < nx; ++x) {
    const int a = x - guard - background_window;
    double mean = 0.0;
    for (int k = a; k < a + background_window; ++k) mean += energy[static_cast<std::size_t>(k)];
    mean /= background_window;
    double ss = 0.0;
    for (int k = a; k < a + background_window; ++k) {
      const double d = energy[static_cast<std::size_t>(k)] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / background_window);
    z[static_cast<std::size_t>(x)] = (energy[static_cast<std::size_t>(x)] - mean) / (sd + 1e-12);
  }
  return z;
}

std::vector<int> pick_peaks(std::span<const double> score, int lo, int hi, double threshold, double min_separation_m,
                            double spacing_m) {
  std::vector<int> candidates;
  for (int x : local_maxima(score, lo, hi)) {
    if (score[static_cast<std::size_t>(x)] > threshold) candidates.push_back(x);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
  });
  std::vector<int> accepted;
  for (int x : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](int y) {
      return std::abs(x - y) * spacing_m <= min_separation_m;
    });
    if (clear) accepted.push_back(x);
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

std::vector<Alarm> prescreen(const BScan& bscan, const PrescreenerParams& p) {
  p.validate();
  if (bscan.downtrack_samples() <= p.background_window + p.guard) {
    throw ConfigError("B-scan narrower than the prescreener background window");
  }
  const BScan normalized = depth_normalize(bscan);
  const auto energy = column_energy(normalized);
  const auto z = standardized_energy(energy, p.background_window, p.guard);

  const int lo = std::max(p.background_window + p.guard, kPatchHalf);
  const int hi = bscan.downtrack_samples() - kPatchHalf;
  std::vector<Alarm> alarms;
  for (int x : pick_peaks(z, lo, hi, p.threshold, p.min_separation_m, bscan.downtrack_spacing_m())) {
    Alarm a;
    a.id = static_cast<AlarmId>(alarms.size());
    a.lane_id = bscan.lane_id();
    a.run_id = bscan.run_id();
    a.downtrack_index = x;
    a.downtrack_position_m = x * bscan.downtrack_spacing_m();
    a.prescreen_score = z[static_cast<std::size_t>(x)];
    alarms.push_back(a);
  }
  return alarms;
}

}  // namespace patchselect
