#pragma once

// Keypoint utilization strategies: which patches are used for training, and
// how per-patch decision statistics become one confidence per alarm.
//
// All B-scans passed to this module are expected to be depth-normalized
// already (see depth_normalize); patches are cut from the normalized data.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchselect/classifiers.hpp"
#include "patchselect/features.hpp"
#include "patchselect/gpr_core.hpp"
#include "patchselect/keypoints.hpp"

namespace patchselect {

enum class SamplerKind : std::uint8_t { TopEnergy, Regular, Random, EveryPoint, DownDepth };

/// Time-index sampler for one alarm's central A-scan.
struct Sampler {
  SamplerKind kind = SamplerKind::TopEnergy;
  int count = 1;           // K' (TopEnergy), n (Regular/Random), stride (DownDepth); unused for EveryPoint
  std::uint64_t seed = 0;  // Random only

  static Sampler top_energy(int k) { return {SamplerKind::TopEnergy, k, 0}; }
  static Sampler regular(int n) { return {SamplerKind::Regular, n, 0}; }
  static Sampler random(int n, std::uint64_t seed = 0) { return {SamplerKind::Random, n, seed}; }
  static Sampler every_point() { return {SamplerKind::EveryPoint, 1, 0}; }
  static Sampler down_depth(int stride) { return {SamplerKind::DownDepth, stride, 0}; }

  bool operator==(const Sampler&) const = default;
};

enum class TargetSampling : std::uint8_t { Energy, Regular };

struct TrainPolicy {
  int target_keypoints = 1;  // K
  TargetSampling target_sampling = TargetSampling::Energy;
  Sampler nontarget = Sampler::top_energy(1);

  void validate() const;
  bool operator==(const TrainPolicy&) const = default;
};

enum class Ordering : std::uint8_t { En, DS };
enum class SelectorKind : std::uint8_t { TopL, All, SlidingSum };

struct Selector {
  SelectorKind kind = SelectorKind::TopL;
  int value = 1;  // L (TopL) or window (SlidingSum); unused for All

  static Selector top(int l) { return {SelectorKind::TopL, l}; }
  static Selector all() { return {SelectorKind::All, 0}; }
  static Selector sliding_sum(int w) { return {SelectorKind::SlidingSum, w}; }

  bool operator==(const Selector&) const = default;
};

struct TestPolicy {
  Ordering ordering = Ordering::DS;
  Selector selector = Selector::top(1);
  int ds_stride = 4;

  void validate() const;
  bool operator==(const TestPolicy&) const = default;
};

struct StrategySpec {
  int index = 0;
  std::string name;
  TrainPolicy train;
  TestPolicy test;

  void validate() const;
  bool operator==(const StrategySpec&) const = default;
};

/// The eleven built-in strategies, index 1..11 (11 = PatchSelect).
const std::vector<StrategySpec>& registry();
const StrategySpec& registry_entry(int index);  // RangeError outside 1..11

/// Canonical one-line form, e.g.
///   index=11 name=PatchSelect target=energy:4 nontarget=downdepth:4 order=DS select=top:12 stride=4
std::string to_string(const StrategySpec& spec);
StrategySpec parse_strategy(std::string_view text);  // ConfigError on malformed input

std::string_view to_string(SamplerKind kind) noexcept;
std::string_view to_string(Ordering ordering) noexcept;

/// Time indices a sampler picks on one alarm's central A-scan. TopEnergy
/// returns MSEK order (strongest first), the others ascending depth order.
/// Random draws are seeded per alarm from (sampler seed, lane, run, downtrack index).
std::vector<int> sample_times(const Sampler& sampler, const BScan& normalized, const Alarm& alarm,
                              const MsekParams& msek_params);

/// Target-side time indices of a training policy.
std::vector<int> target_times(const TrainPolicy& policy, const BScan& normalized, const Alarm& alarm,
                              const MsekParams& msek_params);

/// B-scan of (lane, run) within `scans`; RangeError if absent.
const BScan& find_scan(std::span<const BScan> scans, LaneId lane, RunId run);

TrainingSet build_training_set(const StrategySpec& spec, std::span<const Alarm> alarms, std::span<const BScan> normalized,
                               FeatureKind featurizer, const MsekParams& msek_params);
TrainingSet build_training_set(const TrainPolicy& policy, std::span<const Alarm> alarms,
                               std::span<const BScan> normalized, FeatureKind featurizer,
                               const MsekParams& msek_params);

/// g(D, L): sum of the L largest entries of D (L > |D| saturates). The
/// entries are summed in descending order, so the result does not depend on
/// the order of D.
double aggregate(std::span<const double> d, int l);

/// Maximum over windows of `window` consecutive entries of their sum; a
/// sequence shorter than the window yields its total.
double sliding_sum(std::span<const double> depth_ordered, int window);

/// Final confidence from decision statistics on the DS grid (depth order).
double combine_ds(const Selector& selector, std::span<const double> depth_ordered);

/// Final confidence from decision statistics at MSEK keypoints (strongest
/// energy first): the max over the first min(L, n).
double combine_en(int l, std::span<const double> energy_ordered);

/// Time indices scored by a DS test policy: every ds_stride-th index of
/// [margin, T - margin].
std::vector<int> ds_grid(int time_samples, int ds_stride, int margin);

double score_alarm(const StrategySpec& spec, const Model& model, FeatureKind featurizer, const BScan& normalized,
                   const Alarm& alarm, const MsekParams& msek_params);

}  // namespace patchselect
