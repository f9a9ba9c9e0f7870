#include "patchselect/strategy.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "patchselect/errors.hpp"
#include "patchselect/rng.hpp"

namespace patchselect {

void TrainPolicy::validate() const {
  if (target_keypoints < 1) throw ConfigError("target keypoint count must be >= 1");
  if (nontarget.kind != SamplerKind::EveryPoint && nontarget.count < 1) {
    throw ConfigError("non-target sampler parameter must be >= 1");
  }
}

void TestPolicy::validate() const {
  if (ds_stride < 1) throw ConfigError("ds_stride must be >= 1");
  if (ordering == Ordering::En && selector.kind != SelectorKind::TopL) {
    throw ConfigError("En ordering requires a top-L selector");
  }
  if (selector.kind != SelectorKind::All && selector.value < 1) throw ConfigError("selector parameter must be >= 1");
}

void StrategySpec::validate() const {
  if (name.empty() || name.find_first_of(" \t\n=") != std::string::npos) {
    throw ConfigError("strategy name must be a non-empty token");
  }
  train.validate();
  test.validate();
}

const std::vector<StrategySpec>& registry() {
  static const std::vector<StrategySpec> rows = [] {
    using S = Sampler;
    const auto energy = TargetSampling::Energy;
    std::vector<StrategySpec> r = {
        {1, "S1", {3, energy, S::top_energy(3)}, {Ordering::DS, Selector::top(3), 4}},
        {2, "S2", {2, energy, S::top_energy(2)}, {Ordering::En, Selector::top(2), 4}},
        {3, "S3", {1, energy, S::regular(5)}, {Ordering::DS, Selector::top(3), 4}},
        {4, "S4", {1, energy, S::random(5)}, {Ordering::DS, Selector::all(), 4}},
        {5, "S5", {1, energy, S::top_energy(1)}, {Ordering::DS, Selector::top(12), 4}},
        {6, "S6", {1, energy, S::top_energy(1)}, {Ordering::DS, Selector::top(1), 4}},
        {7, "S7", {5, TargetSampling::Regular, S::random(5)}, {Ordering::DS, Selector::all(), 4}},
        {8, "S8", {3, energy, S::top_energy(3)}, {Ordering::En, Selector::top(1), 4}},
        {9, "S9", {1, energy, S::top_energy(1)}, {Ordering::DS, Selector::sliding_sum(7), 4}},
        {10, "S10", {1, energy, S::top_energy(1)}, {Ordering::En, Selector::top(1), 4}},
        {11, "PatchSelect", {4, energy, S::down_depth(4)}, {Ordering::DS, Selector::top(12), 4}},
    };
    return r;
  }();
  return rows;
}

const StrategySpec& registry_entry(int index) {
  const auto& r = registry();
  if (index < 1 || index > static_cast<int>(r.size())) throw RangeError("no strategy with index " + std::to_string(index));
  return r[static_cast<std::size_t>(index - 1)];
}

// ------------------------------------------------------------ text form --

std::string_view to_string(SamplerKind kind) noexcept {
  switch (kind) {
    case SamplerKind::TopEnergy: return "topenergy";
    case SamplerKind::Regular: return "regular";
    case SamplerKind::Random: return "random";
    case SamplerKind::EveryPoint: return "everypoint";
    case SamplerKind::DownDepth: return "downdepth";
  }
  return "?";
}

std::string_view to_string(Ordering ordering) noexcept { return ordering == Ordering::En ? "En" : "DS"; }

std::string to_string(const StrategySpec& spec) {
  std::ostringstream out;
  out << "index=" << spec.index << " name=" << spec.name << " target="
      << (spec.train.target_sampling == TargetSampling::Energy ? "energy" : "regular") << ':'
      << spec.train.target_keypoints << " nontarget=" << to_string(spec.train.nontarget.kind);
  switch (spec.train.nontarget.kind) {
    case SamplerKind::EveryPoint: break;
    case SamplerKind::Random: out << ':' << spec.train.nontarget.count << ':' << spec.train.nontarget.seed; break;
    default: out << ':' << spec.train.nontarget.count;
  }
  out << " order=" << to_string(spec.test.ordering) << " select=";
  switch (spec.test.selector.kind) {
    case SelectorKind::TopL: out << "top:" << spec.test.selector.value; break;
    case SelectorKind::All: out << "all"; break;
    case SelectorKind::SlidingSum: out << "slide:" << spec.test.selector.value; break;
  }
  out << " stride=" << spec.test.ds_stride;
  return out.str();
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("bad " + std::string(what) + " value '" + std::string(s) + "'");
  }
  return v;
}

Sampler parse_sampler(std::string_view text) {
  const auto parts = split(text, ':');
  const auto arg = [&](std::size_t n) {
    if (parts.size() != n + 1) throw ConfigError("bad sampler '" + std::string(text) + "'");
  };
  if (parts[0] == "everypoint") {
    arg(0);
    return Sampler::every_point();
  }
  if (parts[0] == "random") {
    if (parts.size() == 2) return Sampler::random(parse_number<int>(parts[1], "sampler"));
    arg(2);
    return Sampler::random(parse_number<int>(parts[1], "sampler"), parse_number<std::uint64_t>(parts[2], "seed"));
  }
  arg(1);
  const int n = parse_number<int>(parts[1], "sampler");
  if (parts[0] == "topenergy") return Sampler::top_energy(n);
  if (parts[0] == "regular") return Sampler::regular(n);
  if (parts[0] == "downdepth") return Sampler::down_depth(n);
  throw ConfigError("unknown sampler '" + std::string(parts[0]) + "'");
}

}  // namespace

StrategySpec parse_strategy(std::string_view text) {
  StrategySpec spec;
  bool seen[7] = {};
  static constexpr std::string_view keys[7] = {"index", "name", "target", "nontarget", "order", "select", "stride"};
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + token + "'");
    const std::string_view key = std::string_view(token).substr(0, eq);
    const std::string_view value = std::string_view(token).substr(eq + 1);
    const auto it = std::find(std::begin(keys), std::end(keys), key);
    if (it == std::end(keys)) throw ConfigError("unknown strategy field '" + std::string(key) + "'");
    const auto k = static_cast<std::size_t>(it - std::begin(keys));
    if (seen[k]) throw ConfigError("duplicate strategy field '" + std::string(key) + "'");
    seen[k] = true;
    switch (k) {
      case 0: spec.index = parse_number<int>(value, "index"); break;
      case 1: spec.name = std::string(value); break;
      case 2: {
        const auto parts = split(value, ':');
        if (parts.size() != 2 || (parts[0] != "energy" && parts[0] != "regular")) {
          throw ConfigError("bad target policy '" + std::string(value) + "'");
        }
        spec.train.target_sampling = parts[0] == "energy" ? TargetSampling::Energy : TargetSampling::Regular;
        spec.train.target_keypoints = parse_number<int>(parts[1], "target");
        break;
      }
      case 3: spec.train.nontarget = parse_sampler(value); break;
      case 4:
        if (value == "En") spec.test.ordering = Ordering::En;
        else if (value == "DS") spec.test.ordering = Ordering::DS;
        else throw ConfigError("bad ordering '" + std::string(value) + "'");
        break;
      case 5: {
        const auto parts = split(value, ':');
        if (parts.size() == 1 && parts[0] == "all") {
          spec.test.selector = Selector::all();
        } else if (parts.size() == 2 && parts[0] == "top") {
          spec.test.selector = Selector::top(parse_number<int>(parts[1], "select"));
        } else if (parts.size() == 2 && parts[0] == "slide") {
          spec.test.selector = Selector::sliding_sum(parse_number<int>(parts[1], "select"));
        } else {
          throw ConfigError("bad selector '" + std::string(value) + "'");
        }
        break;
      }
      default: spec.test.ds_stride = parse_number<int>(value, "stride");
    }
  }
  for (std::size_t k = 0; k < 7; ++k) {
    if (!seen[k] && k != 6) throw ConfigError("strategy is missing field '" + std::string(keys[k]) + "'");
  }
  spec.validate();
  return spec;
}

// -------------------------------------------------------------- samplers --

std::vector<int> sample_times(const Sampler& sampler, const BScan& normalized, const Alarm& alarm,
                              const MsekParams& msek_params) {
  const int nt = normalized.time_samples();
  const int m = msek_params.margin;
  switch (sampler.kind) {
    case SamplerKind::TopEnergy: {
      MsekParams p = msek_params;
      p.max_keypoints = sampler.count;
      std::vector<int> out;
      for (const Keypoint& kp : msek(normalized, alarm.downtrack_index, p)) out.push_back(kp.time_index);
      return out;
    }
    case SamplerKind::Regular: return sample_regular(nt, sampler.count, m);
    case SamplerKind::Random:
      return sample_random(nt, sampler.count, m,
                           derive_seed(sampler.seed, alarm.lane_id, alarm.run_id,
                                       static_cast<std::uint64_t>(alarm.downtrack_index)));
    case SamplerKind::EveryPoint: return sample_down_depth(nt, 1, m);
    case SamplerKind::DownDepth: return sample_down_depth(nt, sampler.count, m);
  }
  return {};
}

std::vector<int> target_times(const TrainPolicy& policy, const BScan& normalized, const Alarm& alarm,
                              const MsekParams& msek_params) {
  if (policy.target_sampling == TargetSampling::Regular) {
    return sample_regular(normalized.time_samples(), policy.target_keypoints, msek_params.margin);
  }
  return sample_times(Sampler::top_energy(policy.target_keypoints), normalized, alarm, msek_params);
}

const BScan& find_scan(std::span<const BScan> scans, LaneId lane, RunId run) {
  for (const BScan& s : scans) {
    if (s.lane_id() == lane && s.run_id() == run) return s;
  }
  throw RangeError("no B-scan for lane " + std::to_string(lane) + " run " + std::to_string(run));
}

TrainingSet build_training_set(const TrainPolicy& policy, std::span<const Alarm> alarms,
                               std::span<const BScan> normalized, FeatureKind featurizer,
                               const MsekParams& msek_params) {
  policy.validate();
  msek_params.validate();
  TrainingSet ts{FeatureMatrix(featurizer), {}, {}};
  std::size_t n_pos = 0, n_neg = 0;
  std::vector<double> row(feature_dim(featurizer));
  for (const Alarm& a : alarms) {
    const BScan& scan = find_scan(normalized, a.lane_id, a.run_id);
    const bool target = a.label == Label::Target;
    const auto times = target ? target_times(policy, scan, a, msek_params)
                              : sample_times(policy.nontarget, scan, a, msek_params);
    for (int t : times) {
      const Patch patch = extract_patch(scan, {a.downtrack_index, t, 0.0}, a.id);
      extract_features_into(featurizer, patch, row);
      ts.features.append(row);
      ts.labels.push_back(target ? 1 : -1);
      ts.provenance.push_back(a.id);
      ++(target ? n_pos : n_neg);
    }
  }
  if (n_pos == 0) throw EmptyClass("training set has no target patches");
  if (n_neg == 0) throw EmptyClass("training set has no non-target patches");
  return ts;
}

TrainingSet build_training_set(const StrategySpec& spec, std::span<const Alarm> alarms, std::span<const BScan> normalized,
                               FeatureKind featurizer, const MsekParams& msek_params) {
  return build_training_set(spec.train, alarms, normalized, featurizer, msek_params);
}

// ----------------------------------------------------------- aggregation --

double aggregate(std::span<const double> d, int l) {
  if (d.empty()) throw EmptyInput("aggregate of an empty sequence");
  if (l < 1) throw RangeError("aggregate needs L >= 1");
  const auto take = std::min(d.size(), static_cast<std::size_t>(l));
  std::vector<double> sorted(d.begin(), d.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), sorted.end(),
                    std::greater<>());
  double s = 0.0;
  for (std::size_t j = 0; j < take; ++j) s += sorted[j];
  return s;
}

double sliding_sum(std::span<const double> depth_ordered, int window) {
  if (depth_ordered.empty()) throw EmptyInput("sliding sum of an empty sequence");
  if (window < 1) throw RangeError("sliding window must be >= 1");
  const auto w = static_cast<std::size_t>(window);
  if (depth_ordered.size() <= w) {
    double s = 0.0;
    for (double v : depth_ordered) s += v;
    return s;
  }
  double best = 0.0;
  for (std::size_t start = 0; start + w <= depth_ordered.size(); ++start) {
    double s = 0.0;
    for (std::size_t k = start; k < start + w; ++k) s += depth_ordered[k];
    if (start == 0 || s > best) best = s;
  }
  return best;
}

double combine_ds(const Selector& selector, std::span<const double> depth_ordered) {
  switch (selector.kind) {
    case SelectorKind::TopL: return aggregate(depth_ordered, selector.value);
    case SelectorKind::All: return aggregate(depth_ordered, static_cast<int>(depth_ordered.size()));
    case SelectorKind::SlidingSum: return sliding_sum(depth_ordered, selector.value);
  }
  return 0.0;
}

double combine_en(int l, std::span<const double> energy_ordered) {
  if (energy_ordered.empty()) throw EmptyInput("no keypoints to score");
  if (l < 1) throw RangeError("L must be >= 1");
  const auto take = std::min(energy_ordered.size(), static_cast<std::size_t>(l));
  return *std::max_element(energy_ordered.begin(), energy_ordered.begin() + static_cast<std::ptrdiff_t>(take));
}

std::vector<int> ds_grid(int time_samples, int ds_stride, int margin) {
  return sample_down_depth(time_samples, ds_stride, margin);
}

double score_alarm(const StrategySpec& spec, const Model& model, FeatureKind featurizer, const BScan& normalized,
                   const Alarm& alarm, const MsekParams& msek_params) {
  if (model.feature_kind != featurizer) throw KindMismatch("model was trained on a different feature kind");
  spec.test.validate();
  std::vector<int> times;
  if (spec.test.ordering == Ordering::En) {
    times = sample_times(Sampler::top_energy(spec.test.selector.value), normalized, alarm, msek_params);
  } else {
    times = ds_grid(normalized.time_samples(), spec.test.ds_stride, msek_params.margin);
  }
  if (times.empty()) throw EmptyInput("no valid evaluation location for alarm " + std::to_string(alarm.id));

  std::vector<double> stats;
  stats.reserve(times.size());
  std::vector<double> row(feature_dim(featurizer));
  for (int t : times) {
    const Patch patch = extract_patch(normalized, {alarm.downtrack_index, t, 0.0}, alarm.id);
    extract_features_into(featurizer, patch, row);
    stats.push_back(predict_row(model, row));
  }
  return spec.test.ordering == Ordering::En ? combine_en(spec.test.selector.value, stats)
                                            : combine_ds(spec.test.selector, stats);
}

}  // namespace patchselect
