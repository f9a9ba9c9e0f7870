#include "patchselect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "patchselect/errors.hpp"
#include "patchselect/rng.hpp"

namespace patchselect {

// ------------------------------------------------------------- datasets --

std::size_t Dataset::n_targets() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(alarms.begin(), alarms.end(), [](const Alarm& a) { return a.label == Label::Target; }));
}

void BenchmarkConfig::validate() const {
  scene.validate();
  prescreener.validate();
  if (lanes < 1 || runs < 1) throw ConfigError("benchmark needs at least one lane and one run");
  if (!(halo_m > 0.0)) throw ConfigError("halo must be positive");
}

Dataset make_dataset(std::span<const BScan> raw_scans, std::vector<Alarm> alarms, double total_area_m2) {
  if (!(total_area_m2 > 0.0)) throw ConfigError("total area must be positive");
  Dataset d;
  d.scans.reserve(raw_scans.size());
  for (const BScan& s : raw_scans) d.scans.push_back(depth_normalize(s));
  for (std::size_t i = 0; i < alarms.size(); ++i) {
    alarms[i].id = static_cast<AlarmId>(i);
    const BScan& s = find_scan(d.scans, alarms[i].lane_id, alarms[i].run_id);
    if (alarms[i].downtrack_index < 0 || alarms[i].downtrack_index >= s.downtrack_samples()) {
      throw RangeError("alarm outside its B-scan");
    }
  }
  d.alarms = std::move(alarms);
  d.total_area_m2 = total_area_m2;
  return d;
}

Dataset build_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<BScan> scans;
  std::vector<Alarm> alarms;
  for (int lane = 0; lane < cfg.lanes; ++lane) {
    const LaneLayout layout = generate_layout(cfg.scene, static_cast<LaneId>(lane), seed);
    const GroundTruth truth = ground_truth(cfg.scene, layout);
    for (int run = 0; run < cfg.runs; ++run) {
      BScan scan = render_run(cfg.scene, layout, static_cast<RunId>(run), seed);
      const auto found = prescreen(scan, cfg.prescreener);
      const auto labeled = label_alarms(found, truth, cfg.halo_m);
      alarms.insert(alarms.end(), labeled.begin(), labeled.end());
      scans.push_back(std::move(scan));
    }
  }
  const double area = cfg.scene.lane_area_m2() * cfg.lanes * cfg.runs;
  return make_dataset(scans, std::move(alarms), area);
}

// ---------------------------------------------------------------- folds --

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

FoldPlan cluster_and_fold(std::span<const Alarm> alarms, double cluster_distance_m, int n_folds, std::uint64_t seed) {
  if (!(cluster_distance_m > 0.0)) throw ConfigError("cluster_distance_m must be positive");
  if (n_folds < 1) throw ConfigError("n_folds must be >= 1");
  const std::size_t n = alarms.size();

  // in one dimension, linking neighbours in sorted order gives the same
  // components as linking every close pair
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (alarms[a].lane_id != alarms[b].lane_id) return alarms[a].lane_id < alarms[b].lane_id;
    if (alarms[a].downtrack_position_m != alarms[b].downtrack_position_m) {
      return alarms[a].downtrack_position_m < alarms[b].downtrack_position_m;
    }
    return a < b;
  });
  UnionFind uf(n);
  for (std::size_t k = 1; k < n; ++k) {
    const Alarm& p = alarms[order[k - 1]];
    const Alarm& q = alarms[order[k]];
    if (p.lane_id == q.lane_id && q.downtrack_position_m - p.downtrack_position_m <= cluster_distance_m) {
      uf.unite(order[k - 1], order[k]);
    }
  }

  FoldPlan plan;
  plan.cluster_distance_m = cluster_distance_m;
  plan.n_folds = n_folds;
  plan.cluster_of.assign(n, 0);
  std::vector<std::size_t> root_cluster(n, n);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (root_cluster[r] == n) {
      root_cluster[r] = sizes.size();
      sizes.push_back(0);
    }
    plan.cluster_of[i] = static_cast<std::uint32_t>(root_cluster[r]);
    ++sizes[root_cluster[r]];
  }

  std::vector<std::size_t> clusters(sizes.size());
  std::iota(clusters.begin(), clusters.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0xf01d));
  rng.shuffle(std::span<std::size_t>(clusters));
  std::stable_sort(clusters.begin(), clusters.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });

  plan.fold_of.assign(sizes.size(), 0);
  std::vector<std::size_t> load(static_cast<std::size_t>(n_folds), 0);
  for (std::size_t c : clusters) {
    const auto f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    plan.fold_of[c] = static_cast<int>(f);
    load[f] += sizes[c];
  }
  return plan;
}

// ------------------------------------------------------------- ROC/pAUC --

RocCurve roc(std::span<const double> confidences, std::span<const Label> labels, double total_area_m2) {
  if (confidences.size() != labels.size()) throw ConfigError("confidence/label count mismatch");
  if (!(total_area_m2 > 0.0)) throw ConfigError("total area must be positive");
  RocCurve curve;
  curve.total_area_m2 = total_area_m2;
  for (Label l : labels) ++(l == Label::Target ? curve.n_targets : curve.n_nontargets);
  if (curve.n_targets == 0 || curve.n_nontargets == 0) {
    throw DegenerateLabels("ROC needs both target and non-target alarms");
  }
  for (double c : confidences) {
    if (std::isnan(c)) throw RangeError("NaN confidence");
  }

  std::vector<std::size_t> order(confidences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double c = confidences[order[k]];
    for (; k < order.size() && confidences[order[k]] == c; ++k) ++(labels[order[k]] == Label::Target ? tp : fp);
    curve.points.push_back({static_cast<double>(fp) / total_area_m2,
                            static_cast<double>(tp) / static_cast<double>(curve.n_targets)});
  }
  return curve;
}

double pauc(const RocCurve& curve, double far2) {
  if (!(far2 > 0.0)) throw ConfigError("far2 must be positive");
  double area = 0.0;
  RocPoint prev{0.0, 0.0};
  for (const RocPoint& p : curve.points) {
    if (prev.far >= far2) break;
    if (p.far > prev.far) {
      const double x1 = std::min(p.far, far2);
      const double y1 = prev.pd + (p.pd - prev.pd) * (x1 - prev.far) / (p.far - prev.far);
      area += 0.5 * (prev.pd + y1) * (x1 - prev.far);
      if (x1 < p.far) {
        prev = {x1, y1};
        break;
      }
    }
    prev = p;
  }
  if (prev.far < far2) area += prev.pd * (far2 - prev.far);
  return area / far2;
}

// ------------------------------------------------------------------- CV --

namespace {

std::vector<std::vector<std::size_t>> fold_members(const FoldPlan& plan, std::size_t n) {
  if (plan.cluster_of.size() != n) throw ConfigError("fold plan does not cover the dataset");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(plan.n_folds));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(plan.fold_of_alarm(i))].push_back(i);
  return members;
}

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& members, std::size_t fold,
                                    std::size_t n, const FoldPlan& plan) {
  std::vector<std::size_t> out;
  out.reserve(n - members[fold].size());
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<std::size_t>(plan.fold_of_alarm(i)) != fold) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<double> run_cv(const Dataset& data, const StrategySpec& spec, FeatureKind featurizer,
                           const ClassifierConfig& classifier, const FoldPlan& plan, const MsekParams& msek_params,
                           std::uint64_t classifier_seed) {
  const std::size_t n = data.alarms.size();
  const auto members = fold_members(plan, n);
  std::vector<double> conf(n, 0.0);
  for (std::size_t f = 0; f < members.size(); ++f) {
    if (members[f].empty()) continue;
    std::vector<Alarm> train_alarms;
    for (std::size_t i : complement(members, f, n, plan)) train_alarms.push_back(data.alarms[i]);
    const TrainingSet ts = build_training_set(spec, train_alarms, data.scans, featurizer, msek_params);
    const Model model = train(classifier, ts, derive_seed(classifier_seed, f));
    for (std::size_t i : members[f]) {
      const Alarm& a = data.alarms[i];
      conf[i] = score_alarm(spec, model, featurizer, find_scan(data.scans, a.lane_id, a.run_id), a, msek_params);
    }
  }
  return conf;
}

FeatureCache::FeatureCache(const Dataset& data, FeatureKind kind, const MsekParams& msek_params, int ds_stride,
                           int fixed_count, std::uint64_t random_seed)
    : data_(&data),
      kind_(kind),
      msek_(msek_params),
      ds_stride_(ds_stride),
      fixed_count_(fixed_count),
      random_seed_(random_seed),
      entries_(data.alarms.size()) {
  msek_.validate();
  const auto n = static_cast<std::ptrdiff_t>(data.alarms.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      const auto i = static_cast<std::size_t>(k);
      const Alarm& a = data.alarms[i];
      const BScan& scan = find_scan(data.scans, a.lane_id, a.run_id);
      const auto fill = [&](const std::vector<int>& times) {
        FeatureMatrix m(kind, times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
          extract_features_into(kind, extract_patch(scan, {a.downtrack_index, times[j], 0.0}, a.id), m.row(j));
        }
        return m;
      };
      Entry& e = entries_[i];
      e.ds = fill(ds_grid(scan.time_samples(), ds_stride, msek_.margin));
      e.msek = fill(sample_times(Sampler::top_energy(msek_.max_keypoints), scan, a, msek_));
      e.regular = fill(sample_times(Sampler::regular(fixed_count), scan, a, msek_));
      e.random = fill(sample_times(Sampler::random(fixed_count, random_seed), scan, a, msek_));
    } catch (...) {
#pragma omp critical(patchselect_cache_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

namespace {

FeatureMatrix head(const FeatureMatrix& m, std::size_t rows) {
  FeatureMatrix out(m.kind());
  out.reserve(rows);
  for (std::size_t j = 0; j < std::min(rows, m.rows()); ++j) out.append(m.row(j));
  return out;
}

}  // namespace

FeatureMatrix FeatureCache::rows(std::size_t i, const Sampler& sampler) const {
  const Entry& e = entries_[i];
  switch (sampler.kind) {
    case SamplerKind::TopEnergy:
      if (sampler.count <= msek_.max_keypoints) return head(e.msek, static_cast<std::size_t>(sampler.count));
      break;
    case SamplerKind::Regular:
      if (sampler.count == fixed_count_) return e.regular;
      break;
    case SamplerKind::Random:
      if (sampler.count == fixed_count_ && sampler.seed == random_seed_) return e.random;
      break;
    case SamplerKind::DownDepth:
      if (sampler.count == ds_stride_) return e.ds;
      break;
    case SamplerKind::EveryPoint: break;
  }
  const Alarm& a = data_->alarms[i];
  const BScan& scan = find_scan(data_->scans, a.lane_id, a.run_id);
  const auto times = sample_times(sampler, scan, a, msek_);
  FeatureMatrix m(kind_, times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    extract_features_into(kind_, extract_patch(scan, {a.downtrack_index, times[j], 0.0}, a.id), m.row(j));
  }
  return m;
}

FeatureMatrix FeatureCache::target_rows(std::size_t i, const TrainPolicy& policy) const {
  if (policy.target_sampling == TargetSampling::Regular) return rows(i, Sampler::regular(policy.target_keypoints));
  return rows(i, Sampler::top_energy(policy.target_keypoints));
}

TrainingSet training_set_from_cache(const FeatureCache& cache, const Dataset& data, const TrainPolicy& policy,
                                    std::span<const std::size_t> alarm_indices) {
  policy.validate();
  TrainingSet ts{FeatureMatrix(cache.kind()), {}, {}};
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i : alarm_indices) {
    const Alarm& a = data.alarms[i];
    const bool target = a.label == Label::Target;
    const FeatureMatrix m = target ? cache.target_rows(i, policy) : cache.rows(i, policy.nontarget);
    for (std::size_t j = 0; j < m.rows(); ++j) {
      ts.features.append(m.row(j));
      ts.labels.push_back(target ? 1 : -1);
      ts.provenance.push_back(a.id);
    }
    (target ? n_pos : n_neg) += m.rows();
  }
  if (n_pos == 0) throw EmptyClass("training set has no target patches");
  if (n_neg == 0) throw EmptyClass("training set has no non-target patches");
  return ts;
}

std::vector<AlarmStats> cv_stats(const Dataset& data, const FeatureCache& cache, const TrainPolicy& train_policy,
                                 const ClassifierConfig& classifier, const FoldPlan& plan,
                                 std::uint64_t classifier_seed) {
  const std::size_t n = data.alarms.size();
  const auto members = fold_members(plan, n);
  std::vector<AlarmStats> stats(n);
  for (std::size_t f = 0; f < members.size(); ++f) {
    if (members[f].empty()) continue;
    const auto train_idx = complement(members, f, n, plan);
    const TrainingSet ts = training_set_from_cache(cache, data, train_policy, train_idx);
    const Model model = train(classifier, ts, derive_seed(classifier_seed, f));
    for (std::size_t i : members[f]) {
      const FeatureMatrix& ds = cache.ds_rows(i);
      const FeatureMatrix& ms = cache.msek_rows(i);
      stats[i].ds.resize(ds.rows());
      stats[i].msek.resize(ms.rows());
      for (std::size_t j = 0; j < ds.rows(); ++j) stats[i].ds[j] = predict_row(model, ds.row(j));
      for (std::size_t j = 0; j < ms.rows(); ++j) stats[i].msek[j] = predict_row(model, ms.row(j));
    }
  }
  return stats;
}

std::vector<double> confidences_from_stats(std::span<const AlarmStats> stats, const TestPolicy& test) {
  test.validate();
  std::vector<double> conf(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (test.ordering == Ordering::En) {
      conf[i] = combine_en(test.selector.value, stats[i].msek);
    } else {
      conf[i] = combine_ds(test.selector, stats[i].ds);
    }
  }
  return conf;
}

// ----------------------------------------------------------- experiments --

void ExperimentConfig::validate() const {
  bench.validate();
  msek.validate();
  if (seeds.empty()) throw ConfigError("no seeds");
  if (strategies.empty() || features.empty() || classifiers.empty()) {
    throw ConfigError("strategies, features and classifiers must be non-empty");
  }
  for (int s : strategies) registry_entry(s);
  if (!(far2 > 0.0)) throw ConfigError("far2 must be positive");
  if (far2_list.empty()) throw ConfigError("far2_list must be non-empty");
  for (std::size_t k = 0; k < far2_list.size(); ++k) {
    if (!(far2_list[k] > 0.0) || (k > 0 && far2_list[k] <= far2_list[k - 1])) {
      throw ConfigError("far2_list must be positive and increasing");
    }
  }
  if (max_l < 1 || max_l > msek.max_keypoints) throw ConfigError("max_l must lie in 1..msek max_keypoints");
  if (max_k < 1 || max_k > msek.max_keypoints) throw ConfigError("max_k must lie in 1..msek max_keypoints");
  if (cv.n_folds < 2) throw ConfigError("need at least two folds");
}

bool is_known_experiment(std::string_view name) {
  return name == "fig4" || name == "fig5" || name == "fig6" || name == "fig7" || name == "fig8";
}

namespace {

struct Job {
  FeatureKind feature;
  ClassifierKind classifier;
  TrainPolicy train;
};

std::string job_key(FeatureKind f, ClassifierKind c, const TrainPolicy& t) {
  StrategySpec probe{0, "k", t, {}};
  return std::string(to_string(f)) + '/' + std::string(to_string(c)) + '/' + to_string(probe);
}

struct Panel {
  std::string name;
  Sampler (*nontarget)(int k);
};

const std::vector<Panel>& sampler_panels() {
  static const std::vector<Panel> panels = {
      {"topenergy", [](int k) { return Sampler::top_energy(k); }},
      {"regular5", [](int) { return Sampler::regular(5); }},
      {"downdepth4", [](int) { return Sampler::down_depth(4); }},
  };
  return panels;
}

}  // namespace

std::vector<ResultRow> run_experiments(const ExperimentConfig& cfg, std::span<const std::string> experiments) {
  cfg.validate();
  for (const auto& e : experiments) {
    if (!is_known_experiment(e)) throw ConfigError("unknown experiment '" + e + "'");
  }
  const auto wants = [&](std::string_view e) { return std::find(experiments.begin(), experiments.end(), e) != experiments.end(); };
  const bool strategy_grid = wants("fig4") || wants("fig5");
  const bool sensitivity = wants("fig6") || wants("fig7") || wants("fig8");

  // the set of distinct trainings every requested table needs
  std::vector<Job> jobs;
  std::map<std::string, std::size_t> job_index;
  const auto need = [&](FeatureKind f, ClassifierKind c, const TrainPolicy& t) {
    const auto key = job_key(f, c, t);
    if (job_index.emplace(key, jobs.size()).second) jobs.push_back({f, c, t});
  };
  if (strategy_grid) {
    for (FeatureKind f : cfg.features) {
      for (ClassifierKind c : cfg.classifiers) {
        for (int s : cfg.strategies) need(f, c, registry_entry(s).train);
      }
    }
  }
  if (sensitivity) {
    for (const Panel& p : sampler_panels()) {
      for (int k = 1; k <= cfg.max_k; ++k) {
        need(FeatureKind::Hog, ClassifierKind::RandomForest, {k, TargetSampling::Energy, p.nontarget(k)});
      }
    }
  }
  std::vector<FeatureKind> kinds;
  for (const Job& j : jobs) {
    if (std::find(kinds.begin(), kinds.end(), j.feature) == kinds.end()) kinds.push_back(j.feature);
  }

  std::vector<ResultRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset data = build_benchmark(cfg.bench, seed);
    const FoldPlan plan =
        cluster_and_fold(data.alarms, cfg.cv.cluster_distance_m, cfg.cv.n_folds, derive_seed(seed, cfg.cv.fold_seed));
    std::vector<Label> labels;
    for (const Alarm& a : data.alarms) labels.push_back(a.label);

    std::map<FeatureKind, FeatureCache> caches;
    for (FeatureKind k : kinds) caches.emplace(k, FeatureCache(data, k, cfg.msek));

    std::vector<std::vector<AlarmStats>> results(jobs.size());
    std::exception_ptr error;
    const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n_jobs; ++k) {
      try {
        const Job& job = jobs[static_cast<std::size_t>(k)];
        ClassifierConfig cc;
        cc.kind = job.classifier;
        cc.svm = cfg.svm;
        cc.forest = cfg.forest;
        results[static_cast<std::size_t>(k)] = cv_stats(data, caches.at(job.feature), job.train, cc, plan,
                                                        derive_seed(seed, cfg.cv.classifier_seed));
      } catch (...) {
#pragma omp critical(patchselect_job_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    const auto measure = [&](const std::vector<AlarmStats>& stats, const TestPolicy& test,
                             std::span<const double> far2s) {
      const auto conf = confidences_from_stats(stats, test);
      const RocCurve curve = roc(conf, labels, data.total_area_m2);
      std::vector<double> out;
      for (double f2 : far2s) out.push_back(pauc(curve, f2));
      return out;
    };
    const auto stats_of = [&](FeatureKind f, ClassifierKind c, const TrainPolicy& t) -> const std::vector<AlarmStats>& {
      return results[job_index.at(job_key(f, c, t))];
    };

    for (const std::string& experiment : experiments) {
      if (experiment == "fig4" || experiment == "fig5") {
        const std::vector<double> single{cfg.far2};
        const std::span<const double> far2s = experiment == "fig4" ? std::span<const double>(single)
                                                                   : std::span<const double>(cfg.far2_list);
        for (int s : cfg.strategies) {
          const StrategySpec& spec = registry_entry(s);
          for (FeatureKind f : cfg.features) {
            for (ClassifierKind c : cfg.classifiers) {
              const auto values = measure(stats_of(f, c, spec.train), spec.test, far2s);
              for (std::size_t q = 0; q < far2s.size(); ++q) {
                ResultRow r;
                r.experiment = experiment;
                r.seed = seed;
                r.strategy = s;
                r.strategy_text = to_string(spec);
                r.feature = f;
                r.classifier = c;
                r.ordering = std::string(to_string(spec.test.ordering));
                r.l = spec.test.selector.kind == SelectorKind::All ? 0 : spec.test.selector.value;
                r.target_k = spec.train.target_keypoints;
                r.far2 = far2s[q];
                r.pauc = values[q];
                rows.push_back(std::move(r));
              }
            }
          }
        }
        continue;
      }
      // HOG + RF sensitivity grids
      std::vector<std::pair<const Panel*, Ordering>> cells;
      const auto& panels = sampler_panels();
      if (experiment == "fig6") {
        for (std::size_t p = 0; p < 2; ++p) {
          cells.push_back({&panels[p], Ordering::En});
          cells.push_back({&panels[p], Ordering::DS});
        }
      } else if (experiment == "fig7") {
        for (const Panel& p : panels) cells.push_back({&p, Ordering::DS});
      } else {
        cells.push_back({&panels[2], Ordering::DS});
      }
      const std::vector<double> single{cfg.far2};
      for (const auto& [panel, ordering] : cells) {
        for (int l = 1; l <= cfg.max_l; ++l) {
          for (int k = 1; k <= cfg.max_k; ++k) {
            const TrainPolicy tp{k, TargetSampling::Energy, panel->nontarget(k)};
            const TestPolicy test{ordering, Selector::top(l), 4};
            ResultRow r;
            r.experiment = experiment;
            r.seed = seed;
            r.feature = FeatureKind::Hog;
            r.classifier = ClassifierKind::RandomForest;
            r.panel = panel->name;
            r.ordering = std::string(to_string(ordering));
            r.l = l;
            r.target_k = k;
            r.far2 = cfg.far2;
            r.pauc = measure(stats_of(FeatureKind::Hog, ClassifierKind::RandomForest, tp), test, single)[0];
            rows.push_back(std::move(r));
          }
        }
      }
    }
  }
  return rows;
}

std::map<SummaryKey, double> mean_over_seeds(std::span<const ResultRow> rows) {
  std::map<SummaryKey, std::pair<double, std::size_t>> acc;
  for (const ResultRow& r : rows) {
    auto& [sum, count] =
        acc[{r.experiment, r.strategy, r.feature, r.classifier, r.panel, r.ordering, r.l, r.target_k, r.far2}];
    sum += r.pauc;
    ++count;
  }
  std::map<SummaryKey, double> out;
  for (const auto& [k, v] : acc) out.emplace(k, v.first / static_cast<double>(v.second));
  return out;
}

}  // namespace patchselect
