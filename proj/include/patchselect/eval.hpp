#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "patchselect/classifiers.hpp"
#include "patchselect/features.hpp"
#include "patchselect/gpr_core.hpp"
#include "patchselect/keypoints.hpp"
#include "patchselect/strategy.hpp"
#include "patchselect/synth.hpp"

namespace patchselect {

// ------------------------------------------------------------- datasets --

/// Labeled alarms over a set of depth-normalized B-scans. Alarm ids equal
/// their position in `alarms`.
struct Dataset {
  std::vector<BScan> scans;
  std::vector<Alarm> alarms;
  double total_area_m2 = 0.0;

  std::size_t n_targets() const noexcept;
  std::size_t n_nontargets() const noexcept { return alarms.size() - n_targets(); }
};

struct BenchmarkConfig {
  SceneConfig scene;
  PrescreenerParams prescreener;
  int lanes = 8;
  int runs = 3;
  double halo_m = 0.25;

  void validate() const;
};

/// lanes x runs synthetic passes: one object layout per lane, fresh noise per
/// run, prescreened and labeled. Deterministic in (cfg, seed).
Dataset build_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed);

/// Depth-normalizes the scans and renumbers alarm ids to positions.
Dataset make_dataset(std::span<const BScan> raw_scans, std::vector<Alarm> alarms, double total_area_m2);

// ---------------------------------------------------------------- folds --

struct FoldPlan {
  std::vector<std::uint32_t> cluster_of;  // per alarm (input order)
  std::vector<int> fold_of;               // per cluster
  double cluster_distance_m = 1.0;
  int n_folds = 4;

  int fold_of_alarm(std::size_t i) const { return fold_of[cluster_of[i]]; }
  std::size_t n_clusters() const noexcept { return fold_of.size(); }
};

/// Alarms in the same lane within cluster_distance_m of each other (any run,
/// transitively) share a cluster. Clusters go to folds largest first, each to
/// the fold with the fewest alarms so far (lowest fold on ties); equal-size
/// clusters are ordered by a seed-dependent shuffle.
FoldPlan cluster_and_fold(std::span<const Alarm> alarms, double cluster_distance_m, int n_folds = 4,
                          std::uint64_t seed = 0);

// ------------------------------------------------------------- ROC/pAUC --

struct RocPoint {
  double far = 0.0;  // false alarms per m^2
  double pd = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double total_area_m2 = 0.0;
  std::size_t n_targets = 0;
  std::size_t n_nontargets = 0;
};

/// One point per distinct confidence (descending); a tie group moves the
/// threshold as a whole. DegenerateLabels unless both classes are present.
RocCurve roc(std::span<const double> confidences, std::span<const Label> labels, double total_area_m2);

/// Area under the curve over [0, far2] divided by far2. The curve is joined
/// linearly, starts from (0, 0) when its first point has far > 0, and is
/// held at its final pd beyond the last point.
double pauc(const RocCurve& curve, double far2);

// ------------------------------------------------------------------- CV --

struct CvConfig {
  double cluster_distance_m = 1.0;
  int n_folds = 4;
  std::uint64_t fold_seed = 0;
  std::uint64_t classifier_seed = 0;  // fold f trains with derive_seed(classifier_seed, f)
};

/// Reference cross-validation: per fold, build the training set from the
/// other folds' alarms, train, and score each held-out alarm with score_alarm.
std::vector<double> run_cv(const Dataset& data, const StrategySpec& spec, FeatureKind featurizer,
                           const ClassifierConfig& classifier, const FoldPlan& plan, const MsekParams& msek_params,
                           std::uint64_t classifier_seed);

/// Feature rows of every alarm at the positions the strategies use: the DS
/// grid, the MSEK keypoints, and the 5-point regular/random samplers.
class FeatureCache {
 public:
  FeatureCache(const Dataset& data, FeatureKind kind, const MsekParams& msek_params, int ds_stride = 4,
               int fixed_count = 5, std::uint64_t random_seed = 0);

  FeatureKind kind() const noexcept { return kind_; }
  int ds_stride() const noexcept { return ds_stride_; }
  const MsekParams& msek_params() const noexcept { return msek_; }

  /// Rows of alarm i at the given sampler's positions (in sampler order).
  FeatureMatrix rows(std::size_t i, const Sampler& sampler) const;
  FeatureMatrix target_rows(std::size_t i, const TrainPolicy& policy) const;
  const FeatureMatrix& ds_rows(std::size_t i) const { return entries_[i].ds; }
  const FeatureMatrix& msek_rows(std::size_t i) const { return entries_[i].msek; }

 private:
  struct Entry {
    FeatureMatrix ds, msek, regular, random;
  };
  const Dataset* data_;
  FeatureKind kind_;
  MsekParams msek_;
  int ds_stride_;
  int fixed_count_;
  std::uint64_t random_seed_;
  std::vector<Entry> entries_;
};

TrainingSet training_set_from_cache(const FeatureCache& cache, const Dataset& data, const TrainPolicy& policy,
                                    std::span<const std::size_t> alarm_indices);

/// Decision statistics of one alarm under the model that held it out.
struct AlarmStats {
  std::vector<double> ds;    // DS grid, depth order
  std::vector<double> msek;  // MSEK keypoints, strongest first
};

/// Cross-validated statistics for one training policy; any test policy is
/// then a pure function of these (see confidences_from_stats).
std::vector<AlarmStats> cv_stats(const Dataset& data, const FeatureCache& cache, const TrainPolicy& train,
                                 const ClassifierConfig& classifier, const FoldPlan& plan,
                                 std::uint64_t classifier_seed);

std::vector<double> confidences_from_stats(std::span<const AlarmStats> stats, const TestPolicy& test);

// ----------------------------------------------------------- experiments --

struct ExperimentConfig {
  BenchmarkConfig bench;
  MsekParams msek;
  CvConfig cv;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> strategies = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::vector<FeatureKind> features = {FeatureKind::Raw, FeatureKind::Hog, FeatureKind::Ehd};
  std::vector<ClassifierKind> classifiers = {ClassifierKind::Svm, ClassifierKind::RandomForest};
  SvmParams svm;
  ForestParams forest;
  double far2 = 0.005;
  std::vector<double> far2_list = {0.0025, 0.005, 0.0075, 0.01, 0.015, 0.02};
  int max_l = 12;   // L grid 1..max_l of the sensitivity studies
  int max_k = 4;    // target K grid 1..max_k

  void validate() const;
};

/// One pAUC measurement. Fields that do not apply to an experiment are left
/// at their defaults (strategy 0, l 0, target_k 0).
struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  int strategy = 0;
  std::string strategy_text;
  FeatureKind feature = FeatureKind::Hog;
  ClassifierKind classifier = ClassifierKind::RandomForest;
  std::string panel;       // fig6: topenergy|regular5, fig7: sampler name
  std::string ordering;    // En | DS
  int l = 0;
  int target_k = 0;
  double far2 = 0.0;
  double pauc = 0.0;
};

/// Experiments: "fig4" (strategies x feature/classifier at far2), "fig5"
/// (strategies x far2_list, every feature/classifier), "fig6", "fig7",
/// "fig8" (HOG + RF sensitivity grids). Rows come back in a fixed order
/// independent of the thread count.
std::vector<ResultRow> run_experiments(const ExperimentConfig& cfg, std::span<const std::string> experiments);

bool is_known_experiment(std::string_view name);

/// Mean pAUC over seeds keyed by every field but seed.
struct SummaryKey {
  std::string experiment;
  int strategy;
  FeatureKind feature;
  ClassifierKind classifier;
  std::string panel;
  std::string ordering;
  int l;
  int target_k;
  double far2;
  auto operator<=>(const SummaryKey&) const = default;
};
std::map<SummaryKey, double> mean_over_seeds(std::span<const ResultRow> rows);

}  // namespace patchselect
