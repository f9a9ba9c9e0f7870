#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "patchselect/features.hpp"

namespace patchselect {

/// Dense row-major feature rows of a single kind.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(FeatureKind kind, std::size_t rows = 0)
      : kind_(kind), dim_(feature_dim(kind)), data_(rows * feature_dim(kind)) {}

  FeatureKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }

  void append(std::span<const double> values);
  void append(const FeatureVector& fv);
  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }

  std::span<const double> data() const noexcept { return data_; }

 private:
  FeatureKind kind_ = FeatureKind::Raw;
  std::size_t dim_ = feature_dim(FeatureKind::Raw);
  std::vector<double> data_;
};

struct TrainingSet {
  FeatureMatrix features;
  std::vector<int> labels;            // +1 target, -1 non-target
  std::vector<AlarmId> provenance;    // source alarm of each row

  std::size_t size() const noexcept { return labels.size(); }
  /// Throws DegenerateData / ConfigError when the invariants fail.
  void validate() const;
};

// ---------------------------------------------------------------- RBF SVM --

struct SvmParams {
  double gamma = 0.0;  // <= 0 selects 1 / (dim * mean feature variance)
  double c = 1.0;
  double tol = 1e-3;
  std::size_t cache_bytes = std::size_t{256} << 20;
  std::size_t max_iterations = 0;  // 0: max(10^7, 100 n)
};

/// Dual solution of the soft-margin problem
///   min 1/2 a'Qa - e'a,  0 <= a_i <= C,  y'a = 0,  Q_ij = y_i y_j K(x_i, x_j).
struct SvmSolution {
  std::vector<double> alpha;
  double rho = 0.0;  // decision f(x) = sum_i alpha_i y_i K(x_i, x) - rho
  double gamma = 0.0;
  double gap = 0.0;  // final max KKT violation m(a) - M(a)
  std::size_t iterations = 0;
};

struct SvmModel {
  double gamma = 0.0;
  double rho = 0.0;
  std::vector<double> coef;             // alpha_i * y_i of the support vectors
  FeatureMatrix support_vectors;
  std::vector<double> sv_sq_norms;
};

double default_svm_gamma(const FeatureMatrix& x);

/// Sequential minimal optimization with the maximal-violating-pair working
/// set (ties: lower index). Stops when m(a) - M(a) < tol.
SvmSolution solve_svm_dual(const FeatureMatrix& x, std::span<const int> y, const SvmParams& p);

// ---------------------------------------------------------- random forest --

struct ForestParams {
  int n_trees = 100;
  int mtry = 2;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint8_t vote = 0;      // leaf: 1 target, 0 non-target
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int vote(std::span<const double> x) const noexcept;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

// ------------------------------------------------------------ uniform API --

enum class ClassifierKind : std::uint8_t { Svm = 0, RandomForest = 1 };

std::string_view to_string(ClassifierKind kind) noexcept;
ClassifierKind parse_classifier_kind(std::string_view name);  // "svm" | "rf"

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::RandomForest;
  SvmParams svm;
  ForestParams forest;
};

struct Model {
  FeatureKind feature_kind = FeatureKind::Raw;
  std::variant<SvmModel, ForestModel> impl;

  ClassifierKind kind() const noexcept {
    return std::holds_alternative<SvmModel>(impl) ? ClassifierKind::Svm : ClassifierKind::RandomForest;
  }
};

Model train_svm(const TrainingSet& ts, const SvmParams& p);
Model train_rf(const TrainingSet& ts, std::uint64_t seed, const ForestParams& p = {});
Model train(const ClassifierConfig& cfg, const TrainingSet& ts, std::uint64_t seed);

/// Decision statistic, higher = more target-like. SVM: signed margin.
/// Forest: fraction of trees voting target.
double predict(const Model& model, const FeatureVector& x);
double predict_row(const Model& model, std::span<const double> x);

/// Versioned binary blob: "GPRM" | u16 version=1 | u8 classifier | u8 feature kind | payload.
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);

}  // namespace patchselect
