#include "patchselect/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <list>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>

#include "binary.hpp"
#include "patchselect/errors.hpp"
#include "patchselect/parallel.hpp"
#include "patchselect/rng.hpp"

namespace patchselect {

void FeatureMatrix::append(std::span<const double> values) {
  if (values.size() != dim_) throw KindMismatch("row length does not match the feature kind");
  data_.insert(data_.end(), values.begin(), values.end());
}

void FeatureMatrix::append(const FeatureVector& fv) {
  if (fv.kind != kind_) throw KindMismatch("feature kind does not match the matrix");
  append(std::span<const double>(fv.values));
}

void TrainingSet::validate() const {
  if (features.rows() != labels.size() || labels.size() != provenance.size()) {
    throw ConfigError("training set columns have different lengths");
  }
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw ConfigError("labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw DegenerateData("training set needs both classes");
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw ConfigError("training features must be finite");
  }
}

std::string_view to_string(ClassifierKind kind) noexcept {
  return kind == ClassifierKind::Svm ? "svm" : "rf";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "svm") return ClassifierKind::Svm;
  if (name == "rf") return ClassifierKind::RandomForest;
  throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

// ------------------------------------------------------------------ SVM ----

namespace {

// LRU cache of Q rows (Q_it = y_i y_t K(x_i, x_t)).
class QRowCache {
 public:
  QRowCache(const FeatureMatrix& x, std::span<const int> y, double gamma, std::size_t budget_bytes)
      : x_(x), y_(y), gamma_(gamma), norms_(parallel::squared_norms(x)) {
    const std::size_t row_bytes = std::max<std::size_t>(1, x.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  std::span<const double> row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values;
    }
    std::vector<double> values;
    if (lru_.size() >= capacity_) {
      values = std::move(lru_.back().values);
      index_.erase(lru_.back().id);
      lru_.pop_back();
    }
    values.resize(x_.rows());
    parallel::rbf_kernel_row(x_, norms_, i, gamma_, values);
    const double yi = y_[i];
    for (std::size_t t = 0; t < values.size(); ++t) values[t] *= yi * y_[t];
    lru_.push_front({i, std::move(values)});
    index_[i] = lru_.begin();
    return lru_.front().values;
  }

 private:
  struct Entry {
    std::size_t id;
    std::vector<double> values;
  };

  const FeatureMatrix& x_;
  std::span<const int> y_;
  double gamma_;
  std::vector<double> norms_;
  std::size_t capacity_ = 2;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

constexpr double kTau = 1e-12;

}  // namespace

double default_svm_gamma(const FeatureMatrix& x) {
  const std::size_t n = x.rows(), d = x.dim();
  if (n == 0 || d == 0) return 1.0;
  double total_var = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x.row(i)[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x.row(i)[k] - mean) * (x.row(i)[k] - mean);
    total_var += ss / static_cast<double>(n);
  }
  const double mean_var = total_var / static_cast<double>(d);
  return mean_var > 0.0 ? 1.0 / (static_cast<double>(d) * mean_var) : 1.0;
}

SvmSolution solve_svm_dual(const FeatureMatrix& x, std::span<const int> y, const SvmParams& p) {
  const std::size_t n = x.rows();
  if (y.size() != n) throw ConfigError("label count does not match rows");
  if (!(p.c > 0.0) || !(p.tol > 0.0)) throw ConfigError("SVM needs C > 0 and tol > 0");

  SvmSolution sol;
  sol.gamma = p.gamma > 0.0 ? p.gamma : default_svm_gamma(x);
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  std::vector<double>& alpha = sol.alpha;
  const double c = p.c;
  QRowCache cache(x, y, sol.gamma, p.cache_bytes);

  const auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0); };
  const auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < c); };

  const std::size_t max_iter = p.max_iterations > 0 ? p.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.gap = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (i == n || j == n || sol.gap < p.tol) break;

    const auto qi = cache.row(i);
    const double qij = qi[j];
    const double old_ai = alpha[i], old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * qij;  // Q_ii = Q_jj = 1 for the RBF kernel
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    // row i is most recently used, so fetching row j never evicts it
    const auto qj = cache.row(j);
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
  }
  sol.iterations = iter;

  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  if (n_free > 0) {
    sol.rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    sol.rho = (ub + lb) / 2.0;
  } else {
    sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  return sol;
}

Model train_svm(const TrainingSet& ts, const SvmParams& p) {
  ts.validate();
  const SvmSolution sol = solve_svm_dual(ts.features, ts.labels, p);
  SvmModel m;
  m.gamma = sol.gamma;
  m.rho = sol.rho;
  m.support_vectors = FeatureMatrix(ts.features.kind());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      m.coef.push_back(sol.alpha[i] * ts.labels[i]);
      m.support_vectors.append(ts.features.row(i));
    }
  }
  m.sv_sq_norms = parallel::squared_norms_serial(m.support_vectors);
  return Model{ts.features.kind(), std::move(m)};
}

// -------------------------------------------------------- random forest ----

int DecisionTree::vote(std::span<const double> x) const noexcept {
  std::int32_t k = 0;
  while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(k)];
    k = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(k)].vote;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& ts, int mtry, Rng& rng) : ts_(ts), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    DecisionTree tree;
    struct Pending {
      std::int32_t node;
      std::vector<std::size_t> samples;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(samples)});
    std::vector<int> features(ts_.features.dim());

    while (!stack.empty()) {
      Pending cur = std::move(stack.back());
      stack.pop_back();
      std::size_t pos = 0;
      for (std::size_t s : cur.samples) pos += ts_.labels[s] == 1;
      const std::size_t n = cur.samples.size();
      TreeNode& leaf = tree.nodes[static_cast<std::size_t>(cur.node)];
      leaf.vote = 2 * pos > n ? 1 : 0;
      if (pos == 0 || pos == n || n < 2) continue;

      const SplitChoice split = best_split(cur.samples, features);
      if (split.feature < 0) continue;  // every feature is constant here

      std::vector<std::size_t> left, right;
      for (std::size_t s : cur.samples) {
        (ts_.features.row(s)[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(s);
      }
      const auto l = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[static_cast<std::size_t>(cur.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = l;
      node.right = l + 1;
      stack.push_back({l + 1, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
    return tree;
  }

 private:
  // Draws features in random order and evaluates the first `mtry` that are
  // not constant over the node's samples.
  SplitChoice best_split(const std::vector<std::size_t>& samples, std::vector<int>& features) {
    std::iota(features.begin(), features.end(), 0);
    SplitChoice best;
    int evaluated = 0;
    const std::size_t d = features.size();
    for (std::size_t k = 0; k < d && evaluated < mtry_; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng_.below(d - k));
      std::swap(features[k], features[pick]);
      const int f = features[k];
      if (evaluate_feature(samples, f, best)) ++evaluated;
    }
    return best;
  }

  // Returns false if the feature is constant on the node.
  bool evaluate_feature(const std::vector<std::size_t>& samples, int f, SplitChoice& best) {
    values_.clear();
    for (std::size_t s : samples) values_.emplace_back(ts_.features.row(s)[static_cast<std::size_t>(f)], ts_.labels[s] == 1);
    std::sort(values_.begin(), values_.end());
    if (values_.front().first == values_.back().first) return false;

    const std::size_t n = values_.size();
    std::size_t total_pos = 0;
    for (const auto& v : values_) total_pos += v.second;
    std::size_t left_pos = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left_pos += values_[k].second;
      if (values_[k].first == values_[k + 1].first) continue;
      const double nl = static_cast<double>(k + 1), nr = static_cast<double>(n - k - 1);
      const double pl = static_cast<double>(left_pos), pr = static_cast<double>(total_pos - left_pos);
      // n_l * gini_l + n_r * gini_r, up to a constant factor of 2
      const double impurity = pl * (nl - pl) / nl + pr * (nr - pr) / nr;
      if (impurity < best.impurity) {
        const double a = values_[k].first, b = values_[k + 1].first;
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        best = {f, mid, impurity};
      }
    }
    return true;
  }

  const TrainingSet& ts_;
  int mtry_;
  Rng& rng_;
  std::vector<std::pair<double, bool>> values_;
};

}  // namespace

Model train_rf(const TrainingSet& ts, std::uint64_t seed, const ForestParams& p) {
  ts.validate();
  if (p.n_trees < 1 || p.mtry < 1) throw ConfigError("forest needs n_trees >= 1 and mtry >= 1");
  ForestModel forest;
  forest.trees.reserve(static_cast<std::size_t>(p.n_trees));
  const std::size_t n = ts.size();
  for (int t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> bootstrap(n);
    for (auto& s : bootstrap) s = static_cast<std::size_t>(rng.below(n));
    TreeBuilder builder(ts, p.mtry, rng);
    forest.trees.push_back(builder.build(std::move(bootstrap)));
  }
  return Model{ts.features.kind(), std::move(forest)};
}

Model train(const ClassifierConfig& cfg, const TrainingSet& ts, std::uint64_t seed) {
  return cfg.kind == ClassifierKind::Svm ? train_svm(ts, cfg.svm) : train_rf(ts, seed, cfg.forest);
}

// ---------------------------------------------------------- prediction ----

double predict_row(const Model& model, std::span<const double> x) {
  if (const auto* svm = std::get_if<SvmModel>(&model.impl)) {
    double nx = 0.0;
    for (double v : x) nx += v * v;
    double f = 0.0;
    for (std::size_t s = 0; s < svm->coef.size(); ++s) {
      const auto sv = svm->support_vectors.row(s);
      double d = 0.0;
      for (std::size_t k = 0; k < sv.size(); ++k) d += sv[k] * x[k];
      f += svm->coef[s] * std::exp(-svm->gamma * std::max(0.0, svm->sv_sq_norms[s] + nx - 2.0 * d));
    }
    return f - svm->rho;
  }
  const auto& forest = std::get<ForestModel>(model.impl);
  int votes = 0;
  for (const auto& tree : forest.trees) votes += tree.vote(x);
  return static_cast<double>(votes) / static_cast<double>(forest.trees.size());
}

double predict(const Model& model, const FeatureVector& x) {
  if (x.kind != model.feature_kind || x.values.size() != feature_dim(model.feature_kind)) {
    throw KindMismatch("feature kind " + std::string(to_string(x.kind)) + " does not match model kind " +
                       std::string(to_string(model.feature_kind)));
  }
  return predict_row(model, x.values);
}

// ------------------------------------------------------- serialization ----

namespace {
constexpr char kModelMagic[4] = {'G', 'P', 'R', 'M'};
constexpr std::uint16_t kModelVersion = 1;
}  // namespace

void save_model(std::ostream& out, const Model& model) {
  using detail::put_f64;
  using detail::put_le;
  out.write(kModelMagic, 4);
  put_le<std::uint16_t>(out, kModelVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(model.kind()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(model.feature_kind));
  if (const auto* svm = std::get_if<SvmModel>(&model.impl)) {
    put_f64(out, svm->gamma);
    put_f64(out, svm->rho);
    put_le<std::uint64_t>(out, svm->coef.size());
    for (double c : svm->coef) put_f64(out, c);
    for (double v : svm->support_vectors.data()) put_f64(out, v);
  } else {
    const auto& forest = std::get<ForestModel>(model.impl);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(forest.trees.size()));
    for (const auto& tree : forest.trees) {
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
      for (const auto& node : tree.nodes) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(node.feature));
        put_f64(out, node.threshold);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(node.left));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(node.right));
        put_le<std::uint8_t>(out, node.vote);
      }
    }
  }
  if (!out) throw IoError("failed writing model");
}

Model load_model(std::istream& in) {
  using detail::get_f64;
  using detail::get_le;
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kModelMagic, 4)) throw FormatError("bad model magic");
  if (get_le<std::uint16_t>(in, "version") != kModelVersion) throw FormatError("unsupported model version");
  const auto kind = get_le<std::uint8_t>(in, "classifier");
  const auto fkind = get_le<std::uint8_t>(in, "feature kind");
  if (kind > 1 || fkind > 2) throw FormatError("bad model kind tags");
  Model model;
  model.feature_kind = static_cast<FeatureKind>(fkind);
  const std::size_t dim = feature_dim(model.feature_kind);
  if (kind == 0) {
    SvmModel svm;
    svm.gamma = get_f64(in, "gamma");
    svm.rho = get_f64(in, "rho");
    const auto n = get_le<std::uint64_t>(in, "sv count");
    if (n > (std::uint64_t{1} << 32)) throw FormatError("implausible support-vector count");
    svm.coef.resize(n);
    for (auto& c : svm.coef) c = get_f64(in, "coef");
    svm.support_vectors = FeatureMatrix(model.feature_kind);
    std::vector<double> row(dim);
    for (std::uint64_t s = 0; s < n; ++s) {
      for (auto& v : row) v = get_f64(in, "support vector");
      svm.support_vectors.append(row);
    }
    svm.sv_sq_norms = parallel::squared_norms_serial(svm.support_vectors);
    model.impl = std::move(svm);
  } else {
    ForestModel forest;
    const auto n_trees = get_le<std::uint32_t>(in, "tree count");
    forest.trees.resize(n_trees);
    for (auto& tree : forest.trees) {
      const auto n_nodes = get_le<std::uint32_t>(in, "node count");
      tree.nodes.resize(n_nodes);
      for (auto& node : tree.nodes) {
        node.feature = static_cast<std::int32_t>(get_le<std::uint32_t>(in, "feature"));
        node.threshold = get_f64(in, "threshold");
        node.left = static_cast<std::int32_t>(get_le<std::uint32_t>(in, "left"));
        node.right = static_cast<std::int32_t>(get_le<std::uint32_t>(in, "right"));
        node.vote = get_le<std::uint8_t>(in, "vote");
        if (node.feature >= static_cast<std::int32_t>(dim) ||
            (node.feature >= 0 && (node.left < 0 || node.right < 0 || static_cast<std::uint32_t>(node.left) >= n_nodes ||
                                   static_cast<std::uint32_t>(node.right) >= n_nodes))) {
          throw FormatError("corrupt tree node");
        }
      }
    }
    model.impl = std::move(forest);
  }
  return model;
}

}  // namespace patchselect
