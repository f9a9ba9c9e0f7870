#include <doctest.h>

#include <cmath>
#include <sstream>

#include "patchselect/classifiers.hpp"
#include "patchselect/errors.hpp"
#include "patchselect/rng.hpp"
#include "oracles.hpp"

using namespace patchselect;
using oracle::dual_gradient;
using oracle::embed;
using oracle::make_set;
using oracle::two_clusters;

namespace {

double dual_objective(const TrainingSet& ts, const SvmSolution& sol) {
  const auto g = dual_gradient(ts, sol);
  double obj = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) obj += 0.5 * sol.alpha[i] * (g[i] + 1.0) - sol.alpha[i];
  return obj;
}

}  // namespace

TEST_CASE("classifier kinds parse") {
  CHECK(parse_classifier_kind("svm") == ClassifierKind::Svm);
  CHECK(parse_classifier_kind("rf") == ClassifierKind::RandomForest);
  CHECK_THROWS_AS(parse_classifier_kind("knn"), ConfigError);
}

TEST_CASE("training set validation") {
  auto ts = make_set({{0.0}, {1.0}}, {1, 1});
  CHECK_THROWS_AS(ts.validate(), DegenerateData);
  ts = make_set({{0.0}, {1.0}}, {1, 0});
  CHECK_THROWS_AS(ts.validate(), ConfigError);
  ts = make_set({{0.0}, {1.0}}, {1, -1});
  ts.labels.push_back(1);
  CHECK_THROWS_AS(ts.validate(), ConfigError);
  CHECK_THROWS_AS(train_rf(make_set({{0.0}, {1.0}}, {-1, -1}), 1), DegenerateData);
}

TEST_CASE("svm on two points has the closed-form solution") {
  const auto ts = make_set({{0.0}, {1.0}}, {1, -1});
  const double k = std::exp(-1.0);
  const auto sol = solve_svm_dual(ts.features, ts.labels, {1.0, 10.0, 1e-10});
  CHECK(sol.alpha[0] == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-9));
  CHECK(sol.alpha[1] == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-9));
  CHECK(std::abs(sol.rho) < 1e-9);
  const Model m = train_svm(ts, {1.0, 10.0, 1e-10});
  CHECK(predict_row(m, embed({0.0})) == doctest::Approx(1.0));
  CHECK(predict_row(m, embed({1.0})) == doctest::Approx(-1.0));
  CHECK(predict_row(m, embed({0.5})) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("svm with an upper bound of C") {
  const auto ts = make_set({{0.0}, {1.0}}, {1, -1});
  const auto sol = solve_svm_dual(ts.features, ts.labels, {1.0, 0.5, 1e-10});
  CHECK(sol.alpha[0] == 0.5);
  CHECK(sol.alpha[1] == 0.5);
}

TEST_CASE("svm separates XOR with an RBF kernel") {
  const auto ts = make_set({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {-1, -1, 1, 1});
  const SvmParams p{1.0, 10.0, 1e-8};
  const Model m = train_svm(ts, p);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(predict_row(m, ts.features.row(i)) * ts.labels[i] > 0.0);
  // symmetric problem: every point is a free support vector with the same weight
  const auto sol = solve_svm_dual(ts.features, ts.labels, p);
  for (double a : sol.alpha) CHECK(a == doctest::Approx(sol.alpha[0]).epsilon(1e-6));
  CHECK(std::abs(sol.rho) < 1e-6);
}

TEST_CASE("svm solution satisfies box, equality and KKT conditions") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> pts;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      const int label = rng.uniform() < 0.5 ? 1 : -1;
      pts.push_back({label * 0.7 + rng.normal(), rng.normal(), rng.normal()});
      y.push_back(label);
    }
    const auto ts = make_set(pts, y);
    const double c = 2.0;
    const auto sol = solve_svm_dual(ts.features, ts.labels, {0.5, c, 1e-8});
    const auto g = dual_gradient(ts, sol);
    double eq = 0.0, up = -1e300, low = 1e300;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double a = sol.alpha[i];
      CHECK(a >= 0.0);
      CHECK(a <= c);
      eq += a * ts.labels[i];
      const double v = -ts.labels[i] * g[i];
      const bool in_up = (ts.labels[i] == 1 && a < c) || (ts.labels[i] == -1 && a > 0);
      const bool in_low = (ts.labels[i] == 1 && a > 0) || (ts.labels[i] == -1 && a < c);
      if (in_up) up = std::max(up, v);
      if (in_low) low = std::min(low, v);
    }
    CHECK(std::abs(eq) < 1e-6);
    CHECK(up - low < 1e-6);

    // free support vectors lie on the margin
    const Model m = train_svm(ts, {0.5, c, 1e-8});
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (sol.alpha[i] > 1e-6 && sol.alpha[i] < c - 1e-6) {
        CHECK(ts.labels[i] * predict_row(m, ts.features.row(i)) == doctest::Approx(1.0).epsilon(1e-5));
      }
    }

    // the default tolerance lands close to the tight optimum
    const auto loose = solve_svm_dual(ts.features, ts.labels, {0.5, c, 1e-3});
    CHECK(dual_objective(ts, loose) == doctest::Approx(dual_objective(ts, sol)).epsilon(1e-3));
    CHECK(dual_objective(ts, loose) >= dual_objective(ts, sol) - 1e-12);
  }
}

TEST_CASE("svm: duplicating every point leaves a hard-margin decision unchanged") {
  auto base = two_clusters(40, 3);
  TrainingSet twice = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    twice.features.append(base.features.row(i));
    twice.labels.push_back(base.labels[i]);
    twice.provenance.push_back(base.provenance[i]);
  }
  const SvmParams p{0.3, 1e4, 1e-9};
  const Model a = train_svm(base, p);
  const Model b = train_svm(twice, p);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto x = embed({rng.uniform(-4, 4), rng.uniform(-4, 4)});
    CHECK(predict_row(b, x) == doctest::Approx(predict_row(a, x)).epsilon(1e-5));
  }
}

TEST_CASE("svm: flipping the labels flips the decision") {
  auto ts = two_clusters(50, 4);
  auto flipped = ts;
  for (int& y : flipped.labels) y = -y;
  const SvmParams p{0.5, 1.0, 1e-9};
  const Model a = train_svm(ts, p);
  const Model b = train_svm(flipped, p);
  for (std::size_t i = 0; i < ts.size(); ++i)
    CHECK(predict_row(b, ts.features.row(i)) == doctest::Approx(-predict_row(a, ts.features.row(i))).epsilon(1e-6));
}

TEST_CASE("svm default gamma") {
  const auto ts = make_set({{0.0}, {2.0}}, {1, -1});
  // one dimension of variance 1 among 45
  CHECK(default_svm_gamma(ts.features) == doctest::Approx(1.0));
  const auto flat = make_set({{0.0}, {0.0}}, {1, -1});
  CHECK(default_svm_gamma(flat.features) == 1.0);
}

TEST_CASE("random forest is deterministic in its seed") {
  const auto ts = two_clusters(100, 5);
  const Model a = train_rf(ts, 42);
  const Model b = train_rf(ts, 42);
  const Model c = train_rf(ts, 43);
  Rng rng(1);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const auto x = embed({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    CHECK(predict_row(a, x) == predict_row(b, x));
    differs |= predict_row(a, x) != predict_row(c, x);
  }
  CHECK(differs);
}

TEST_CASE("random forest separates two clusters") {
  const auto train_set = two_clusters(200, 6);
  const auto test_set = two_clusters(400, 7);
  const Model m = train_rf(train_set, 1, {100, 2});
  int correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const double p = predict_row(m, test_set.features.row(i));
    correct += (p > 0.5) == (test_set.labels[i] == 1);
  }
  CHECK(correct >= 0.95 * 400);
}

TEST_CASE("random forest votes are multiples of one over the tree count") {
  const auto ts = two_clusters(60, 8);
  const Model m = train_rf(ts, 3, {7, 2});
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double p = predict_row(m, embed({rng.uniform(-3, 3), rng.uniform(-3, 3)}));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(std::abs(p * 7 - std::round(p * 7)) < 1e-12);
  }
}

TEST_CASE("random forest on constant features predicts the bootstrap majority") {
  const auto ts = make_set({{1.0}, {1.0}, {1.0}, {1.0}, {1.0}}, {1, 1, 1, 1, -1});
  const Model m = train_rf(ts, 0, {50, 2});
  const auto& forest = std::get<ForestModel>(m.impl);
  for (const auto& tree : forest.trees) CHECK(tree.nodes.size() == 1);
  CHECK(predict_row(m, embed({1.0})) > 0.5);
  CHECK_THROWS_AS(train_rf(ts, 0, {0, 2}), ConfigError);
}

TEST_CASE("predict rejects a mismatched feature kind") {
  const Model m = train_rf(two_clusters(20, 1), 1, {5, 2});
  FeatureVector fv{FeatureKind::Hog, std::vector<double>(81, 0.0)};
  CHECK_THROWS_AS(predict(m, fv), KindMismatch);
}

TEST_CASE("models survive a save/load round trip") {
  const auto ts = two_clusters(60, 10);
  for (const Model& m : {train_rf(ts, 5, {20, 3}), train_svm(ts, {0.4, 1.0, 1e-3})}) {
    std::stringstream ss;
    save_model(ss, m);
    const Model back = load_model(ss);
    CHECK(back.kind() == m.kind());
    CHECK(back.feature_kind == m.feature_kind);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const auto x = embed({rng.uniform(-3, 3), rng.uniform(-3, 3)});
      CHECK(predict_row(back, x) == predict_row(m, x));
    }
  }
  std::stringstream bad("XXXX123456");
  CHECK_THROWS_AS(load_model(bad), FormatError);
  std::stringstream good;
  save_model(good, train_rf(ts, 1, {3, 2}));
  const std::string blob = good.str();
  std::stringstream truncated(blob.substr(0, blob.size() / 2));
  CHECK_THROWS_AS(load_model(truncated), FormatError);
}
