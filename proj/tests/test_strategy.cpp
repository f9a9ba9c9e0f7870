#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "patchselect/errors.hpp"
#include "patchselect/rng.hpp"
#include "patchselect/strategy.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace patchselect;

namespace {

// Table of the built-in strategies, written out by hand.

struct Fixture {
  std::vector<BScan> scans;
  std::vector<Alarm> alarms;

  Fixture() {
    scans.push_back(depth_normalize(testsupport::random_bscan(342, 120, 31, 0, 0)));
    scans.push_back(depth_normalize(testsupport::random_bscan(342, 120, 32, 1, 0)));
    AlarmId id = 0;
    for (LaneId lane = 0; lane < 2; ++lane) {
      for (int x : {20, 45, 70, 95}) {
        Alarm a;
        a.id = id++;
        a.lane_id = lane;
        a.downtrack_index = x;
        a.downtrack_position_m = x * 0.05;
        a.label = (x == 20 || x == 70) ? Label::Target : Label::NonTarget;
        alarms.push_back(a);
      }
    }
  }
};

Model small_model(const Fixture& f, FeatureKind kind) {
  return train_rf(build_training_set(registry_entry(5), f.alarms, f.scans, kind, {}), 3, {15, 4});
}

double stat_at(const Model& m, FeatureKind kind, const BScan& scan, const Alarm& a, int t) {
  return predict(m, extract_features(kind, extract_patch(scan, {a.downtrack_index, t, 0.0})));
}

}  // namespace

TEST_CASE("registry matches the hand-written table") {
  const auto& r = registry();
  REQUIRE(r.size() == 11);
  for (int i = 1; i <= 11; ++i) {
    const StrategySpec& s = registry_entry(i);
    CHECK(s.index == i);
    CHECK(to_string(s) == oracle::kTable1[i - 1]);
    CHECK(parse_strategy(oracle::kTable1[i - 1]) == s);
  }
  CHECK_THROWS_AS(registry_entry(0), RangeError);
  CHECK_THROWS_AS(registry_entry(12), RangeError);
}

TEST_CASE("registry spot checks") {
  const auto& ps = registry_entry(11);
  CHECK(ps.name == "PatchSelect");
  CHECK(ps.train.target_keypoints == 4);
  CHECK(ps.train.target_sampling == TargetSampling::Energy);
  CHECK(ps.train.nontarget == Sampler::down_depth(4));
  CHECK(ps.test.ordering == Ordering::DS);
  CHECK(ps.test.selector == Selector::top(12));
  CHECK(registry_entry(9).test.selector == Selector::sliding_sum(7));
  CHECK(registry_entry(7).train.target_sampling == TargetSampling::Regular);
  CHECK(registry_entry(7).train.target_keypoints == 5);
  CHECK(registry_entry(8).test.ordering == Ordering::En);
  CHECK(registry_entry(8).test.selector == Selector::top(1));
}

TEST_CASE("strategy text parsing") {
  const auto s = parse_strategy("index=3 name=custom target=energy:2 nontarget=everypoint order=DS select=top:5");
  CHECK(s.test.ds_stride == 4);
  CHECK(s.train.nontarget.kind == SamplerKind::EveryPoint);
  CHECK(parse_strategy(to_string(s)) == s);
  const auto r = parse_strategy("index=4 name=r target=energy:1 nontarget=random:7:99 order=DS select=slide:3 stride=2");
  CHECK(r.train.nontarget == Sampler::random(7, 99));
  CHECK(r.test.selector == Selector::sliding_sum(3));
  CHECK(r.test.ds_stride == 2);
  CHECK(parse_strategy(to_string(r)) == r);

  CHECK_THROWS_AS(parse_strategy(""), ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:1 nontarget=topenergy:1 order=XX select=top:1"), ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:0 nontarget=topenergy:1 order=DS select=top:1"), ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:1 nontarget=blob:1 order=DS select=top:1"), ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:1 nontarget=topenergy:1 order=En select=all"), ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:1 nontarget=topenergy:1 order=DS"), ConfigError);
  CHECK_THROWS_AS(
      parse_strategy("index=1 index=2 name=x target=energy:1 nontarget=topenergy:1 order=DS select=top:1"), ConfigError);
  CHECK_THROWS_AS(
      parse_strategy("index=1 name=x target=energy:1 nontarget=topenergy:1 order=DS select=top:1 color=red"),
      ConfigError);
  CHECK_THROWS_AS(parse_strategy("index=1 name=x target=energy:1 nontarget=topenergy:x order=DS select=top:1"),
                  ConfigError);
}

TEST_CASE("aggregate") {
  const std::vector<double> d = {0.2, 0.9, 0.5};
  CHECK(aggregate(d, 1) == 0.9);
  CHECK(aggregate(d, 2) == doctest::Approx(1.4));
  CHECK(aggregate(d, 3) == doctest::Approx(1.6));
  CHECK(aggregate(d, 50) == aggregate(d, 3));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}, 1), EmptyInput);
  CHECK_THROWS_AS(aggregate(d, 0), RangeError);
}

TEST_CASE("aggregate is permutation invariant, monotone in L and affine equivariant") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto d = testsupport::random_vector(1 + seed % 40, seed, 0.0, 1.0);
    auto shuffled = d;
    Rng rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    double prev = 0.0;
    for (int l = 1; l <= 45; ++l) {
      const double g = aggregate(d, l);
      CHECK(g == aggregate(shuffled, l));
      CHECK(g >= prev);
      prev = g;
      std::vector<double> mapped(d);
      for (double& v : mapped) v = 0.3 + 2.0 * v;
      const double lp = std::min<double>(l, static_cast<double>(d.size()));
      CHECK(aggregate(mapped, l) == doctest::Approx(0.3 * lp + 2.0 * g));
    }
    // sum of the top three is three times their mean
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t take = std::min<std::size_t>(3, d.size());
    CHECK(aggregate(d, 3) == doctest::Approx(std::accumulate(sorted.begin(), sorted.begin() + static_cast<long>(take), 0.0)));
  }
}

TEST_CASE("sliding sum") {
  const std::vector<double> d = {0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0};
  CHECK(sliding_sum(d, 7) == 7.0);
  CHECK(sliding_sum(d, 3) == 3.0);
  CHECK(sliding_sum(std::vector<double>{1.0, 2.0}, 7) == 3.0);
  CHECK(sliding_sum(std::vector<double>{-1.0, -2.0, -0.5}, 1) == -0.5);
  CHECK_THROWS_AS(sliding_sum(std::vector<double>{}, 3), EmptyInput);
  // brute force on random sequences
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto v = testsupport::random_vector(30, seed);
    for (int w = 1; w <= 10; ++w) {
      double best = -1e300;
      for (std::size_t s = 0; s + static_cast<std::size_t>(w) <= v.size(); ++s)
        best = std::max(best, std::accumulate(v.begin() + static_cast<long>(s), v.begin() + static_cast<long>(s) + w, 0.0));
      CHECK(sliding_sum(v, w) == doctest::Approx(best));
    }
  }
}

TEST_CASE("combine helpers") {
  const std::vector<double> d = {0.1, 0.7, 0.3, 0.9};
  CHECK(combine_ds(Selector::top(1), d) == 0.9);
  CHECK(combine_ds(Selector::all(), d) == doctest::Approx(2.0));
  CHECK(combine_ds(Selector::sliding_sum(2), d) == doctest::Approx(1.2));
  CHECK(combine_en(1, d) == 0.1);
  CHECK(combine_en(2, d) == 0.7);
  CHECK(combine_en(9, d) == 0.9);
  CHECK(ds_grid(342, 4, 9).size() == 82);
}

TEST_CASE("samplers on an alarm") {
  const Fixture f;
  const Alarm& a = f.alarms[1];
  const BScan& scan = f.scans[0];
  const MsekParams mp;
  const auto top = sample_times(Sampler::top_energy(5), scan, a, mp);
  CHECK(top.size() == 5);
  const auto kps = msek(scan, a.downtrack_index, {9, 5, 9});
  for (std::size_t i = 0; i < 5; ++i) CHECK(top[i] == kps[i].time_index);
  CHECK(sample_times(Sampler::regular(5), scan, a, mp) == std::vector<int>{9, 90, 171, 252, 333});
  CHECK(sample_times(Sampler::every_point(), scan, a, mp).size() == 342 - 18 + 1);
  CHECK(sample_times(Sampler::down_depth(4), scan, a, mp).size() == 82);
  const auto r1 = sample_times(Sampler::random(5, 1), scan, a, mp);
  CHECK(r1 == sample_times(Sampler::random(5, 1), scan, a, mp));
  CHECK(r1 != sample_times(Sampler::random(5, 1), scan, f.alarms[2], mp));
  CHECK(target_times(registry_entry(7).train, scan, a, mp) == std::vector<int>{9, 90, 171, 252, 333});
  CHECK(target_times(registry_entry(11).train, scan, a, mp) == std::vector<int>(top.begin(), top.begin() + 4));
  CHECK_THROWS_AS(find_scan(f.scans, 5, 0), RangeError);
}

TEST_CASE("build_training_set row counts") {
  const Fixture f;
  const std::size_t n_nt = 4, n_t = 4;

  const auto s11 = build_training_set(registry_entry(11), f.alarms, f.scans, FeatureKind::Hog, {});
  CHECK(s11.size() == n_t * 4 + n_nt * 82);
  for (const Alarm& a : f.alarms) {
    const auto rows = std::count(s11.provenance.begin(), s11.provenance.end(), a.id);
    CHECK(rows == (a.label == Label::Target ? 4 : 82));
  }
  s11.validate();
  CHECK(s11.features.dim() == 81);

  const auto s6 = build_training_set(registry_entry(6), f.alarms, f.scans, FeatureKind::Raw, {});
  CHECK(s6.size() == f.alarms.size());

  const auto s3 = build_training_set(registry_entry(3), f.alarms, f.scans, FeatureKind::Ehd, {});
  CHECK(std::count(s3.labels.begin(), s3.labels.end(), 1) == static_cast<long>(n_t));
  CHECK(std::count(s3.labels.begin(), s3.labels.end(), -1) == static_cast<long>(5 * n_nt));

  // the single target row sits at the strongest MSEK keypoint
  const Alarm& t = f.alarms[0];
  const auto kp = msek(f.scans[0], t.downtrack_index, {});
  REQUIRE(kp.size() >= 4);
  const auto expect = feat_ehd(extract_patch(f.scans[0], {t.downtrack_index, kp[0].time_index, 0.0}));
  const auto row = s3.features.row(0);
  CHECK(std::equal(row.begin(), row.end(), expect.values.begin()));

  std::vector<Alarm> only_targets;
  for (const auto& a : f.alarms)
    if (a.label == Label::Target) only_targets.push_back(a);
  CHECK_THROWS_AS(build_training_set(registry_entry(6), only_targets, f.scans, FeatureKind::Raw, {}), EmptyClass);
}

TEST_CASE("score_alarm") {
  const Fixture f;
  const Model m = small_model(f, FeatureKind::Hog);
  const BScan& scan = f.scans[1];
  const Alarm& a = f.alarms[5];

  // En, L=1: the statistic at the strongest keypoint
  const auto kp = msek(scan, a.downtrack_index, {});
  CHECK(score_alarm(registry_entry(10), m, FeatureKind::Hog, scan, a, {}) ==
        stat_at(m, FeatureKind::Hog, scan, a, kp[0].time_index));

  std::vector<double> grid_stats;
  for (int t : ds_grid(342, 4, 9)) grid_stats.push_back(stat_at(m, FeatureKind::Hog, scan, a, t));
  // DS over all locations is the plain sum
  const double total = aggregate(grid_stats, 1000);
  CHECK(score_alarm(registry_entry(4), m, FeatureKind::Hog, scan, a, {}) == total);
  CHECK(score_alarm(registry_entry(6), m, FeatureKind::Hog, scan, a, {}) ==
        *std::max_element(grid_stats.begin(), grid_stats.end()));
  CHECK(score_alarm(registry_entry(11), m, FeatureKind::Hog, scan, a, {}) == aggregate(grid_stats, 12));
  CHECK(score_alarm(registry_entry(9), m, FeatureKind::Hog, scan, a, {}) == sliding_sum(grid_stats, 7));

  CHECK_THROWS_AS(score_alarm(registry_entry(11), m, FeatureKind::Raw, scan, a, {}), KindMismatch);
}
