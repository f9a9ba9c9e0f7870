#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "patchselect/errors.hpp"
#include "patchselect/gpr_core.hpp"
#include "patchselect/rng.hpp"
#include "support.hpp"

using namespace patchselect;

TEST_CASE("BScan rejects grids smaller than one patch and bad metadata") {
  CHECK_THROWS_AS(BScan(17, 40, 0.05, 0, 0), ConfigError);
  CHECK_THROWS_AS(BScan(40, 17, 0.05, 0, 0), ConfigError);
  CHECK_THROWS_AS(BScan(40, 40, 0.0, 0, 0), ConfigError);
  CHECK_THROWS_AS(BScan(40, 40, 0.05, 0, 0, std::vector<double>(10)), ConfigError);
  BScan ok(18, 18, 0.05, 1, 2);
  CHECK(ok.lane_id() == 1);
  CHECK(ok.run_id() == 2);
  ok.at(3, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ok.validate(), ConfigError);
}

TEST_CASE("BScan stores samples time-major") {
  BScan b(20, 30, 0.05, 0, 0);
  b.at(5, 7) = 3.5;
  CHECK(b.samples()[5 * 30 + 7] == 3.5);
  CHECK(b.row(5)[7] == 3.5);
  CHECK(b.column(7)[5] == 3.5);
}

TEST_CASE("extract_patch maps a ramp window onto [-1, 1] preserving order") {
  BScan b(40, 40, 0.05, 0, 0);
  for (int t = 0; t < 40; ++t)
    for (int x = 0; x < 40; ++x) b.at(t, x) = 2.0 * t + 3.0 * x;
  const Patch p = extract_patch(b, {20, 20, 0.0});
  CHECK(*std::min_element(p.values.begin(), p.values.end()) == -1.0);
  CHECK(*std::max_element(p.values.begin(), p.values.end()) == 1.0);
  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c + 1 < kPatchSize; ++c) CHECK(p.at(r, c) < p.at(r, c + 1));
  }
  for (int r = 0; r + 1 < kPatchSize; ++r) CHECK(p.at(r, 0) < p.at(r + 1, 0));
}

TEST_CASE("extract_patch on a constant window gives zeros") {
  BScan b(30, 30, 0.05, 0, 0);
  for (double& v : b.samples()) v = 7.3;
  const Patch p = extract_patch(b, {15, 15, 0.0});
  CHECK(std::all_of(p.values.begin(), p.values.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("extract_patch matches an elementwise recomputation") {
  const BScan b = testsupport::random_bscan(60, 50, 11);
  const int t = 31, x = 22;
  const Patch p = extract_patch(b, {x, t, 0.5}, 77);
  double lo = 1e300, hi = -1e300;
  for (int r = t - 9; r <= t + 8; ++r)
    for (int c = x - 9; c <= x + 8; ++c) {
      lo = std::min(lo, b.at(r, c));
      hi = std::max(hi, b.at(r, c));
    }
  for (int r = 0; r < 18; ++r) {
    for (int c = 0; c < 18; ++c) {
      const double expect = 2.0 * (b.at(t - 9 + r, x - 9 + c) - lo) / (hi - lo) - 1.0;
      CHECK(p.at(r, c) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(p.source_alarm == 77);
  CHECK(p.source_keypoint == Keypoint{x, t, 0.5});
}

TEST_CASE("extract_patch centering owns 9 rows above and 8 below") {
  BScan b(18, 18, 0.05, 0, 0);
  CHECK_NOTHROW(extract_patch(b, {9, 9, 0.0}));
  CHECK_THROWS_AS(extract_patch(b, {9, 8, 0.0}), MarginViolation);
  CHECK_THROWS_AS(extract_patch(b, {9, 10, 0.0}), MarginViolation);
  CHECK_THROWS_AS(extract_patch(b, {10, 9, 0.0}), MarginViolation);
  CHECK_FALSE(window_fits(18, 18, 9, 8));
  CHECK(window_fits(342, 18, 333, 9));
  CHECK_FALSE(window_fits(342, 18, 334, 9));
}

TEST_CASE("extract_patch is invariant to positive affine transforms of the data") {
  BScan a = testsupport::random_bscan(40, 40, 5);
  BScan b = a;
  for (double& v : b.samples()) v = 4.0 * v - 2.5;
  const Patch pa = extract_patch(a, {20, 20, 0.0});
  const Patch pb = extract_patch(b, {20, 20, 0.0});
  for (std::size_t i = 0; i < pa.values.size(); ++i) CHECK(pa.values[i] == doctest::Approx(pb.values[i]).epsilon(1e-12));
}

namespace {

Alarm alarm_at(AlarmId id, double pos_m, RunId run = 0, LaneId lane = 0) {
  Alarm a;
  a.id = id;
  a.lane_id = lane;
  a.run_id = run;
  a.downtrack_position_m = pos_m;
  a.downtrack_index = static_cast<int>(std::lround(pos_m / 0.05));
  return a;
}

GroundTruth truth_with(std::vector<double> positions, LaneId lane = 0) {
  GroundTruth g;
  g.lane_area_m2 = 100.0;
  ObjectId id = 1;
  for (double p : positions) g.objects.push_back({id++, lane, p, 100, 1.0});
  return g;
}

}  // namespace

TEST_CASE("label_alarms halo rule") {
  const GroundTruth g = truth_with({10.1});
  const std::vector<Alarm> inside = {alarm_at(0, 10.0)};
  const auto li = label_alarms(inside, g, 0.25);
  REQUIRE(li.size() == 1);
  CHECK(li[0].label == Label::Target);
  CHECK(li[0].truth_object_id == ObjectId{1});

  const auto lo = label_alarms(std::vector<Alarm>{alarm_at(0, 10.0)}, truth_with({11.0}), 0.25);
  REQUIRE(lo.size() == 1);
  CHECK(lo[0].label == Label::NonTarget);
  CHECK_FALSE(lo[0].truth_object_id.has_value());
}

TEST_CASE("label_alarms keeps only the nearest alarm per object and run") {
  const std::vector<Alarm> alarms = {alarm_at(0, 9.9), alarm_at(1, 10.05)};
  const auto out = label_alarms(alarms, truth_with({10.0}), 0.25);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == 1);
  CHECK(out[0].label == Label::Target);

  // a second run keeps its own match
  const std::vector<Alarm> two_runs = {alarm_at(0, 9.9, 0), alarm_at(1, 10.05, 0), alarm_at(2, 9.95, 1)};
  const auto both = label_alarms(two_runs, truth_with({10.0}), 0.25);
  REQUIRE(both.size() == 2);
  CHECK(both[0].id == 1);
  CHECK(both[1].id == 2);
}

TEST_CASE("label_alarms agrees with exhaustive pairing on random layouts") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> objs;
    for (int k = 0; k < 6; ++k) objs.push_back(rng.uniform(0.0, 30.0));
    const GroundTruth g = truth_with(objs);
    std::vector<Alarm> alarms;
    for (AlarmId k = 0; k < 25; ++k) alarms.push_back(alarm_at(k, rng.uniform(0.0, 30.0), static_cast<RunId>(rng.below(2))));

    // oracle: nearest object in halo per alarm, then nearest alarm per (object, run)
    std::vector<int> cand(alarms.size(), -1);
    for (std::size_t i = 0; i < alarms.size(); ++i) {
      double best = 1e300;
      for (std::size_t o = 0; o < objs.size(); ++o) {
        const double d = std::abs(alarms[i].downtrack_position_m - objs[o]);
        if (d <= 0.25 && d < best) {
          best = d;
          cand[i] = static_cast<int>(o);
        }
      }
    }
    std::vector<bool> keep(alarms.size(), true);
    for (std::size_t i = 0; i < alarms.size(); ++i) {
      if (cand[i] < 0) continue;
      for (std::size_t j = 0; j < alarms.size(); ++j) {
        if (j == i || cand[j] != cand[i] || alarms[j].run_id != alarms[i].run_id) continue;
        const double di = std::abs(alarms[i].downtrack_position_m - objs[static_cast<std::size_t>(cand[i])]);
        const double dj = std::abs(alarms[j].downtrack_position_m - objs[static_cast<std::size_t>(cand[j])]);
        if (dj < di || (dj == di && alarms[j].downtrack_index < alarms[i].downtrack_index) ||
            (dj == di && alarms[j].downtrack_index == alarms[i].downtrack_index && j < i)) {
          keep[i] = false;
        }
      }
    }
    const auto out = label_alarms(alarms, g, 0.25);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < alarms.size(); ++i) {
      if (!keep[i]) continue;
      ++expected;
      const auto it = std::find_if(out.begin(), out.end(), [&](const Alarm& a) { return a.id == alarms[i].id; });
      REQUIRE(it != out.end());
      CHECK((it->label == Label::Target) == (cand[i] >= 0));
      if (cand[i] >= 0) CHECK(*it->truth_object_id == g.objects[static_cast<std::size_t>(cand[i])].object_id);
    }
    CHECK(out.size() == expected);
  }
}

TEST_CASE("label_alarms is idempotent and order independent") {
  Rng rng(9);
  std::vector<Alarm> alarms;
  for (AlarmId k = 0; k < 40; ++k) alarms.push_back(alarm_at(k, rng.uniform(0.0, 20.0), static_cast<RunId>(k % 3)));
  const GroundTruth g = truth_with({2.0, 5.5, 9.0, 14.2});
  const auto once = label_alarms(alarms, g, 0.5);
  const auto twice = label_alarms(once, g, 0.5);
  std::vector<Alarm> shuffled = alarms;
  rng.shuffle(std::span<Alarm>(shuffled));
  const auto other = label_alarms(shuffled, g, 0.5);
  REQUIRE(once.size() == twice.size());
  REQUIRE(once.size() == other.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].id == twice[i].id);
    CHECK(once[i].label == twice[i].label);
    CHECK(once[i].id == other[i].id);
    CHECK(once[i].truth_object_id == other[i].truth_object_id);
  }
  for (const Alarm& a : once) CHECK((a.label == Label::Target) == a.truth_object_id.has_value());
}
