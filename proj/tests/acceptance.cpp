// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--quick] [--config FILE] [--jobs N]
//
// --quick skips the multi-seed directional study (the slow part).

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "app.hpp"
#include "oracles.hpp"
#include "patchselect/keypoints.hpp"
#include "patchselect/parallel.hpp"
#include "support.hpp"

using namespace patchselect;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Dyadic values keep every partial sum exact in any order.
std::vector<double> dyadic_vector(Rng& rng, std::size_t n) {
  std::vector<double> d(n);
  for (double& v : d) v = static_cast<double>(static_cast<int>(rng.below(8193)) - 4096) / 1024.0;
  return d;
}

Outcome eq1_family() {
  Rng rng(101);
  std::size_t bad_max = 0, bad_sum = 0;
  const std::size_t trials = 10000;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto d = dyadic_vector(rng, 1 + rng.below(64));
    double sum = 0.0;
    for (double v : d) sum += v;
    bad_max += aggregate(d, 1) != *std::max_element(d.begin(), d.end());
    bad_sum += aggregate(d, static_cast<int>(d.size())) != sum;
  }
  // sum-of-top-3 and mean-of-top-3 as confidences of the same alarm set
  std::size_t bad_roc = 0;
  for (int problem = 0; problem < 100; ++problem) {
    const std::size_t n = 100;
    std::vector<double> by_sum, by_mean;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> d(3 + rng.below(30));
      for (double& v : d) v = rng.normal();
      by_sum.push_back(aggregate(d, 3));
      by_mean.push_back(aggregate(d, 3) / 3.0);
      labels.push_back(i % 3 == 0 ? Label::NonTarget : Label::Target);
    }
    bad_roc += !(roc(by_sum, labels, 50.0).points == roc(by_mean, labels, 50.0).points);
  }
  return {bad_max == 0 && bad_sum == 0 && bad_roc == 0,
          strf("%zu vectors: max mismatches %zu, sum mismatches %zu; ROC sum-vs-mean mismatches %zu/100", trials,
              bad_max, bad_sum, bad_roc)};
}

Outcome msek_oracle() {
  std::size_t mismatched = 0, scale_bad = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed + 7000);
    const int n = 50 + static_cast<int>(rng.below(300));
    const int window = 1 + 2 * static_cast<int>(rng.below(6));
    const int k = 1 + static_cast<int>(rng.below(15));
    std::vector<double> a(static_cast<std::size_t>(n));
    const bool coarse = seed % 2 == 0;
    for (double& v : a) v = coarse ? static_cast<double>(static_cast<int>(rng.below(4))) : rng.normal();
    const MsekParams p{window, k, 9};
    const auto got = msek_ascan(a, p);
    const auto want = oracle::msek(a, window, k, 9);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].time_index == want[i].first && got[i].score == want[i].second;
    }
    mismatched += !same;
    if (coarse) continue;
    for (double c : {-3.0, 0.1, 10.0}) {
      std::vector<double> s(a);
      for (double& v : s) v *= c;
      const auto scaled = msek_ascan(s, p);
      bool ok = scaled.size() == got.size();
      for (std::size_t i = 0; ok && i < got.size(); ++i) ok = scaled[i].time_index == got[i].time_index;
      scale_bad += !ok;
    }
  }
  return {mismatched == 0 && scale_bad == 0,
          strf("1000 A-scans: %zu oracle mismatches; %zu scale-invariance failures over 1500 scalings", mismatched,
              scale_bad)};
}

Outcome pauc_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 300);
    const std::size_t n = 5 + rng.below(300);
    std::vector<double> conf(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.uniform() < 0.6 ? Label::Target : Label::NonTarget;
      conf[i] = std::round((rng.normal() + (labels[i] == Label::Target ? 1.0 : 0.0)) * 8.0);
    }
    labels[0] = Label::Target;
    labels[1] = Label::NonTarget;
    const double area = rng.uniform(20.0, 400.0);
    const RocCurve c = roc(conf, labels, area);
    for (double far2 : {0.0025, 0.005, 0.02, 0.5}) worst = std::max(worst, std::abs(pauc(c, far2) - oracle::pauc(c, far2)));
  }
  const std::vector<double> perfect = {0.9, 0.8, 0.7, 0.2, 0.1};
  const std::vector<Label> pl = {Label::Target, Label::Target, Label::Target, Label::NonTarget, Label::NonTarget};
  const double p = pauc(roc(perfect, pl, 100.0), 0.005);
  return {worst <= 1e-9 && std::abs(p - 1.0) <= 1e-12,
          strf("max |pauc - quadrature| over 100 curves x 4 far2 = %.3g; perfect detector %.15f", worst, p)};
}

Outcome fold_integrity() {
  std::size_t bad = 0, pairs_checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto alarms = oracle::random_alarms(seed);
    const FoldPlan plan = cluster_and_fold(alarms, 1.0, 4, seed);
    bad += oracle::straddling_pairs(alarms, plan, 1.0);
    pairs_checked += alarms.size() * (alarms.size() - 1) / 2;
  }
  return {bad == 0, strf("100 layouts, %zu pairs audited, %zu near pairs split across folds", pairs_checked, bad)};
}

Outcome registry_fidelity() {
  const auto& reg = registry();
  std::size_t bad = reg.size() == 11 ? 0 : 11;
  for (std::size_t i = 0; i < std::min<std::size_t>(reg.size(), 11); ++i) {
    bad += to_string(reg[i]) != oracle::kTable1[i] || !(parse_strategy(oracle::kTable1[i]) == reg[i]);
  }
  return {bad == 0, strf("%zu registry rows, %zu differ from the transcription", reg.size(), bad)};
}

Outcome classifier_sanity() {
  std::vector<std::string> notes;
  bool ok = true;

  const auto xor_set = oracle::make_set({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {-1, -1, 1, 1});
  const Model xm = train_svm(xor_set, {1.0, 10.0, 1e-8});
  int xor_right = 0;
  for (std::size_t i = 0; i < 4; ++i) xor_right += predict_row(xm, xor_set.features.row(i)) * xor_set.labels[i] > 0;
  ok = ok && xor_right == 4;
  notes.push_back(strf("XOR %d/4", xor_right));

  double worst_box = 0, worst_eq = 0, worst_gap = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> pts;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      const int label = rng.uniform() < 0.5 ? 1 : -1;
      pts.push_back({label * 0.7 + rng.normal(), rng.normal(), rng.normal()});
      y.push_back(label);
    }
    const auto ts = oracle::make_set(pts, y);
    const auto sol = solve_svm_dual(ts.features, ts.labels, {0.5, 2.0, 1e-8});
    const auto r = oracle::kkt(ts, sol, 2.0);
    worst_box = std::max(worst_box, r.box_violation);
    worst_eq = std::max(worst_eq, r.equality_violation);
    worst_gap = std::max(worst_gap, r.gap);
  }
  ok = ok && worst_box <= 1e-6 && worst_eq <= 1e-6 && worst_gap <= 1e-6;
  notes.push_back(strf("KKT box %.1e eq %.1e gap %.1e", worst_box, worst_eq, worst_gap));

  const auto clusters = oracle::two_clusters(400, 5);
  const Model f1 = train_rf(clusters, 77);
  const Model f2 = train_rf(clusters, 77);
  bool same = true;
  std::size_t right = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const double a = predict_row(f1, clusters.features.row(i));
    same = same && a == predict_row(f2, clusters.features.row(i));
    right += (a > 0.5) == (clusters.labels[i] == 1);
  }
  const double acc = static_cast<double>(right) / static_cast<double>(clusters.size());
  ok = ok && same && acc >= 0.95;
  notes.push_back(strf("RF deterministic %s, train accuracy %.3f", same ? "yes" : "no", acc));

  std::size_t roc_bad = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 900);
    std::vector<double> conf(200);
    std::vector<Label> labels(200);
    for (std::size_t i = 0; i < conf.size(); ++i) {
      labels[i] = rng.uniform() < 0.5 ? Label::Target : Label::NonTarget;
      conf[i] = std::round(rng.normal() * 10.0) / 10.0;
    }
    const auto base = roc(conf, labels, 30.0).points;
    for (const auto& g : std::vector<std::function<double(double)>>{
             [](double v) { return std::exp(v); }, [](double v) { return v * v * v; },
             [](double v) { return 3.0 * v - 7.0; }}) {
      std::vector<double> t(conf);
      for (double& v : t) v = g(v);
      roc_bad += !(roc(t, labels, 30.0).points == base);
    }
  }
  ok = ok && roc_bad == 0;
  notes.push_back(strf("ROC changed under %zu/150 monotone transforms", roc_bad));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

Outcome down_depth_count() {
  const auto idx = sample_down_depth(342, 4, kPatchHalf);
  const auto& ps = registry_entry(11).train.nontarget;
  const auto via_spec = sample_down_depth(342, ps.count, kPatchHalf);
  return {idx.size() == 82 && via_spec.size() == 82,
          strf("T=342 margin %d stride 4: %zu patches (first %d, last %d)", kPatchHalf, idx.size(), idx.front(),
              idx.back())};
}

struct Directional {
  Outcome a, b, c, d;
};

Directional directional(const app::AppConfig& cfg) {
  const std::vector<std::string> names = {"fig4", "fig6", "fig7", "fig8"};
  const auto rows = run_experiments(cfg.experiment, names);
  Directional out;

  // (a) PatchSelect against every other strategy per feature/classifier
  {
    std::map<std::pair<int, int>, std::map<int, double>> means;
    std::map<std::pair<int, int>, std::map<int, int>> counts;
    for (const auto& r : rows) {
      if (r.experiment != "fig4") continue;
      const std::pair<int, int> combo{static_cast<int>(r.feature), static_cast<int>(r.classifier)};
      means[combo][r.strategy] += r.pauc;
      ++counts[combo][r.strategy];
    }
    int wins = 0;
    std::string detail;
    for (auto& [combo, m] : means) {
      for (auto& [s, v] : m) v /= counts[combo][s];
      double best_other = -1.0;
      int best_s = 0;
      for (const auto& [s, v] : m) {
        if (s != 11 && v > best_other) best_other = v, best_s = s;
      }
      const bool win = m[11] >= best_other;
      wins += win;
      detail += strf("%s%s+%s %.3f vs S%d %.3f", detail.empty() ? "" : "; ",
                    std::string(to_string(static_cast<FeatureKind>(combo.first))).c_str(),
                    std::string(to_string(static_cast<ClassifierKind>(combo.second))).c_str(), m[11], best_s,
                    best_other);
    }
    out.a = {wins >= 5 && means.size() == 6, strf("PatchSelect best in %d/%zu combos: ", wins, means.size()) + detail};
  }

  const auto curve = [&](const std::string& experiment, const std::string& panel, const std::string& ordering) {
    std::vector<double> sum(static_cast<std::size_t>(cfg.experiment.max_l) + 1, 0.0);
    std::vector<int> n(sum.size(), 0);
    for (const auto& r : rows) {
      if (r.experiment != experiment || r.ordering != ordering) continue;
      if (!panel.empty() && r.panel != panel) continue;
      sum[static_cast<std::size_t>(r.l)] += r.pauc;
      ++n[static_cast<std::size_t>(r.l)];
    }
    for (std::size_t l = 1; l < sum.size(); ++l) sum[l] /= n[l];
    return sum;
  };

  // (b) DS >= En for L in 6..12
  {
    const auto ds = curve("fig6", "", "DS");
    const auto en = curve("fig6", "", "En");
    bool ok = true;
    double margin = 1e9;
    for (int l = 6; l <= std::min(12, cfg.experiment.max_l); ++l) {
      ok = ok && ds[static_cast<std::size_t>(l)] >= en[static_cast<std::size_t>(l)];
      margin = std::min(margin, ds[static_cast<std::size_t>(l)] - en[static_cast<std::size_t>(l)]);
    }
    out.b = {ok, strf("smallest DS-En margin over L=6..12: %+.4f (DS %.3f, En %.3f at L=12)", margin, ds[12], en[12])};
  }

  // (c) down-depth non-target training against the other samplers
  {
    const auto dd = curve("fig7", "downdepth4", "DS");
    const auto te = curve("fig7", "topenergy", "DS");
    const auto r5 = curve("fig7", "regular5", "DS");
    std::string failing;
    double margin = 1e9;
    for (int l = 1; l <= cfg.experiment.max_l; ++l) {
      const auto i = static_cast<std::size_t>(l);
      const double m = dd[i] - std::max(te[i], r5[i]);
      margin = std::min(margin, m);
      if (m < 0) failing += (failing.empty() ? "" : ",") + std::to_string(l);
    }
    std::string detail = strf("smallest margin %+.4f", margin);
    detail += failing.empty() ? "" : "; DownDepth below another sampler at L=" + failing;
    std::string dds, tes, r5s;
    for (int l = 1; l <= cfg.experiment.max_l; ++l) {
      const auto i = static_cast<std::size_t>(l);
      dds += strf(" %.3f", dd[i]);
      tes += strf(" %.3f", te[i]);
      r5s += strf(" %.3f", r5[i]);
    }
    detail += "; by L=1.. downdepth" + dds + " | topenergy" + tes + " | regular5" + r5s;
    out.c = {failing.empty(), detail};
  }

  // (d) target K at PatchSelect's L
  {
    const int l = std::min(12, cfg.experiment.max_l);
    std::map<int, std::pair<double, int>> by_k;
    for (const auto& r : rows) {
      if (r.experiment != "fig8" || r.l != l) continue;
      by_k[r.target_k].first += r.pauc;
      ++by_k[r.target_k].second;
    }
    int best_k = 0;
    double best = -1.0;
    std::string detail;
    for (auto& [k, acc] : by_k) {
      const double v = acc.first / acc.second;
      if (v > best) best = v, best_k = k;
      detail += strf("%sK=%d %.4f", detail.empty() ? "" : " ", k, v);
    }
    const double k4 = by_k.count(4) ? by_k[4].first / by_k[4].second : -1.0;
    out.d = {(best_k == 3 || best_k == 4) && best - k4 < 0.007,
             strf("best K=%d, K4 gap %.4f: ", best_k, best - k4) + detail};
  }
  return out;
}

Outcome end_to_end_determinism() {
  std::istringstream in(
      "[scene]\ndowntrack_samples = 500\nn_targets = 3\nn_clutter = 2\nn_scatterers = 8\n"
      "[benchmark]\nlanes = 2\nruns = 2\n[eval]\nseeds = 3, 4\n[forest]\nn_trees = 20\n");
  const app::AppConfig cfg = app::parse_config(in);
  testsupport::TempDir tmp("acceptance");
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  bool ok = true;
  std::size_t bytes = 0;
  for (const char* experiment : {"fig4", "fig7"}) {
    app::cmd_run(cfg, experiment, tmp.path() / "a", false);
    app::cmd_run(cfg, experiment, tmp.path() / "b", false);
    const auto a = slurp(tmp.path() / "a" / "results.csv");
    ok = ok && !a.empty() && a == slurp(tmp.path() / "b" / "results.csv");
    bytes += a.size();
  }
  return {ok, strf("fig4 and fig7 run twice: %s (%zu bytes)", ok ? "byte-identical" : "DIFFERENT", bytes)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"acceptance criteria"};
  bool quick = false;
  int jobs = 0;
  std::string config = PATCHSELECT_SOURCE_DIR "/configs/benchmark.ini";
  cli.add_flag("--quick", quick, "skip the directional study");
  cli.add_option("--config", config, "benchmark configuration")->check(CLI::ExistingFile);
  cli.add_option("--jobs", jobs, "worker threads");
  CLI11_PARSE(cli, argc, argv);
  parallel::set_num_threads(jobs);
  spdlog::set_level(spdlog::level::warn);

  int failed = 0;
  const auto report = [&](const char* name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s  %-28s %s  [%.2fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), s);
    std::fflush(stdout);
  };

  report("aggregate-family", eq1_family);
  report("msek-oracle", msek_oracle);
  report("pauc-oracle", pauc_oracle);
  report("fold-integrity", fold_integrity);
  report("registry-fidelity", registry_fidelity);
  report("classifier-sanity", classifier_sanity);
  report("down-depth-count", down_depth_count);

  if (quick) {
    std::printf("SKIP  directional-(a..d)            --quick\n");
  } else {
    Directional d;
    bool ran = false;
    report("directional-run", [&] {
      const app::AppConfig cfg = app::load_config(config);
      d = directional(cfg);
      ran = true;
      return Outcome{true, strf("config %s, hash %s, %zu seeds", config.c_str(), app::config_hash(cfg).c_str(),
                               cfg.experiment.seeds.size())};
    });
    if (ran) {
      report("directional-a-patchselect", [&] { return d.a; });
      report("directional-b-ds-vs-en", [&] { return d.b; });
      report("directional-c-down-depth", [&] { return d.c; });
      report("directional-d-target-k", [&] { return d.d; });
    }
  }
  report("end-to-end-determinism", end_to_end_determinism);

  std::printf("%d criterion line(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
