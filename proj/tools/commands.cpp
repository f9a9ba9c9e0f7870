#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "patchselect/io.hpp"
#include "patchselect/rng.hpp"

namespace patchselect::app {
namespace fs = std::filesystem;

namespace {

void prepare_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir, ec) && !force) {
      throw IoError(dir.string() + " is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string scan_name(int lane, int run) {
  return "lane" + std::to_string(lane) + "_run" + std::to_string(run) + ".gprb";
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const FormatError*>(&e)) return kFormat;
  if (dynamic_cast<const Error*>(&e)) return kData;
  return kFailure;
}

GenerateSummary cmd_generate(const AppConfig& cfg, const fs::path& dir, std::uint64_t seed, bool force) {
  const BenchmarkConfig& bench = cfg.experiment.bench;
  bench.validate();
  prepare_dir(dir, force);
  const std::string hash = config_hash(cfg);

  GenerateSummary summary;
  GroundTruth all;
  all.lane_area_m2 = bench.scene.lane_area_m2();
  std::ostringstream files;
  for (int lane = 0; lane < bench.lanes; ++lane) {
    const LaneLayout layout = generate_layout(bench.scene, static_cast<LaneId>(lane), seed);
    for (const auto& o : layout.objects) {
      if (o.is_target) ++summary.targets;
    }
    summary.clutter += static_cast<std::size_t>(bench.scene.n_clutter);
    summary.scatterers += static_cast<std::size_t>(bench.scene.n_scatterers);
    const GroundTruth truth = ground_truth(bench.scene, layout);
    all.objects.insert(all.objects.end(), truth.objects.begin(), truth.objects.end());
    for (int run = 0; run < bench.runs; ++run) {
      const std::string name = scan_name(lane, run);
      io::save_bscan(render_run(bench.scene, layout, static_cast<RunId>(run), seed), dir / name);
      files << name << '\n';
      ++summary.scans;
      spdlog::debug("wrote {}", name);
    }
  }

  auto truth_out = open_out(dir / "truth.csv");
  truth_out << "# config_hash=" << hash << '\n';
  io::write_truth_csv(truth_out, all);
  finish(truth_out, dir / "truth.csv");

  auto manifest = open_out(dir / "manifest.txt");
  manifest << "# config_hash=" << hash << "\n# seed=" << seed << '\n' << files.str();
  finish(manifest, dir / "manifest.txt");

  auto config = open_out(dir / "config.ini");
  config << "# config_hash=" << hash << '\n' << canonical_text(cfg);
  finish(config, dir / "config.ini");
  return summary;
}

std::vector<Alarm> cmd_prescreen(const AppConfig& cfg, const fs::path& dir, bool force) {
  const BenchmarkConfig& bench = cfg.experiment.bench;
  bench.validate();
  const fs::path out_path = dir / "alarms.csv";
  if (fs::exists(out_path) && !force) throw IoError(out_path.string() + " exists; pass --force to overwrite");

  std::ifstream truth_in(dir / "truth.csv");
  if (!truth_in) throw IoError("cannot open " + (dir / "truth.csv").string());
  const GroundTruth truth = io::read_truth_csv(truth_in);

  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.txt").string());
  std::vector<Alarm> alarms;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    const BScan scan = io::load_bscan(dir / line);
    const auto found = prescreen(scan, bench.prescreener);
    const auto labeled = label_alarms(found, truth, bench.halo_m);
    spdlog::debug("{}: {} alarms", line, labeled.size());
    alarms.insert(alarms.end(), labeled.begin(), labeled.end());
  }
  for (std::size_t i = 0; i < alarms.size(); ++i) alarms[i].id = static_cast<AlarmId>(i);

  auto out = open_out(out_path);
  out << "# config_hash=" << config_hash(cfg) << '\n';
  io::write_alarms_csv(out, alarms);
  finish(out, out_path);
  return alarms;
}

bool is_run_experiment(std::string_view name) { return name == "single" || is_known_experiment(name); }

std::vector<ResultRow> run_single(const ExperimentConfig& cfg, const StrategySpec& spec) {
  cfg.validate();
  spec.validate();
  std::vector<std::pair<FeatureKind, ClassifierKind>> combos;
  for (FeatureKind f : cfg.features) {
    for (ClassifierKind c : cfg.classifiers) combos.emplace_back(f, c);
  }
  std::vector<ResultRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset data = build_benchmark(cfg.bench, seed);
    const FoldPlan plan =
        cluster_and_fold(data.alarms, cfg.cv.cluster_distance_m, cfg.cv.n_folds, derive_seed(seed, cfg.cv.fold_seed));
    std::vector<Label> labels;
    for (const Alarm& a : data.alarms) labels.push_back(a.label);

    std::vector<double> values(combos.size());
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(combos.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      try {
        const auto [feature, classifier] = combos[static_cast<std::size_t>(k)];
        ClassifierConfig cc{classifier, cfg.svm, cfg.forest};
        const auto conf =
            run_cv(data, spec, feature, cc, plan, cfg.msek, derive_seed(seed, cfg.cv.classifier_seed));
        values[static_cast<std::size_t>(k)] = pauc(roc(conf, labels, data.total_area_m2), cfg.far2);
      } catch (...) {
#pragma omp critical(patchselect_single_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t k = 0; k < combos.size(); ++k) {
      ResultRow r;
      r.experiment = "single";
      r.seed = seed;
      r.strategy = spec.index;
      r.strategy_text = to_string(spec);
      r.feature = combos[k].first;
      r.classifier = combos[k].second;
      r.ordering = std::string(to_string(spec.test.ordering));
      r.l = spec.test.selector.kind == SelectorKind::All ? 0 : spec.test.selector.value;
      r.target_k = spec.train.target_keypoints;
      r.far2 = cfg.far2;
      r.pauc = values[k];
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<ResultRow> cmd_run(const AppConfig& cfg, std::string_view experiment, const fs::path& dir, bool svg) {
  if (!is_run_experiment(experiment)) {
    throw UsageError("unknown experiment '" + std::string(experiment) + "' (fig4, fig5, fig6, fig7, fig8, single)");
  }
  cfg.experiment.validate();
  std::vector<ResultRow> rows;
  spdlog::info("running {} over {} seed(s)", experiment, cfg.experiment.seeds.size());
  if (experiment == "single") {
    rows = run_single(cfg.experiment, single_spec(cfg));
  } else {
    const std::vector<std::string> names = {std::string(experiment)};
    rows = run_experiments(cfg.experiment, names);
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string hash = config_hash(cfg);
  const fs::path csv = dir / "results.csv";
  auto out = open_out(csv, std::ios::out | std::ios::binary);
  write_results_csv(out, rows, hash, cfg.experiment.seeds);
  finish(out, csv);
  spdlog::info("wrote {} rows to {}", rows.size(), csv.string());

  if (svg) {
    const Report report = build_report({rows, hash});
    const fs::path svg_path = dir / "results.svg";
    auto s = open_out(svg_path);
    s << render_svg(report);
    finish(s, svg_path);
  }
  return rows;
}

Report cmd_report(const fs::path& csv, std::ostream& out, const std::optional<fs::path>& svg) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  const Report report = build_report(read_results_csv(in));
  print_report(out, report);
  if (svg) {
    auto s = open_out(*svg);
    s << render_svg(report);
    finish(s, *svg);
  }
  return report;
}

}  // namespace patchselect::app
