#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "app.hpp"
#include "patchselect/parallel.hpp"

using namespace patchselect;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool force = false;
  bool svg = false;
  std::string experiment;
  std::string csv;
};

app::AppConfig effective_config(const Options& o) {
  app::AppConfig cfg = o.config.empty() ? app::AppConfig{} : app::load_config(o.config);
  if (o.seed) cfg.experiment.seeds = {*o.seed};
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.experiment.validate();
  return cfg;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("patchselect");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PATCHSELECT_LOG")) spdlog::cfg::helpers::load_levels(env);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App cli{"Keypoint utilization strategies for GPR buried-threat detection on synthetic B-scans"};
  cli.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides [output] dir)");
    sub->add_option("--seed", o.seed, "run this single seed instead of the configured list");
    sub->add_option("--jobs", o.jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  };

  auto* gen = cli.add_subcommand("generate", "render the synthetic lanes of one seed to disk");
  common(gen);
  gen->add_flag("--force", o.force, "overwrite a non-empty output directory");

  auto* pre = cli.add_subcommand("prescreen", "prescreen and label a generated scene directory");
  common(pre);
  pre->add_flag("--force", o.force, "overwrite an existing alarms.csv");

  auto* run = cli.add_subcommand("run", "run one experiment and write results.csv");
  common(run);
  run->add_option("experiment", o.experiment, "fig4 | fig5 | fig6 | fig7 | fig8 | single")->required();
  run->add_flag("--svg", o.svg, "also write results.svg");

  auto* rep = cli.add_subcommand("report", "rank strategies from a results.csv");
  rep->add_option("csv", o.csv, "results file")->required()->check(CLI::ExistingFile);
  std::string svg_path;
  rep->add_option("--svg", svg_path, "write a chart to this path");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kOk : app::kUsage;
  }

  try {
    parallel::set_num_threads(o.jobs);
    if (*gen) {
      const auto cfg = effective_config(o);
      const std::uint64_t seed = o.seed.value_or(cfg.experiment.seeds.front());
      const auto s = app::cmd_generate(cfg, cfg.output_dir, seed, o.force);
      std::cout << "scans " << s.scans << "  targets " << s.targets << "  clutter " << s.clutter << "  scatterers "
                << s.scatterers << "  -> " << cfg.output_dir << '\n';
    } else if (*pre) {
      const auto cfg = effective_config(o);
      const auto alarms = app::cmd_prescreen(cfg, cfg.output_dir, o.force);
      std::size_t targets = 0;
      for (const auto& a : alarms) targets += a.label == Label::Target;
      std::cout << "alarms " << alarms.size() << "  targets " << targets << "  nontargets " << alarms.size() - targets
                << '\n';
    } else if (*run) {
      if (!app::is_run_experiment(o.experiment)) {
        throw app::UsageError("unknown experiment '" + o.experiment + "' (fig4, fig5, fig6, fig7, fig8, single)");
      }
      const auto cfg = effective_config(o);
      const auto rows = app::cmd_run(cfg, o.experiment, cfg.output_dir, o.svg);
      std::cout << rows.size() << " rows -> " << (std::filesystem::path(cfg.output_dir) / "results.csv").string()
                << '\n';
    } else if (*rep) {
      std::optional<std::filesystem::path> svg;
      if (!svg_path.empty()) svg = svg_path;
      app::cmd_report(o.csv, std::cout, svg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code_for(e);
  }
  return app::kOk;
}
