#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchselect/errors.hpp"
#include "patchselect/eval.hpp"

namespace patchselect::app {

// ---------------------------------------------------------------- config --

struct AppConfig {
  ExperimentConfig experiment;
  std::string single_strategy = "11";  // registry index or canonical strategy text
  std::string output_dir = "out";
};

/// INI file with sections scene, prescreener, benchmark, msek, eval, svm,
/// forest, single, output. Every key is optional; unknown keys are errors.
AppConfig parse_config(std::istream& in);
AppConfig load_config(const std::filesystem::path& path);

/// Every field as "section.key = value", one per line, in a fixed order.
/// parse_config(canonical_text(c)) reproduces c.
std::string canonical_text(const AppConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// 16 hex digits of FNV-1a over canonical_text, ignoring the output directory.
std::string config_hash(const AppConfig& cfg);

/// The strategy named by single_strategy.
StrategySpec single_spec(const AppConfig& cfg);

// --------------------------------------------------------------- results --

inline constexpr std::string_view kResultsHeader =
    "experiment,seed,strategy,strategy_text,feature,classifier,panel,ordering,l,target_k,far2,pauc,config_hash";

struct ResultsFile {
  std::vector<ResultRow> rows;
  std::string config_hash;  // shared by every row
};

/// "# key=value" metadata lines, the header, then one line per row.
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows, const std::string& config_hash,
                       std::span<const std::uint64_t> seeds);

/// FormatError on a malformed file, no data rows, or rows from different configs.
ResultsFile read_results_csv(std::istream& in);

// ---------------------------------------------------------------- report --

/// Competition ranking, highest value first; equal values share the smallest rank.
std::vector<int> rank_descending(std::span<const double> values);

struct RankingGroup {
  std::string experiment;
  FeatureKind feature;
  ClassifierKind classifier;
  double far2;
  std::vector<int> strategies;  // ordered by strategy index
  std::vector<double> mean_pauc;
  std::vector<int> rank;
};

struct SensitivityCurve {
  std::string experiment, panel, ordering;
  std::vector<int> l;
  std::vector<double> mean_pauc;  // mean over seeds and target K
  std::vector<double> min_pauc;   // min / max over target K
  std::vector<double> max_pauc;
};

struct Report {
  std::string config_hash;
  std::vector<RankingGroup> groups;
  std::map<int, double> average_rank;  // strategy -> mean rank over groups
  std::vector<SensitivityCurve> curves;
};

Report build_report(const ResultsFile& results);
void print_report(std::ostream& out, const Report& report);
std::string render_svg(const Report& report);

// -------------------------------------------------------------- commands --

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // unexpected error
  kUsage = 2,        // bad command line or unknown experiment
  kConfig = 3,       // ConfigError
  kIo = 4,           // IoError, refused overwrite
  kFormat = 5,       // FormatError
  kData = 6,         // other library errors (degenerate data, empty class, ...)
};

int exit_code_for(const std::exception& e) noexcept;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct GenerateSummary {
  std::size_t scans = 0, targets = 0, clutter = 0, scatterers = 0;
};

/// Writes lane<L>_run<R>.gprb, truth.csv and manifest.txt for one seed.
/// Refuses a non-empty directory unless force is set.
GenerateSummary cmd_generate(const AppConfig& cfg, const std::filesystem::path& dir, std::uint64_t seed, bool force);

/// Prescreens and labels the scans written by cmd_generate; writes alarms.csv
/// into the same directory. Returns the labeled alarms.
std::vector<Alarm> cmd_prescreen(const AppConfig& cfg, const std::filesystem::path& dir, bool force);

bool is_run_experiment(std::string_view name);

/// Runs one experiment (fig4..fig8 or single) and writes results.csv, plus
/// results.svg when svg is set, into dir. UsageError on an unknown experiment.
std::vector<ResultRow> cmd_run(const AppConfig& cfg, std::string_view experiment, const std::filesystem::path& dir,
                               bool svg);

/// Cross-validated pAUC of one strategy on every configured feature and
/// classifier, evaluated with the reference engine.
std::vector<ResultRow> run_single(const ExperimentConfig& cfg, const StrategySpec& spec);

Report cmd_report(const std::filesystem::path& csv, std::ostream& out, const std::optional<std::filesystem::path>& svg);

}  // namespace patchselect::app
