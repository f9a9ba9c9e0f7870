#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "app.hpp"

namespace patchselect::app {
namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    const auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_scalar(std::string_view text, const std::string& where) {
  const std::string s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(where + ": bad value '" + s + "'");
  }
  return v;
}

template <typename T>
std::string format_scalar(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void parse_into(const std::string& s, int& v, const std::string& w) { v = parse_scalar<int>(s, w); }
void parse_into(const std::string& s, double& v, const std::string& w) { v = parse_scalar<double>(s, w); }
void parse_into(const std::string& s, std::uint64_t& v, const std::string& w) { v = parse_scalar<std::uint64_t>(s, w); }
void parse_into(const std::string& s, std::string& v, const std::string&) { v = trim(s); }

// seeds accept ranges: "1-10" or "1,4,7-9"
void parse_into(const std::string& s, std::vector<std::uint64_t>& v, const std::string& w) {
  v.clear();
  for (const auto& item : split_list(s)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      v.push_back(parse_scalar<std::uint64_t>(item, w));
      continue;
    }
    const auto lo = parse_scalar<std::uint64_t>(item.substr(0, dash), w);
    const auto hi = parse_scalar<std::uint64_t>(item.substr(dash + 1), w);
    if (hi < lo || hi - lo > 100000) throw ConfigError(w + ": bad range '" + item + "'");
    for (auto k = lo; k <= hi; ++k) v.push_back(k);
  }
}
void parse_into(const std::string& s, std::vector<int>& v, const std::string& w) {
  v.clear();
  for (const auto& item : split_list(s)) v.push_back(parse_scalar<int>(item, w));
}
void parse_into(const std::string& s, std::vector<double>& v, const std::string& w) {
  v.clear();
  for (const auto& item : split_list(s)) v.push_back(parse_scalar<double>(item, w));
}
void parse_into(const std::string& s, std::vector<FeatureKind>& v, const std::string&) {
  v.clear();
  for (const auto& item : split_list(s)) v.push_back(parse_feature_kind(item));
}
void parse_into(const std::string& s, std::vector<ClassifierKind>& v, const std::string&) {
  v.clear();
  for (const auto& item : split_list(s)) v.push_back(parse_classifier_kind(item));
}

std::string format(int v) { return format_scalar(v); }
std::string format(double v) { return format_scalar(v); }
std::string format(std::uint64_t v) { return format_scalar(v); }
std::string format(const std::string& v) { return v; }
template <typename T>
std::string format(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, FeatureKind> || std::is_same_v<T, ClassifierKind>) {
      out += to_string(v[i]);
    } else {
      out += format(v[i]);
    }
  }
  return out;
}

struct Field {
  std::string section, key;
  std::function<std::string(const AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&)> set;
};

template <typename Access>
Field bind(std::string section, std::string key, Access access) {
  const std::string where = section + "." + key;
  return {std::move(section), std::move(key),
          [access](const AppConfig& c) { return format(access(const_cast<AppConfig&>(c))); },
          [access, where](AppConfig& c, const std::string& v) { parse_into(v, access(c), where); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
#define PS_FIELD(section, key, expr) f.push_back(bind(section, key, [](AppConfig& c) -> auto& { return expr; }))
    PS_FIELD("scene", "time_samples", c.experiment.bench.scene.time_samples);
    PS_FIELD("scene", "downtrack_samples", c.experiment.bench.scene.downtrack_samples);
    PS_FIELD("scene", "downtrack_spacing_m", c.experiment.bench.scene.downtrack_spacing_m);
    PS_FIELD("scene", "n_targets", c.experiment.bench.scene.n_targets);
    PS_FIELD("scene", "n_clutter", c.experiment.bench.scene.n_clutter);
    PS_FIELD("scene", "noise_sigma", c.experiment.bench.scene.noise_sigma);
    PS_FIELD("scene", "attenuation_alpha", c.experiment.bench.scene.attenuation_alpha);
    PS_FIELD("scene", "hyperbola_spread", c.experiment.bench.scene.hyperbola_spread);
    PS_FIELD("scene", "wavelet_width", c.experiment.bench.scene.wavelet_width);
    PS_FIELD("scene", "lane_width_m", c.experiment.bench.scene.lane_width_m);
    PS_FIELD("scene", "ground_band_time", c.experiment.bench.scene.ground_band_time);
    PS_FIELD("scene", "ground_band_amplitude", c.experiment.bench.scene.ground_band_amplitude);
    PS_FIELD("scene", "taper_width", c.experiment.bench.scene.taper_width);
    PS_FIELD("scene", "target_amplitude_min", c.experiment.bench.scene.target_amplitude_min);
    PS_FIELD("scene", "target_amplitude_max", c.experiment.bench.scene.target_amplitude_max);
    PS_FIELD("scene", "clutter_amplitude_min", c.experiment.bench.scene.clutter_amplitude_min);
    PS_FIELD("scene", "clutter_amplitude_max", c.experiment.bench.scene.clutter_amplitude_max);
    PS_FIELD("scene", "depth_min", c.experiment.bench.scene.depth_min);
    PS_FIELD("scene", "depth_max", c.experiment.bench.scene.depth_max);
    PS_FIELD("scene", "target_regions_min", c.experiment.bench.scene.target_regions_min);
    PS_FIELD("scene", "target_regions_max", c.experiment.bench.scene.target_regions_max);
    PS_FIELD("scene", "clutter_regions_min", c.experiment.bench.scene.clutter_regions_min);
    PS_FIELD("scene", "clutter_regions_max", c.experiment.bench.scene.clutter_regions_max);
    PS_FIELD("scene", "clutter_spread_scale_min", c.experiment.bench.scene.clutter_spread_scale_min);
    PS_FIELD("scene", "clutter_spread_scale_max", c.experiment.bench.scene.clutter_spread_scale_max);
    PS_FIELD("scene", "region_gap_min", c.experiment.bench.scene.region_gap_min);
    PS_FIELD("scene", "region_gap_max", c.experiment.bench.scene.region_gap_max);
    PS_FIELD("scene", "n_scatterers", c.experiment.bench.scene.n_scatterers);
    PS_FIELD("scene", "scatterer_amplitude_min", c.experiment.bench.scene.scatterer_amplitude_min);
    PS_FIELD("scene", "scatterer_amplitude_max", c.experiment.bench.scene.scatterer_amplitude_max);
    PS_FIELD("scene", "min_object_spacing_m", c.experiment.bench.scene.min_object_spacing_m);
    PS_FIELD("scene", "lane_start_m", c.experiment.bench.scene.lane_start_m);
    PS_FIELD("scene", "lane_end_margin_m", c.experiment.bench.scene.lane_end_margin_m);
    PS_FIELD("prescreener", "threshold", c.experiment.bench.prescreener.threshold);
    PS_FIELD("prescreener", "background_window", c.experiment.bench.prescreener.background_window);
    PS_FIELD("prescreener", "guard", c.experiment.bench.prescreener.guard);
    PS_FIELD("prescreener", "min_separation_m", c.experiment.bench.prescreener.min_separation_m);
    PS_FIELD("benchmark", "lanes", c.experiment.bench.lanes);
    PS_FIELD("benchmark", "runs", c.experiment.bench.runs);
    PS_FIELD("benchmark", "halo_m", c.experiment.bench.halo_m);
    PS_FIELD("msek", "smooth_window", c.experiment.msek.smooth_window);
    PS_FIELD("msek", "max_keypoints", c.experiment.msek.max_keypoints);
    PS_FIELD("msek", "margin", c.experiment.msek.margin);
    PS_FIELD("eval", "seeds", c.experiment.seeds);
    PS_FIELD("eval", "strategies", c.experiment.strategies);
    PS_FIELD("eval", "features", c.experiment.features);
    PS_FIELD("eval", "classifiers", c.experiment.classifiers);
    PS_FIELD("eval", "far2", c.experiment.far2);
    PS_FIELD("eval", "far2_list", c.experiment.far2_list);
    PS_FIELD("eval", "max_l", c.experiment.max_l);
    PS_FIELD("eval", "max_k", c.experiment.max_k);
    PS_FIELD("eval", "cluster_distance_m", c.experiment.cv.cluster_distance_m);
    PS_FIELD("eval", "n_folds", c.experiment.cv.n_folds);
    PS_FIELD("eval", "fold_seed", c.experiment.cv.fold_seed);
    PS_FIELD("eval", "classifier_seed", c.experiment.cv.classifier_seed);
    PS_FIELD("svm", "c", c.experiment.svm.c);
    PS_FIELD("svm", "gamma", c.experiment.svm.gamma);
    PS_FIELD("svm", "tol", c.experiment.svm.tol);
    PS_FIELD("forest", "n_trees", c.experiment.forest.n_trees);
    PS_FIELD("forest", "mtry", c.experiment.forest.mtry);
    PS_FIELD("single", "strategy", c.single_strategy);
    PS_FIELD("output", "dir", c.output_dir);
#undef PS_FIELD
    return f;
  }();
  return table;
}

}  // namespace

AppConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  AppConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ConfigError("config: unknown key " + section + "." + key);
      it->set(cfg, value.data());
    }
  }
  cfg.experiment.validate();
  single_spec(cfg);
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

std::string canonical_text(const AppConfig& cfg) {
  std::string out, section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const AppConfig& cfg) {
  // where results land is not part of what produced them
  AppConfig c = cfg;
  c.output_dir = AppConfig{}.output_dir;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text(c))));
  return buf;
}

StrategySpec single_spec(const AppConfig& cfg) {
  const std::string& s = cfg.single_strategy;
  if (!s.empty() && s.find('=') == std::string::npos) {
    try {
      return registry_entry(parse_scalar<int>(s, "single.strategy"));
    } catch (const RangeError& e) {
      throw ConfigError(std::string("single.strategy: ") + e.what());
    }
  }
  return parse_strategy(s);
}

}  // namespace patchselect::app
