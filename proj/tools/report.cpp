#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <istream>
#include <set>
#include <sstream>

#include "app.hpp"

namespace patchselect::app {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T number(const std::string& s, const char* what, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("results line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows, const std::string& hash,
                       std::span<const std::uint64_t> seeds) {
  out << "# patchselect results v1\n# config_hash=" << hash << "\n# seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? ";" : "") << seeds[i];
  out << '\n' << kResultsHeader << '\n';
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.seed << ',' << r.strategy << ',' << r.strategy_text << ','
        << to_string(r.feature) << ',' << to_string(r.classifier) << ',' << r.panel << ',' << r.ordering << ','
        << r.l << ',' << r.target_k << ',' << fmt(r.far2) << ',' << fmt(r.pauc) << ',' << hash << '\n';
  }
}

ResultsFile read_results_csv(std::istream& in) {
  ResultsFile file;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::set<std::string> hashes;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    if (!header) {
      if (line.back() == '\r') line.pop_back();
      if (line != kResultsHeader) throw FormatError("results CSV header mismatch");
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 13) throw FormatError("results line " + std::to_string(line_no) + " has " +
                                          std::to_string(f.size()) + " fields");
    ResultRow r;
    r.experiment = f[0];
    r.seed = number<std::uint64_t>(f[1], "seed", line_no);
    r.strategy = number<int>(f[2], "strategy", line_no);
    r.strategy_text = f[3];
    try {
      r.feature = parse_feature_kind(f[4]);
      r.classifier = parse_classifier_kind(f[5]);
    } catch (const ConfigError& e) {
      throw FormatError("results line " + std::to_string(line_no) + ": " + e.what());
    }
    r.panel = f[6];
    r.ordering = f[7];
    r.l = number<int>(f[8], "l", line_no);
    r.target_k = number<int>(f[9], "target_k", line_no);
    r.far2 = number<double>(f[10], "far2", line_no);
    r.pauc = number<double>(f[11], "pauc", line_no);
    hashes.insert(f[12]);
    file.rows.push_back(std::move(r));
  }
  if (!header) throw FormatError("results CSV has no header");
  if (file.rows.empty()) throw FormatError("results CSV has no data rows");
  if (hashes.size() != 1) throw FormatError("results CSV mixes rows from " + std::to_string(hashes.size()) + " configs");
  file.config_hash = *hashes.begin();
  return file;
}

std::vector<int> rank_descending(std::span<const double> values) {
  std::vector<int> rank(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int better = 0;
    for (double v : values) better += v > values[i];
    rank[i] = better + 1;
  }
  return rank;
}

Report build_report(const ResultsFile& results) {
  Report report;
  report.config_hash = results.config_hash;
  const auto means = mean_over_seeds(results.rows);

  // strategy rankings per (experiment, feature, classifier, far2)
  std::map<std::tuple<std::string, FeatureKind, ClassifierKind, double>, RankingGroup> groups;
  // sensitivity curves: (experiment, panel, ordering) -> L -> per-K means
  std::map<std::tuple<std::string, std::string, std::string>, std::map<int, std::vector<double>>> curves;
  for (const auto& [key, value] : means) {
    if (key.strategy != 0) {
      auto& g = groups[{key.experiment, key.feature, key.classifier, key.far2}];
      g.experiment = key.experiment;
      g.feature = key.feature;
      g.classifier = key.classifier;
      g.far2 = key.far2;
      g.strategies.push_back(key.strategy);
      g.mean_pauc.push_back(value);
    } else {
      curves[{key.experiment, key.panel, key.ordering}][key.l].push_back(value);
    }
  }

  std::map<int, std::pair<double, int>> rank_sum;
  for (auto& [key, g] : groups) {
    // the map orders by strategy within a group already
    g.rank = rank_descending(g.mean_pauc);
    for (std::size_t i = 0; i < g.strategies.size(); ++i) {
      auto& [sum, count] = rank_sum[g.strategies[i]];
      sum += g.rank[i];
      ++count;
    }
    report.groups.push_back(std::move(g));
  }
  for (const auto& [s, v] : rank_sum) report.average_rank[s] = v.first / v.second;

  for (const auto& [key, by_l] : curves) {
    SensitivityCurve c;
    std::tie(c.experiment, c.panel, c.ordering) = key;
    for (const auto& [l, values] : by_l) {
      double sum = 0.0;
      for (double v : values) sum += v;
      c.l.push_back(l);
      c.mean_pauc.push_back(sum / static_cast<double>(values.size()));
      c.min_pauc.push_back(*std::min_element(values.begin(), values.end()));
      c.max_pauc.push_back(*std::max_element(values.begin(), values.end()));
    }
    report.curves.push_back(std::move(c));
  }
  return report;
}

void print_report(std::ostream& out, const Report& report) {
  out << "config " << report.config_hash << '\n';
  out << std::fixed << std::setprecision(4);
  for (const RankingGroup& g : report.groups) {
    out << '\n'
        << g.experiment << "  " << to_string(g.feature) << '+' << to_string(g.classifier) << "  far2=" << g.far2 << '\n';
    std::vector<std::size_t> order(g.strategies.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g.rank[a] < g.rank[b]; });
    for (std::size_t i : order) {
      out << "  " << std::setw(3) << g.rank[i] << "  S" << std::left << std::setw(4) << g.strategies[i]
          << std::right << g.mean_pauc[i] << '\n';
    }
  }
  if (!report.average_rank.empty()) {
    out << "\naverage rank\n";
    for (const auto& [s, r] : report.average_rank) out << "  S" << std::left << std::setw(4) << s << std::right << r << '\n';
  }
  for (const SensitivityCurve& c : report.curves) {
    out << '\n' << c.experiment << "  " << c.panel << "  " << c.ordering << "\n    L  mean    min     max\n";
    for (std::size_t i = 0; i < c.l.size(); ++i) {
      out << "  " << std::setw(3) << c.l[i] << "  " << c.mean_pauc[i] << "  " << c.min_pauc[i] << "  "
          << c.max_pauc[i] << '\n';
    }
  }
  out.unsetf(std::ios::floatfield);
}

namespace {

struct Svg {
  std::ostringstream body;
  double width = 0, height = 0;

  void text(double x, double y, const std::string& s, const char* anchor = "start", int size = 11) {
    body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor
         << "\">" << s << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\"" << fill
         << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, double w = 1.0) {
    body << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\"" << stroke
         << "\" stroke-width=\"" << w << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
    body << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
    body << "\"/>\n";
  }
  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\">\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"};

// One panel of axes with pAUC in [0, 1] on y.
void axes(Svg& svg, double x0, double y0, double w, double h, const std::string& title) {
  svg.line(x0, y0 + h, x0 + w, y0 + h, "#333");
  svg.line(x0, y0, x0, y0 + h, "#333");
  for (int k = 0; k <= 4; ++k) {
    const double y = y0 + h - h * k / 4.0;
    svg.line(x0 - 3, y, x0, y, "#333");
    std::ostringstream lbl;
    lbl << std::setprecision(2) << k / 4.0;
    svg.text(x0 - 5, y + 4, lbl.str(), "end", 9);
  }
  svg.text(x0 + w / 2, y0 - 6, title, "middle", 12);
}

}  // namespace

std::string render_svg(const Report& report) {
  const double panel_w = 420, panel_h = 180, gap = 60, left = 50;
  const std::size_t panels = report.groups.size() + report.curves.size();
  Svg svg;
  svg.width = left + panel_w + 140;
  svg.height = 30 + static_cast<double>(std::max<std::size_t>(panels, 1)) * (panel_h + gap);
  svg.text(10, 16, "config " + report.config_hash, "start", 10);

  double y0 = 50;
  for (const RankingGroup& g : report.groups) {
    std::ostringstream title;
    title << g.experiment << "  " << to_string(g.feature) << '+' << to_string(g.classifier) << "  far2=" << g.far2;
    axes(svg, left, y0, panel_w, panel_h, title.str());
    const double bw = panel_w / static_cast<double>(g.strategies.size());
    for (std::size_t i = 0; i < g.strategies.size(); ++i) {
      const double v = std::clamp(g.mean_pauc[i], 0.0, 1.0);
      const double x = left + bw * static_cast<double>(i);
      svg.rect(x + 2, y0 + panel_h * (1 - v), bw - 4, panel_h * v, g.rank[i] == 1 ? "#e15759" : "#4e79a7");
      svg.text(x + bw / 2, y0 + panel_h + 12, "S" + std::to_string(g.strategies[i]), "middle", 9);
    }
    y0 += panel_h + gap;
  }

  // sensitivity curves of one experiment share a panel
  std::map<std::string, std::vector<const SensitivityCurve*>> by_experiment;
  for (const SensitivityCurve& c : report.curves) by_experiment[c.experiment].push_back(&c);
  for (const auto& [experiment, curves] : by_experiment) {
    axes(svg, left, y0, panel_w, panel_h, experiment + "  pAUC vs L");
    int max_l = 1;
    for (const auto* c : curves) max_l = std::max(max_l, c->l.back());
    const auto px = [&](int l) { return left + panel_w * (l - 1) / std::max(1.0, max_l - 1.0); };
    for (int l = 1; l <= max_l; ++l) svg.text(px(l), y0 + panel_h + 12, std::to_string(l), "middle", 9);
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto* c = curves[k];
      const char* color = kPalette[k % std::size(kPalette)];
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < c->l.size(); ++i) {
        const double x = px(c->l[i]);
        const auto py = [&](double v) { return y0 + panel_h * (1 - std::clamp(v, 0.0, 1.0)); };
        pts.emplace_back(x, py(c->mean_pauc[i]));
        svg.line(x, py(c->min_pauc[i]), x, py(c->max_pauc[i]), color, 0.8);
      }
      svg.polyline(pts, color);
      svg.text(left + panel_w + 10, y0 + 14 * static_cast<double>(k + 1), c->panel + " " + c->ordering, "start", 10);
      svg.rect(left + panel_w + 2, y0 + 14 * static_cast<double>(k + 1) - 7, 6, 6, color);
    }
    y0 += panel_h + gap;
  }
  svg.height = y0;
  return svg.str();
}

}  // namespace patchselect::app
