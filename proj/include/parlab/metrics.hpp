#pragma once

// metrics.csv rows and a small dependency-free SVG line plot.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "parlab/errors.hpp"

namespace parlab {

struct MetricsRow {
  long source_step = 0;
  long target_step = 0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double penalty = 0.0;       // mean source-batch penalty (PAR) or delta_r (DARC) since the previous row
  double encoder_loss = 0.0;  // encoder loss, or summed classifier losses for DARC
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

/// Column order is part of the format; bump the version when it changes.
inline constexpr int kMetricsFormatVersion = 1;
inline constexpr const char* kMetricsHeader =
    "source_step,target_step,eval_mean,eval_std,penalty,encoder_loss,critic_loss,actor_objective";

namespace detail {
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows)
    os << r.source_step << ',' << r.target_step << ',' << detail::g17(r.eval_mean) << ',' << detail::g17(r.eval_std)
       << ',' << detail::g17(r.penalty) << ',' << detail::g17(r.encoder_loss) << ',' << detail::g17(r.critic_loss)
       << ',' << detail::g17(r.actor_objective) << '\n';
  return os.str();
}

inline std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) throw DataError("metrics.csv header mismatch");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    MetricsRow r;
    if (!(ls >> r.source_step >> r.target_step >> r.eval_mean >> r.eval_std >> r.penalty >> r.encoder_loss >>
          r.critic_loss >> r.actor_objective))
      throw DataError("malformed metrics.csv row");
    rows.push_back(r);
  }
  return rows;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;  // may be empty
};

/// Line chart with optional +-std bands.
inline std::string svg_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                            const std::string& ylabel) {
  const double W = 640, H = 400, L = 70, R = 160, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double sd = s.std.empty() ? 0.0 : s.std[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.mean[i] - sd);
      y1 = std::max(y1, s.mean[i] + sd);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv
       << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xlabel << "</text>\n"
     << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* c = colors[k % 7];
    if (!s.std.empty() && !s.x.empty()) {
      os << "<polygon fill=\"" << c << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.mean[i] + s.std[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) os << px(s.x[i]) << ',' << py(s.mean[i] - s.std[i]) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
    os << "\"/>\n"
       << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << c << "\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace parlab
