#pragma once

// Grid sweeps over beta, F or nu: one run directory per (value, seed), an
// aggregate CSV and one learning-curve SVG per value.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "parlab/runner.hpp"

namespace parlab {

enum class SweepAxis { Beta, Interval, Nu };

inline SweepAxis parse_axis(std::string_view s) {
  if (s == "beta") return SweepAxis::Beta;
  if (s == "F" || s == "interval") return SweepAxis::Interval;
  if (s == "nu") return SweepAxis::Nu;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected beta, F or nu)");
}

inline std::string_view axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Beta: return "beta";
    case SweepAxis::Interval: return "F";
    case SweepAxis::Nu: return "nu";
  }
  return "?";
}

inline std::vector<double> default_axis_values(SweepAxis a) {
  switch (a) {
    case SweepAxis::Beta: return {0.0, 0.1, 0.5, 1.0, 2.0};
    case SweepAxis::Interval: return {2, 5, 10, 20};
    case SweepAxis::Nu: return {1.0, 2.5, 5.0, 10.0};
  }
  return {};
}

struct SweepCell {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  bool ok = false;
  std::string error;
  std::vector<MetricsRow> metrics;
};

struct SweepAggregate {
  double value = 0.0;
  int runs = 0;
  int failures = 0;
  double final_mean = 0.0;  // over seeds of each run's last eval mean
  double final_std = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepAggregate> aggregate;
};

inline std::string value_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Runs every (value, seed) pair. A failing cell is recorded and the sweep
/// moves on. The nu axis trains offline on `dataset`; the others train online
/// unless the template names a dataset.
inline SweepResult run_sweep(const TrainConfig& base, SweepAxis axis, const std::vector<double>& values,
                             const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                             const OfflineDataset* dataset = nullptr) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  const bool offline = axis == SweepAxis::Nu || !base.dataset.empty();
  if (offline && !dataset) throw ConfigError("offline sweep needs a loaded dataset");
  SweepResult res;
  for (double v : values) {
    SweepAggregate agg{v, 0, 0, 0.0, 0.0};
    std::vector<double> finals;
    std::vector<Series> curves;
    for (std::uint64_t s : seeds) {
      SweepCell cell{v, s, out / (std::string(axis_name(axis)) + "=" + value_label(v)) / ("seed" + std::to_string(s)),
                     false, {}, {}};
      TrainConfig c = base;
      c.seed = s;
      c.out_dir = cell.dir.string();
      try {
        switch (axis) {
          case SweepAxis::Beta: c.beta = v; break;
          case SweepAxis::Interval: c.interval = static_cast<int>(v); break;
          case SweepAxis::Nu: c.nu = v; break;
        }
        const RunResult r = offline ? run_offline(c, *dataset) : run_online(c);
        cell.metrics = r.metrics;
        cell.ok = true;
        if (!r.metrics.empty()) finals.push_back(r.metrics.back().eval_mean);
      } catch (const std::exception& e) {
        cell.error = e.what();
        ++agg.failures;
        std::filesystem::create_directories(cell.dir);
        write_text(cell.dir / "error.txt", cell.error + "\n");
      }
      ++agg.runs;
      res.cells.push_back(cell);
    }
    const EvalResult fin = summarize_returns(finals);
    agg.final_mean = fin.mean;
    agg.final_std = fin.std;
    res.aggregate.push_back(agg);

    // Mean and std across the seeds that finished, row by row.
    std::vector<const SweepCell*> done;
    for (const SweepCell& c : res.cells)
      if (c.value == v && c.ok && !c.metrics.empty()) done.push_back(&c);
    Series s{std::string(axis_name(axis)) + "=" + value_label(v), {}, {}, {}};
    if (!done.empty()) {
      std::size_t rows = done.front()->metrics.size();
      for (const SweepCell* c : done) rows = std::min(rows, c->metrics.size());
      for (std::size_t i = 0; i < rows; ++i) {
        std::vector<double> at;
        for (const SweepCell* c : done) at.push_back(c->metrics[i].eval_mean);
        const EvalResult e = summarize_returns(at);
        s.x.push_back(static_cast<double>(done.front()->metrics[i].source_step));
        s.mean.push_back(e.mean);
        s.std.push_back(e.std);
      }
    }
    write_text(out / ("curve_" + std::string(axis_name(axis)) + "=" + value_label(v) + ".svg"),
               svg_plot({s}, base.method + " " + std::string(axis_name(axis)) + "=" + value_label(v) + " on " + base.task,
                        offline ? "gradient steps" : "source steps", "target return"));
  }
  std::ostringstream csv;
  csv << std::string(axis_name(axis)) << ",runs,failures,final_mean,final_std\n";
  for (const SweepAggregate& a : res.aggregate)
    csv << value_label(a.value) << ',' << a.runs << ',' << a.failures << ',' << detail::g17(a.final_mean) << ','
        << detail::g17(a.final_std) << '\n';
  write_text(out / "aggregate.csv", csv.str());
  return res;
}

}  // namespace parlab
