#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrfa/em.hpp"
#include "mrfa/io.hpp"
#include "mrfa/metrics.hpp"
#include "mrfa/model.hpp"
#include "mrfa/recover.hpp"
#include "mrfa/rng.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Monte Carlo experiment engine: (L, SNR, N, algorithm) grids with seeded,
// trial-level parallel execution, CSV/JSON outputs, and the phase-transition
// line fit. lambda is fixed per grid and sigma^2 derived per cell from
// sigma^2 = lambda / (L * SNR).
// ---------------------------------------------------------------------------

enum class AlgorithmChoice { FM, AM, EMOracle, EMRandom };

inline const char* algorithm_choice_name(AlgorithmChoice a) {
  switch (a) {
    case AlgorithmChoice::FM: return "fm";
    case AlgorithmChoice::AM: return "am";
    case AlgorithmChoice::EMOracle: return "em-oracle";
    case AlgorithmChoice::EMRandom: return "em-random";
  }
  return "?";
}

inline AlgorithmChoice parse_algorithm_choice(const std::string& s) {
  if (s == "fm") return AlgorithmChoice::FM;
  if (s == "am") return AlgorithmChoice::AM;
  if (s == "em-oracle" || s == "em") return AlgorithmChoice::EMOracle;
  if (s == "em-random") return AlgorithmChoice::EMRandom;
  throw Error("unknown algorithm: " + s);
}

struct ExperimentGrid {
  std::vector<long> L_values;
  std::vector<double> snr_values;
  std::vector<long> n_values;
  long trials_per_cell = 25;
  std::vector<AlgorithmChoice> algorithms;
  std::uint64_t master_seed = 0;
  double lambda = 1.0;
  long threads = 1;
  AMConfig am;
  EMConfig em;
  bool deterministic_timing = false;  // record runtime_ms as 0

  void validate() const {
    if (L_values.empty() || snr_values.empty() || n_values.empty() ||
        algorithms.empty())
      throw Error("ExperimentGrid: empty axis");
    if (trials_per_cell < 1) throw Error("ExperimentGrid: trials_per_cell < 1");
  }
};

struct Cell {
  long L;
  double snr;
  long n;
  AlgorithmChoice alg;
  double sigma2(double lambda) const { return lambda / (double(L) * snr); }
};

struct TrialRecord {
  long L;
  double snr;
  long n;
  std::string algorithm;
  long trial;
  std::uint64_t seed;
  double error;
  double runtime_ms;
  std::string flags;
};

struct CellSummary {
  long L;
  double snr;
  long n;
  std::string algorithm;
  double median_error;
  double mean_error;
  double mean_runtime_ms;
  long trials;
};

namespace detail {

inline std::uint64_t cell_seed(const ExperimentGrid& grid, const Cell& cell) {
  std::uint64_t k = derive_seed(grid.master_seed, std::uint64_t(cell.L));
  k = derive_seed(k, std::uint64_t(cell.n));
  k = derive_seed(k, std::bit_cast<std::uint64_t>(cell.snr));
  return derive_seed(k, std::uint64_t(cell.alg));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void parallel_for(long n, long threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  const long workers = std::min(threads, n);
  pool.reserve(std::size_t(workers));
  for (long w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline std::string sanitize_flag(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

}  // namespace detail

/// One Monte Carlo trial. The per-trial seed depends only on
/// (master_seed, cell, trial_index), so a record is reproducible in
/// isolation. Failed recoveries score the worst possible aligned error (2)
/// with the cause preserved in flags.
inline TrialRecord run_trial(const ExperimentGrid& grid, const Cell& cell,
                             long trial_index) {
  const std::uint64_t seed =
      derive_seed(detail::cell_seed(grid, cell), std::uint64_t(trial_index));
  TrialRecord rec{cell.L,      cell.snr, cell.n, algorithm_choice_name(cell.alg),
                  trial_index, seed,     0.0,    0.0,
                  ""};

  Rng rng(seed);
  const Signal signal =
      generate_signal(cell.L, rng, Normalization::unit_power_spectrum);
  ModelParams params;
  params.L = cell.L;
  params.lambda = grid.lambda;
  params.sigma2 = cell.sigma2(grid.lambda);
  const ObservationBatch batch =
      generate_observations(signal, params, cell.n, rng);

  std::vector<std::string> flags;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    RecoveryResult result;
    switch (cell.alg) {
      case AlgorithmChoice::FM:
        result = recover_fm(batch, params.sigma2);
        break;
      case AlgorithmChoice::AM: {
        AMConfig am = grid.am;
        am.init_seed = derive_seed(seed, 0x414d);
        result = recover_am(batch, params.sigma2, am);
        break;
      }
      case AlgorithmChoice::EMOracle:
        result = run_em(batch, EMInit::oracle(signal.theta, grid.lambda),
                        params.sigma2, grid.em)
                     .result;
        break;
      case AlgorithmChoice::EMRandom:
        result = run_em(batch, EMInit::random(derive_seed(seed, 0x454d)),
                        params.sigma2, grid.em)
                     .result;
        break;
    }
    rec.error = align_error(signal.theta, result.theta_tilde).error;
    flags = result.flags;
  } catch (const Error& e) {
    rec.error = 2.0;
    flags.push_back("error:" + std::string(e.what()));
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.runtime_ms =
      grid.deterministic_timing
          ? 0.0
          : std::chrono::duration<double, std::milli>(t1 - t0).count();

  std::string joined;
  for (const auto& f : flags) {
    if (!joined.empty()) joined += ';';
    joined += detail::sanitize_flag(f);
  }
  rec.flags = joined;
  return rec;
}

inline std::vector<Cell> enumerate_cells(const ExperimentGrid& grid) {
  std::vector<Cell> cells;
  for (long L : grid.L_values)
    for (double snr : grid.snr_values)
      for (long n : grid.n_values)
        for (AlgorithmChoice alg : grid.algorithms)
          cells.push_back({L, snr, n, alg});
  return cells;
}

/// Runs one cell with trial-level parallelism; records come back in trial
/// order regardless of thread count.
inline std::vector<TrialRecord> run_cell(const ExperimentGrid& grid, const Cell& cell) {
  std::vector<TrialRecord> records(std::size_t(grid.trials_per_cell));
  detail::parallel_for(grid.trials_per_cell, grid.threads, [&](long t) {
    records[std::size_t(t)] = run_trial(grid, cell, t);
  });
  return records;
}

inline CellSummary summarize_cell(const Cell& cell,
                                  const std::vector<TrialRecord>& records) {
  std::vector<double> errors;
  double err_sum = 0.0, rt_sum = 0.0;
  for (const auto& r : records) {
    errors.push_back(r.error);
    err_sum += r.error;
    rt_sum += r.runtime_ms;
  }
  return {cell.L,
          cell.snr,
          cell.n,
          algorithm_choice_name(cell.alg),
          detail::median(errors),
          err_sum / double(records.size()),
          rt_sum / double(records.size()),
          long(records.size())};
}

inline json to_json(const CellSummary& s) {
  return {{"L", s.L},
          {"snr", s.snr},
          {"n", s.n},
          {"algorithm", s.algorithm},
          {"median_error", s.median_error},
          {"mean_error", s.mean_error},
          {"mean_runtime_ms", s.mean_runtime_ms},
          {"trials", s.trials}};
}

inline void write_trial_csv_header(std::ofstream& out) {
  out << "L,snr,n,algorithm,trial,seed,error,runtime_ms,flags\n";
}

inline void write_trial_csv_row(std::ofstream& out, const TrialRecord& r) {
  out << r.L << ',' << detail::fmt_double(r.snr) << ',' << r.n << ','
      << r.algorithm << ',' << r.trial << ',' << r.seed << ','
      << detail::fmt_double(r.error) << ',' << detail::fmt_double(r.runtime_ms)
      << ',' << r.flags << '\n';
}

inline const char* kHeatmapPlotScript = R"PY(#!/usr/bin/env python3
"""Render heatmaps (one per L x algorithm) from summary.json in this directory."""
import json, math, os, sys

here = os.path.dirname(os.path.abspath(__file__))
cells = json.load(open(os.path.join(here, "summary.json")))
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("matplotlib is required to render the heatmap")

panels = sorted({(c["L"], c["algorithm"]) for c in cells})
for L, alg in panels:
    sub = [c for c in cells if c["L"] == L and c["algorithm"] == alg]
    snrs = sorted({c["snr"] for c in sub})
    ns = sorted({c["n"] for c in sub})
    grid = [[float("nan")] * len(ns) for _ in snrs]
    for c in sub:
        grid[snrs.index(c["snr"])][ns.index(c["n"])] = c["mean_error"]
    fig, ax = plt.subplots()
    im = ax.imshow(grid, origin="lower", aspect="auto", vmin=0, vmax=1,
                   extent=[math.log10(ns[0]), math.log10(ns[-1]),
                           math.log10(snrs[0]), math.log10(snrs[-1])])
    ax.set_xlabel("log10 N")
    ax.set_ylabel("log10 SNR")
    ax.set_title(f"L={L} {alg}")
    fig.colorbar(im, ax=ax, label="mean aligned error")
    out = os.path.join(here, f"heatmap_L{L}_{alg}.png")
    fig.savefig(out, dpi=150)
    print("wrote", out)
)PY";

/// Runs every cell x trial, appending per-trial rows to <out_dir>/trials.csv
/// after each cell completes (partial results survive an interrupted grid),
/// then writes <out_dir>/summary.json and a renderer-agnostic plot script.
inline std::vector<CellSummary> heatmap(const ExperimentGrid& grid,
                                        const std::string& out_dir) {
  grid.validate();
  std::filesystem::create_directories(out_dir);
  std::ofstream trials_out(out_dir + "/trials.csv");
  if (!trials_out) throw Error("heatmap: cannot open " + out_dir + "/trials.csv");
  write_trial_csv_header(trials_out);

  std::vector<CellSummary> summaries;
  for (const Cell& cell : enumerate_cells(grid)) {
    const std::vector<TrialRecord> records = run_cell(grid, cell);
    for (const auto& r : records) write_trial_csv_row(trials_out, r);
    trials_out.flush();
    summaries.push_back(summarize_cell(cell, records));
  }

  json summary = json::array();
  for (const auto& s : summaries) summary.push_back(to_json(s));
  std::ofstream summary_out(out_dir + "/summary.json");
  summary_out << summary.dump(2) << '\n';
  std::ofstream plot_out(out_dir + "/plot_heatmap.py");
  plot_out << kHeatmapPlotScript;
  return summaries;
}

struct TransitionFit {
  double slope;
  double intercept;
  long rows_used;
};

/// For each SNR row, interpolates log10 N* where the median error first
/// crosses the threshold (from above, scanning N upward), then least-squares
/// fits log10 N* against log10 SNR. Needs at least 4 crossing rows.
inline TransitionFit transition_fit(const std::vector<CellSummary>& summaries,
                                    double threshold = 0.5) {
  std::vector<double> snrs;
  for (const auto& s : summaries)
    if (std::find(snrs.begin(), snrs.end(), s.snr) == snrs.end())
      snrs.push_back(s.snr);

  std::vector<double> xs, ys;  // log10 snr, log10 n*
  for (double snr : snrs) {
    std::vector<std::pair<long, double>> row;  // (n, median_error)
    for (const auto& s : summaries)
      if (s.snr == snr) row.emplace_back(s.n, s.median_error);
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      const double e0 = row[i].second, e1 = row[i + 1].second;
      if (e0 > threshold && e1 <= threshold) {
        const double x0 = std::log10(double(row[i].first));
        const double x1 = std::log10(double(row[i + 1].first));
        const double frac = (e0 - threshold) / (e0 - e1);
        xs.push_back(std::log10(snr));
        ys.push_back(x0 + frac * (x1 - x0));
        break;
      }
    }
  }
  if (xs.size() < 4) throw Error("transition_fit: insufficient crossings");

  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n, long(xs.size())};
}

/// Fraction of SNR rows in which the curve N(snr) lands on a grid cell whose
/// median error lies in [lo, hi] (nearest N grid point in log10).
inline double transition_band_coverage(const std::vector<CellSummary>& summaries,
                                       const std::function<double(double)>& n_of_snr,
                                       double lo = 0.2, double hi = 0.8) {
  std::vector<double> snrs;
  for (const auto& s : summaries)
    if (std::find(snrs.begin(), snrs.end(), s.snr) == snrs.end())
      snrs.push_back(s.snr);

  long hits = 0;
  for (double snr : snrs) {
    const double target = std::log10(std::max(n_of_snr(snr), 1e-300));
    const CellSummary* best = nullptr;
    double best_dist = 0.0;
    for (const auto& s : summaries) {
      if (s.snr != snr) continue;
      const double d = std::abs(std::log10(double(s.n)) - target);
      if (!best || d < best_dist) {
        best = &s;
        best_dist = d;
      }
    }
    if (best && best->median_error >= lo && best->median_error <= hi) ++hits;
  }
  return snrs.empty() ? 0.0 : double(hits) / double(snrs.size());
}

enum class CompareAxis { snr, n };

/// Sweeps one axis at fixed everything-else and tabulates error and runtime
/// per algorithm: <out_dir>/compare.csv.
inline std::vector<CellSummary> compare(const ExperimentGrid& grid, CompareAxis axis,
                                        const std::string& out_dir) {
  grid.validate();
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/compare.csv");
  if (!out) throw Error("compare: cannot open " + out_dir + "/compare.csv");
  out << "axis,value,L,algorithm,median_error,mean_error,mean_runtime_ms,trials\n";

  std::vector<CellSummary> summaries;
  for (const Cell& cell : enumerate_cells(grid)) {
    const auto records = run_cell(grid, cell);
    const CellSummary s = summarize_cell(cell, records);
    summaries.push_back(s);
    out << (axis == CompareAxis::snr ? "snr" : "n") << ','
        << detail::fmt_double(axis == CompareAxis::snr ? s.snr : double(s.n)) << ','
        << s.L << ',' << s.algorithm << ',' << detail::fmt_double(s.median_error)
        << ',' << detail::fmt_double(s.mean_error) << ','
        << detail::fmt_double(s.mean_runtime_ms) << ',' << s.trials << '\n';
    out.flush();
  }
  return summaries;
}

}  // namespace mrfa
