// Command-line front end: simulate batches, run a single recovery, sweep
// Monte Carlo grids (heatmap/transition/compare), and run built-in exactness
// checks (selftest).
//
// Exit codes: 0 success, 1 usage error, 2 experiment failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mrfa/em.hpp"
#include "mrfa/harness.hpp"
#include "mrfa/io.hpp"
#include "mrfa/metrics.hpp"
#include "mrfa/model.hpp"
#include "mrfa/moments.hpp"
#include "mrfa/recover.hpp"

namespace {

struct GridFlags {
  std::vector<long> L{16};
  std::vector<double> snr{1.0, 0.5, 0.25, 0.1};
  std::vector<long> n{100, 1000, 10000};
  std::vector<std::string> alg{"fm"};
  long trials = 25;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  long threads = 1;
  double tol = 1e-8;
  std::string out = "out";
  bool deterministic_timing = false;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--L", g.L, "Signal lengths")->delimiter(',');
  cmd->add_option("--snr", g.snr, "SNR values")->delimiter(',');
  cmd->add_option("--n", g.n, "Observation counts")->delimiter(',');
  cmd->add_option("--alg", g.alg, "Algorithms (fm, am, em-oracle, em-random)")
      ->delimiter(',');
  cmd->add_option("--trials", g.trials, "Trials per grid cell");
  cmd->add_option("--lambda", g.lambda, "Factor variance");
  cmd->add_option("--seed", g.seed, "Master seed");
  cmd->add_option("--threads", g.threads, "Worker threads per cell");
  cmd->add_option("--tol", g.tol, "Iterative-solver relative tolerance");
  cmd->add_option("--out", g.out, "Output directory");
  cmd->add_flag("--deterministic-timing", g.deterministic_timing,
                "Record runtime_ms as 0 for byte-identical outputs");
}

mrfa::ExperimentGrid make_grid(const GridFlags& g) {
  mrfa::ExperimentGrid grid;
  grid.L_values = g.L;
  grid.snr_values = g.snr;
  grid.n_values = g.n;
  grid.trials_per_cell = g.trials;
  for (const auto& a : g.alg)
    grid.algorithms.push_back(mrfa::parse_algorithm_choice(a));
  grid.master_seed = g.seed;
  grid.lambda = g.lambda;
  grid.threads = g.threads;
  grid.am.relative_tolerance = g.tol;
  grid.em.tol = g.tol;
  grid.deterministic_timing = g.deterministic_timing;
  return grid;
}

std::vector<mrfa::CellSummary> read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mrfa::Error("cannot open " + path);
  mrfa::json j = mrfa::json::parse(in);
  std::vector<mrfa::CellSummary> out;
  for (const auto& c : j)
    out.push_back({c.at("L").get<long>(), c.at("snr").get<double>(),
                   c.at("n").get<long>(), c.at("algorithm").get<std::string>(),
                   c.at("median_error").get<double>(),
                   c.at("mean_error").get<double>(),
                   c.at("mean_runtime_ms").get<double>(),
                   c.at("trials").get<long>()});
  return out;
}

int cmd_simulate(long L, double snr, double lambda, long n, std::uint64_t seed,
                 const std::string& out) {
  mrfa::Rng rng(seed);
  const mrfa::Signal signal =
      mrfa::generate_signal(L, rng, mrfa::Normalization::unit_power_spectrum);
  mrfa::ModelParams params;
  params.L = L;
  params.lambda = lambda;
  params.sigma2 = snr > 0 ? lambda / (double(L) * snr)
                          : 0.0;  // snr <= 0 means noiseless
  const mrfa::ObservationBatch batch =
      mrfa::generate_observations(signal, params, n, rng);
  std::filesystem::create_directories(
      std::filesystem::path(out).parent_path().empty()
          ? "."
          : std::filesystem::path(out).parent_path().string());
  mrfa::write_batch(out, batch, seed);
  mrfa::write_signal_csv(out + "_signal.csv", signal.theta);
  std::cout << "wrote " << out << "_observations.csv, " << out
            << "_meta.json, " << out << "_signal.csv (L=" << L << " n=" << n
            << " sigma2=" << params.sigma2 << ")\n";
  return 0;
}

int cmd_recover(const std::string& in, const std::string& alg, double tol,
                std::uint64_t seed, const std::string& out) {
  const mrfa::ObservationBatch batch = mrfa::read_batch(in);
  const mrfa::ModelParams& params = batch.params;

  mrfa::RecoveryResult result;
  if (alg == "fm") {
    result = mrfa::recover_fm(batch, params.sigma2);
  } else if (alg == "am") {
    mrfa::AMConfig cfg;
    cfg.relative_tolerance = tol;
    cfg.init_seed = seed;
    result = mrfa::recover_am(batch, params.sigma2, cfg);
  } else if (alg == "em" || alg == "em-random") {
    mrfa::EMConfig cfg;
    cfg.tol = tol;
    result = mrfa::run_em(batch, mrfa::EMInit::random(seed), params.sigma2, cfg)
                 .result;
  } else {
    throw CLI::ValidationError("--alg", "unknown algorithm: " + alg);
  }

  std::cout << "algorithm: " << mrfa::algorithm_name(result.algorithm)
            << "\nlambda_tilde: " << result.lambda_tilde
            << "\niterations: " << result.iterations << "\nflags:";
  for (const auto& f : result.flags) std::cout << ' ' << f;
  std::cout << '\n';

  const std::string signal_path = in + "_signal.csv";
  if (std::filesystem::exists(signal_path)) {
    const mrfa::CVector theta = mrfa::read_signal_csv(signal_path);
    const auto aligned = mrfa::align_error(theta, result.theta_tilde);
    std::cout << "error: " << aligned.error << " (shift " << aligned.best_shift
              << ")\n";
  }
  if (!out.empty()) {
    std::ofstream f(out);
    f << mrfa::to_json(result).dump(2) << '\n';
    std::cout << "wrote " << out << '\n';
  }
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  mrfa::Rng rng(seed);

  {  // stride covariance entries match the 4th-moment estimator exactly
    const long L = 8, n = 64;
    const mrfa::Signal s =
        mrfa::generate_signal(L, rng, mrfa::Normalization::unit_power_spectrum);
    mrfa::ModelParams p;
    p.L = L;
    p.lambda = 1.0;
    p.sigma2 = 0.5;
    const auto batch = mrfa::generate_observations(s, p, n, rng);
    double worst = 0.0;
    for (long m : {1L, 3L})
      worst = std::max(worst, mrfa::cz_trispectrum_identity_check(batch, m));
    check("trispectrum-identity", worst < 1e-12);
  }
  {  // AM objective is nonincreasing across iterations
    const long L = 12, n = 256;
    const mrfa::Signal s =
        mrfa::generate_signal(L, rng, mrfa::Normalization::unit_power_spectrum);
    mrfa::ModelParams p;
    p.L = L;
    p.lambda = 1.0;
    p.sigma2 = 0.25;
    const auto batch = mrfa::generate_observations(s, p, n, rng);
    mrfa::AMConfig cfg;
    cfg.init_seed = mrfa::derive_seed(seed, 1);
    const auto result = mrfa::recover_am(batch, p.sigma2, cfg);
    bool monotone = true;
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i)
      if (result.objective_trace[i] >
          result.objective_trace[i - 1] + 1e-10 * result.objective_trace[0])
        monotone = false;
    check("am-monotonicity", monotone);
  }
  {  // sigma = 0, large n: both spectral methods recover the signal
    const long L = 16, n = 4096;
    const mrfa::Signal s =
        mrfa::generate_signal(L, rng, mrfa::Normalization::unit_power_spectrum);
    mrfa::ModelParams p;
    p.L = L;
    p.lambda = 1.0;
    p.sigma2 = 0.0;
    const auto batch = mrfa::generate_observations(s, p, n, rng);
    const double err_fm =
        mrfa::align_error(s.theta, mrfa::recover_fm(batch, 0.0).theta_tilde)
            .error;
    mrfa::AMConfig cfg;
    cfg.init_seed = mrfa::derive_seed(seed, 2);
    const double err_am =
        mrfa::align_error(s.theta,
                          mrfa::recover_am(batch, 0.0, cfg).theta_tilde)
            .error;
    check("noiseless-fm", err_fm < 1e-6);
    check("noiseless-am", err_am < 1e-4);
  }
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-reference factor analysis: simulation and recovery"};
  app.set_config("--config", "", "key=value config file mirroring the flags");
  app.require_subcommand(1);

  // simulate
  long sim_L = 16, sim_n = 1000;
  double sim_snr = 1.0, sim_lambda = 1.0;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "batch";
  auto* simulate = app.add_subcommand("simulate", "Generate an observation batch");
  simulate->add_option("--L", sim_L, "Signal length");
  simulate->add_option("--snr", sim_snr, "SNR (<= 0 for noiseless)");
  simulate->add_option("--lambda", sim_lambda, "Factor variance");
  simulate->add_option("--n", sim_n, "Number of observations");
  simulate->add_option("--seed", sim_seed, "RNG seed");
  simulate->add_option("--out", sim_out, "Output file prefix");

  // recover
  std::string rec_in = "batch", rec_alg = "fm", rec_out;
  double rec_tol = 1e-8;
  std::uint64_t rec_seed = 0;
  auto* recover = app.add_subcommand("recover", "Run one algorithm on a saved batch");
  recover->add_option("--in", rec_in, "Batch file prefix (from simulate)");
  recover->add_option("--alg", rec_alg, "Algorithm (fm, am, em)");
  recover->add_option("--tol", rec_tol, "Relative tolerance");
  recover->add_option("--seed", rec_seed, "Seed for solver initialization");
  recover->add_option("--out", rec_out, "Optional JSON report path");

  // heatmap / transition / compare share the grid flags
  GridFlags hm, tr, cp;
  auto* heatmap = app.add_subcommand("heatmap", "Monte Carlo error grid");
  add_grid_flags(heatmap, hm);

  auto* transition = app.add_subcommand(
      "transition", "Fit the phase-transition line from a grid");
  add_grid_flags(transition, tr);
  double tr_tau = 0.5;
  std::string tr_in;
  transition->add_option("--tau", tr_tau, "Crossing threshold on median error");
  transition->add_option("--in", tr_in,
                         "Existing summary.json (skips running the grid)");

  auto* compare = app.add_subcommand("compare", "Algorithm comparison sweep");
  add_grid_flags(compare, cp);
  std::string cp_axis = "snr";
  compare->add_option("--axis", cp_axis, "Sweep axis: snr or n");

  std::uint64_t st_seed = 7;
  auto* selftest = app.add_subcommand("selftest", "Run built-in exactness checks");
  selftest->add_option("--seed", st_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(sim_L, sim_snr, sim_lambda, sim_n, sim_seed, sim_out);
    if (recover->parsed())
      return cmd_recover(rec_in, rec_alg, rec_tol, rec_seed, rec_out);
    if (heatmap->parsed()) {
      const auto summaries = mrfa::heatmap(make_grid(hm), hm.out);
      std::cout << "wrote " << hm.out << "/trials.csv, " << hm.out
                << "/summary.json, " << hm.out << "/plot_heatmap.py ("
                << summaries.size() << " cells)\n";
      return 0;
    }
    if (transition->parsed()) {
      std::vector<mrfa::CellSummary> summaries;
      if (!tr_in.empty()) {
        summaries = read_summary_json(tr_in);
      } else {
        summaries = mrfa::heatmap(make_grid(tr), tr.out);
        std::cout << "grid written to " << tr.out << '\n';
      }
      const mrfa::TransitionFit fit = mrfa::transition_fit(summaries, tr_tau);
      std::cout << "slope: " << fit.slope << "\nintercept: " << fit.intercept
                << "\nrows_used: " << fit.rows_used << '\n';
      return 0;
    }
    if (compare->parsed()) {
      const auto axis = cp_axis == "n" ? mrfa::CompareAxis::n
                                       : mrfa::CompareAxis::snr;
      const auto summaries = mrfa::compare(make_grid(cp), axis, cp.out);
      std::cout << "wrote " << cp.out << "/compare.csv (" << summaries.size()
                << " rows)\n";
      return 0;
    }
    if (selftest->parsed()) return cmd_selftest(st_seed);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
