#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfa/model.hpp"
#include "mrfa/moments.hpp"
#include "mrfa/recover.hpp"
#include "mrfa/spectral.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

using nlohmann::json;

namespace detail {
/// Shortest round-trippable decimal form, stable across runs.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

// --- signals ---------------------------------------------------------------

inline void write_signal_csv(const std::string& path, const CVector& v) {
  std::ofstream out(path);
  if (!out) throw Error("write_signal_csv: cannot open " + path);
  out << "index,re,im\n";
  for (long i = 0; i < v.size(); ++i)
    out << i << ',' << detail::fmt_double(v[i].real()) << ','
        << detail::fmt_double(v[i].imag()) << '\n';
}

inline CVector read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_signal_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<Complex> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string idx, re, im;
    std::getline(ss, idx, ',');
    std::getline(ss, re, ',');
    std::getline(ss, im, ',');
    values.emplace_back(std::stod(re), std::stod(im));
  }
  CVector v(long(values.size()));
  for (long i = 0; i < v.size(); ++i) v[i] = values[std::size_t(i)];
  return v;
}

// --- batches ---------------------------------------------------------------

/// A batch is stored as <prefix>_observations.csv (obs,index,re,im) plus
/// <prefix>_meta.json (L, N, lambda, sigma2, seed).
inline void write_batch(const std::string& prefix, const ObservationBatch& batch,
                        std::uint64_t seed) {
  {
    std::ofstream out(prefix + "_observations.csv");
    if (!out) throw Error("write_batch: cannot open " + prefix + "_observations.csv");
    out << "obs,index,re,im\n";
    for (long i = 0; i < batch.N(); ++i)
      for (long l = 0; l < batch.L(); ++l)
        out << i << ',' << l << ','
            << detail::fmt_double(batch.observations(l, i).real()) << ','
            << detail::fmt_double(batch.observations(l, i).imag()) << '\n';
  }
  json meta{{"L", batch.params.L},
            {"N", batch.N()},
            {"lambda", batch.params.lambda},
            {"sigma2", batch.params.sigma2},
            {"seed", seed}};
  std::ofstream out(prefix + "_meta.json");
  out << meta.dump(2) << '\n';
}

inline ObservationBatch read_batch(const std::string& prefix) {
  std::ifstream meta_in(prefix + "_meta.json");
  if (!meta_in) throw Error("read_batch: cannot open " + prefix + "_meta.json");
  json meta = json::parse(meta_in);

  ObservationBatch batch;
  batch.params.L = meta.at("L").get<long>();
  batch.params.lambda = meta.at("lambda").get<double>();
  batch.params.sigma2 = meta.at("sigma2").get<double>();
  const long N = meta.at("N").get<long>();
  batch.observations.resize(batch.params.L, N);

  std::ifstream in(prefix + "_observations.csv");
  if (!in) throw Error("read_batch: cannot open " + prefix + "_observations.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string obs, idx, re, im;
    std::getline(ss, obs, ',');
    std::getline(ss, idx, ',');
    std::getline(ss, re, ',');
    std::getline(ss, im, ',');
    batch.observations(std::stol(idx), std::stol(obs)) = {std::stod(re), std::stod(im)};
  }
  batch.fourier.resize(batch.params.L, N);
  for (long i = 0; i < N; ++i) batch.fourier.col(i) = dft(batch.observations.col(i));
  return batch;
}

// --- JSON views ------------------------------------------------------------

inline json to_json(const CVector& v) {
  json arr = json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back({v[i].real(), v[i].imag()});
  return arr;
}

inline json to_json(const CMatrix& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const UEstimate& u) {
  return {{"m", u.m},
          {"u_tilde", to_json(u.u_tilde)},
          {"top_eigenvalue", u.top_eigenvalue},
          {"spectral_gap", u.spectral_gap},
          {"degenerate_gap", u.degenerate_gap}};
}

inline json to_json(const StrideCovariance& c) {
  json raw = json::array();
  for (long i = 0; i < c.raw_diagonal.size(); ++i) raw.push_back(c.raw_diagonal[i]);
  return {{"m", c.m}, {"matrix", to_json(c.matrix)}, {"raw_diagonal", raw}};
}

inline json to_json(const RecoveryResult& r) {
  return {{"theta_tilde", to_json(r.theta_tilde)},
          {"lambda_tilde", r.lambda_tilde},
          {"algorithm", algorithm_name(r.algorithm)},
          {"iterations", r.iterations},
          {"objective_trace", r.objective_trace},
          {"flags", r.flags}};
}

/// EM convergence trace: loglik and aligned theta-change per iteration.
inline void write_em_trace_csv(const std::string& path,
                               const std::vector<double>& loglik,
                               const std::vector<double>& theta_change) {
  std::ofstream out(path);
  if (!out) throw Error("write_em_trace_csv: cannot open " + path);
  out << "iteration,loglik,theta_change\n";
  for (std::size_t i = 0; i < loglik.size(); ++i)
    out << i + 1 << ',' << detail::fmt_double(loglik[i]) << ','
        << detail::fmt_double(theta_change[i]) << '\n';
}

/// Trispectrum dump for small L: flat (k1,k2,k3,re,im) rows.
inline void write_trispectrum_csv(const std::string& path,
                                  const TrispectrumEstimate& t) {
  std::ofstream out(path);
  if (!out) throw Error("write_trispectrum_csv: cannot open " + path);
  out << "k1,k2,k3,re,im\n";
  for (long k1 = 0; k1 < t.L; ++k1)
    for (long k2 = 0; k2 < t.L; ++k2)
      for (long k3 = 0; k3 < t.L; ++k3) {
        const Complex v = t.at(k1, k2, k3);
        out << k1 << ',' << k2 << ',' << k3 << ','
            << detail::fmt_double(v.real()) << ',' << detail::fmt_double(v.imag())
            << '\n';
      }
}

}  // namespace mrfa
