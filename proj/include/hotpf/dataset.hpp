#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hotpf/cnn.hpp"
#include "hotpf/errors.hpp"
#include "hotpf/io.hpp"
#include "hotpf/matpower.hpp"
#include "hotpf/network_model.hpp"
#include "hotpf/powerflow.hpp"
#include "hotpf/scenario.hpp"

// Runs DC power flow plus warm-start AC power flow over sampled load
// scenarios until N convergent samples accumulate, and assembles the
// L x 4 x N training tensor with offset AC targets.

namespace hotpf {

struct SplitIndices {
  std::vector<int> train;  // first floor(0.9 T) kept samples
  std::vector<int> val;    // remaining T - |train|
  std::vector<int> test;   // kept samples T..N-1 (the hot-start set)
};

struct Deltas {
  Eigen::MatrixXd p_d;  // (sampled - default) / baseMVA, zero at non-PQ rows
  Eigen::MatrixXd q_d;
};

inline constexpr std::array<const char*, 4> kChannelNames = {
    "vdc_offset", "theta_dc", "pd_delta", "qd_delta"};

struct Dataset {
  std::string case_name;
  int l = 0;
  int n = 0;
  int t = 0;
  std::uint64_t seed = 0;

  // channels: [V_DC - 1, Theta_DC (rad), P_d (pu), Q_d (pu)], each L x N
  std::array<Eigen::MatrixXd, 4> x;
  Eigen::MatrixXd y_v;   // V_AC - 1, L x N
  Eigen::MatrixXd y_th;  // Theta_AC in radians, L x N
  Eigen::MatrixXd p_mw;  // sampled demands, kept samples only
  Eigen::MatrixXd q_mw;

  SplitIndices split;
  std::vector<double> t_dc;       // seconds per kept sample
  std::vector<double> t_ac_warm;  // seconds per kept sample
  std::vector<int> n_ac_warm;     // warm-start iteration count per kept sample
  std::vector<int> failures;      // draw ordinals whose warm ACPF diverged
  double convergence_rate = 1.0;

  LoadScenario scenario(int k) const {
    return LoadScenario{p_mw.col(k), q_mw.col(k), k};
  }

  // L x 4 x B input tensor for the given sample ordinals
  FeatureMap gather(const std::vector<int>& ids) const {
    FeatureMap fm(l, 4, static_cast<int>(ids.size()));
    for (std::size_t b = 0; b < ids.size(); ++b)
      for (int ch = 0; ch < 4; ++ch)
        for (int h = 0; h < l; ++h)
          fm.at(h, ch, static_cast<int>(b)) = x[static_cast<std::size_t>(ch)](h, ids[b]);
    return fm;
  }

  FeatureMap sample_input(int k) const { return gather({k}); }

  Eigen::MatrixXd gather_targets(const std::vector<int>& ids, Target target) const {
    const Eigen::MatrixXd& y = target == Target::V ? y_v : y_th;
    Eigen::MatrixXd out(l, static_cast<Eigen::Index>(ids.size()));
    for (std::size_t b = 0; b < ids.size(); ++b)
      out.col(static_cast<Eigen::Index>(b)) = y.col(ids[b]);
    return out;
  }
};

/// Channels from DCPF solutions and per-unit demand deltas. Channel 0 is
/// V_DC - 1, which the linear model keeps at exactly zero.
inline std::array<Eigen::MatrixXd, 4> assemble_x(
    const std::vector<PowerFlowSolution>& dc_solutions, const Deltas& deltas) {
  const auto n = static_cast<Eigen::Index>(dc_solutions.size());
  if (n == 0) throw ShapeMismatch("assemble_x: no samples");
  const Eigen::Index l = dc_solutions[0].vm.size();
  if (deltas.p_d.rows() != l || deltas.p_d.cols() != n || deltas.q_d.cols() != n)
    throw ShapeMismatch("assemble_x: deltas shape");

  std::array<Eigen::MatrixXd, 4> x;
  for (auto& ch : x) ch.resize(l, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x[0].col(k) = dc_solutions[static_cast<std::size_t>(k)].vm.array() - 1.0;
    x[1].col(k) = dc_solutions[static_cast<std::size_t>(k)].va;
  }
  x[2] = deltas.p_d;
  x[3] = deltas.q_d;
  return x;
}

/// Offset AC targets; refuses unconverged solutions.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> assemble_targets(
    const std::vector<PowerFlowSolution>& ac_solutions) {
  const auto n = static_cast<Eigen::Index>(ac_solutions.size());
  if (n == 0) throw ShapeMismatch("assemble_targets: no samples");
  const Eigen::Index l = ac_solutions[0].vm.size();
  Eigen::MatrixXd y_v(l, n), y_th(l, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = ac_solutions[static_cast<std::size_t>(k)];
    if (!s.converged) throw UnconvergedTarget(static_cast<int>(k));
    y_v.col(k) = s.vm.array() - 1.0;
    y_th.col(k) = s.va;
  }
  return {y_v, y_th};
}

inline SplitIndices make_split(int n, int t) {
  SplitIndices s;
  const int ntrain = static_cast<int>(0.9 * t);  // floor
  for (int k = 0; k < ntrain; ++k) s.train.push_back(k);
  for (int k = ntrain; k < t; ++k) s.val.push_back(k);
  for (int k = t; k < n; ++k) s.test.push_back(k);
  return s;
}

/// Draws scenarios until n_target of them solve with warm-start ACPF,
/// recording failures, per-sample timings and iteration counts. The first
/// t kept samples become the training+validation pool, the rest the
/// held-out hot-start set.
inline Dataset generate(const NetworkCase& net, const SamplerConfig& cfg, int n_target,
                        int t, double tol = 1e-3, int max_iter = 30) {
  if (t >= n_target) throw Error("generate: t must be smaller than n_target");
  const int L = net.size();

  const AdmittanceMatrix ybus = build_ybus(net);
  const DcModel dc = build_dc(net);
  ScenarioSampler sampler(net, cfg);

  std::vector<PowerFlowSolution> dc_sols, ac_sols;
  dc_sols.reserve(static_cast<std::size_t>(n_target));
  ac_sols.reserve(static_cast<std::size_t>(n_target));

  Dataset ds;
  ds.case_name = net.name;
  ds.l = L;
  ds.n = n_target;
  ds.t = t;
  ds.seed = cfg.seed;
  ds.p_mw.resize(L, n_target);
  ds.q_mw.resize(L, n_target);

  Deltas deltas;
  deltas.p_d.resize(L, n_target);
  deltas.q_d.resize(L, n_target);

  int kept = 0;
  int draw = 0;
  while (kept < n_target) {
    LoadScenario sc = sampler.next();
    PowerFlowSolution dsol = solve_dcpf(net, dc, sc);
    InitialConditions warm = assemble_initial(net, StartMode::Warm, dsol);
    PowerFlowSolution asol = solve_acpf(net, ybus, sc, warm, tol, max_iter);
    if (asol.converged) {
      ds.p_mw.col(kept) = sc.pd;
      ds.q_mw.col(kept) = sc.qd;
      for (int i = 0; i < L; ++i) {
        const Bus& b = net.buses[static_cast<std::size_t>(i)];
        deltas.p_d(i, kept) = (sc.pd[i] - b.pd) / net.base_mva;
        deltas.q_d(i, kept) = (sc.qd[i] - b.qd) / net.base_mva;
      }
      ds.t_dc.push_back(dsol.solve_time);
      ds.t_ac_warm.push_back(asol.solve_time);
      ds.n_ac_warm.push_back(asol.iterations);
      dc_sols.push_back(std::move(dsol));
      ac_sols.push_back(std::move(asol));
      ++kept;
    } else {
      ds.failures.push_back(draw);
      if (draw + 1 >= 20 && 2 * static_cast<int>(ds.failures.size()) > draw + 1)
        throw Error("generate: warm-start convergence rate fell below 50%");
    }
    ++draw;
  }

  ds.convergence_rate = static_cast<double>(kept) / static_cast<double>(draw);
  ds.x = assemble_x(dc_sols, deltas);
  auto [y_v, y_th] = assemble_targets(ac_sols);
  ds.y_v = std::move(y_v);
  ds.y_th = std::move(y_th);
  ds.split = make_split(n_target, t);
  return ds;
}

// --- persistence ---
// Primary file: JSON header + deterministic payload (channels, targets,
// demands, iteration counts). Wall-clock vectors go to a `.timing` sidecar
// so regenerating with the same seed yields a bit-identical primary file.

namespace detail {

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
    io::write_f64(os, row);
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    auto row = io::read_f64(is, static_cast<std::size_t>(cols));
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& path) {
  {
    auto os = io::open_out(path);
    io::json h{{"kind", "dataset"},
               {"case", ds.case_name},
               {"l", ds.l},
               {"n", ds.n},
               {"t", ds.t},
               {"seed", ds.seed},
               {"channels", kChannelNames},
               {"split", {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}}},
               {"failures", ds.failures},
               {"convergence_rate", ds.convergence_rate},
               {"payload", {"x0", "x1", "x2", "x3", "y_v", "y_th", "p_mw", "q_mw", "n_ac_warm"}}};
    io::write_header(os, h);
    for (const auto& ch : ds.x) detail::write_matrix(os, ch);
    detail::write_matrix(os, ds.y_v);
    detail::write_matrix(os, ds.y_th);
    detail::write_matrix(os, ds.p_mw);
    detail::write_matrix(os, ds.q_mw);
    std::vector<double> iters(ds.n_ac_warm.begin(), ds.n_ac_warm.end());
    io::write_f64(os, iters);
  }
  {
    auto os = io::open_out(path + ".timing");
    io::write_header(os, io::json{{"kind", "dataset_timing"}, {"n", ds.n}});
    io::write_f64(os, ds.t_dc);
    io::write_f64(os, ds.t_ac_warm);
  }
}

inline Dataset load_dataset(const std::string& path) {
  auto is = io::open_in(path);
  io::json h = io::read_header(is);
  if (h.value("kind", "") != std::string("dataset"))
    throw IoError(path + " is not a dataset file");
  Dataset ds;
  ds.case_name = h.value("case", "");
  ds.l = h.at("l").get<int>();
  ds.n = h.at("n").get<int>();
  ds.t = h.at("t").get<int>();
  ds.seed = h.at("seed").get<std::uint64_t>();
  ds.split.train = h.at("split").at("train").get<std::vector<int>>();
  ds.split.val = h.at("split").at("val").get<std::vector<int>>();
  ds.split.test = h.at("split").at("test").get<std::vector<int>>();
  ds.failures = h.at("failures").get<std::vector<int>>();
  ds.convergence_rate = h.at("convergence_rate").get<double>();

  for (auto& ch : ds.x) ch = detail::read_matrix(is, ds.l, ds.n);
  ds.y_v = detail::read_matrix(is, ds.l, ds.n);
  ds.y_th = detail::read_matrix(is, ds.l, ds.n);
  ds.p_mw = detail::read_matrix(is, ds.l, ds.n);
  ds.q_mw = detail::read_matrix(is, ds.l, ds.n);
  auto iters = io::read_f64(is, static_cast<std::size_t>(ds.n));
  ds.n_ac_warm.reserve(iters.size());
  for (double v : iters) ds.n_ac_warm.push_back(static_cast<int>(v));

  std::ifstream ts(path + ".timing", std::ios::binary);
  if (ts) {
    io::read_header(ts);
    ds.t_dc = io::read_f64(ts, static_cast<std::size_t>(ds.n));
    ds.t_ac_warm = io::read_f64(ts, static_cast<std::size_t>(ds.n));
  } else {
    ds.t_dc.assign(static_cast<std::size_t>(ds.n), 0.0);
    ds.t_ac_warm.assign(static_cast<std::size_t>(ds.n), 0.0);
  }
  return ds;
}

}  // namespace hotpf
