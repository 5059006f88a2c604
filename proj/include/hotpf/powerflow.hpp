#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hotpf/errors.hpp"
#include "hotpf/matpower.hpp"
#include "hotpf/network_model.hpp"
#include "hotpf/scenario.hpp"

namespace hotpf {

struct PowerFlowSolution {
  Eigen::VectorXd vm;   // pu
  Eigen::VectorXd va;   // radians
  int iterations = 0;   // Jacobian solves performed
  bool converged = false;
  double max_mismatch = 0.0;  // pu
  double solve_time = 0.0;    // seconds, monotonic clock around the solve
};

enum class StartMode { Flat, Warm, Hot };

struct InitialConditions {
  Eigen::VectorXd vm0;  // pu
  Eigen::VectorXd va0;  // radians
  StartMode mode = StartMode::Flat;
};

struct VoltagePrediction {
  Eigen::VectorXd vm;  // pu (already shifted back up by 1.0)
  Eigen::VectorXd va;  // radians
};

namespace detail {

// Net scheduled real injection per bus in pu: generation minus demand.
// include_shunt_g subtracts Gs for the DC model (shunt conductance draws
// real power at V = 1); the AC model keeps shunts inside Ybus instead.
inline Eigen::VectorXd p_injection(const NetworkCase& net, const LoadScenario& sc,
                                   bool include_shunt_g) {
  const int L = net.size();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(L);
  for (const auto& g : net.gens)
    if (g.status) p[net.internal(g.bus)] += g.pg;
  for (int i = 0; i < L; ++i) {
    p[i] -= sc.pd[i];
    if (include_shunt_g) p[i] -= net.buses[static_cast<std::size_t>(i)].gs;
  }
  return p / net.base_mva;
}

inline Eigen::VectorXd q_injection(const NetworkCase& net, const LoadScenario& sc) {
  const int L = net.size();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(L);
  for (const auto& g : net.gens)
    if (g.status) q[net.internal(g.bus)] += g.qg;
  for (int i = 0; i < L; ++i) q[i] -= sc.qd[i];
  return q / net.base_mva;
}

// vg of the first in-service generator at the bus, or fallback.
inline Eigen::VectorXd gen_voltage_setpoints(const NetworkCase& net) {
  const int L = net.size();
  Eigen::VectorXd vg(L);
  for (int i = 0; i < L; ++i) vg[i] = net.buses[static_cast<std::size_t>(i)].vm;
  std::vector<bool> seen(static_cast<std::size_t>(L), false);
  for (const auto& g : net.gens) {
    if (!g.status) continue;
    const auto i = static_cast<std::size_t>(net.internal(g.bus));
    if (!seen[i]) {
      vg[static_cast<Eigen::Index>(i)] = g.vg;
      seen[i] = true;
    }
  }
  return vg;
}

inline Eigen::VectorXcd complex_voltage(const Eigen::VectorXd& vm,
                                        const Eigen::VectorXd& va) {
  Eigen::VectorXcd v(vm.size());
  for (Eigen::Index i = 0; i < vm.size(); ++i) v[i] = std::polar(vm[i], va[i]);
  return v;
}

}  // namespace detail

/// Solves the linear DC power flow: b_reduced * theta = p - p_shift with the
/// slack angle held at its case value. Voltage magnitudes are 1.0 pu by
/// construction and the iteration count is 0.
inline PowerFlowSolution solve_dcpf(const NetworkCase& net, const DcModel& dc,
                                    const LoadScenario& scenario) {
  const auto t0 = std::chrono::steady_clock::now();
  const int L = net.size();
  const Eigen::VectorXd p = detail::p_injection(net, scenario, true);

  Eigen::VectorXd rhs(L - 1);
  for (std::size_t r = 0; r < dc.non_slack.size(); ++r) {
    const int i = dc.non_slack[r];
    rhs[static_cast<Eigen::Index>(r)] = p[i] - dc.p_shift[i];
  }
  rhs -= dc.b_slack_col * dc.slack_va;

  const Eigen::VectorXd theta_red = dc.lu->solve(rhs);
  if (dc.lu->info() != Eigen::Success) throw SingularDcMatrix();

  PowerFlowSolution sol;
  sol.vm = Eigen::VectorXd::Ones(L);
  sol.va.resize(L);
  sol.va[dc.slack_index] = dc.slack_va;
  for (std::size_t r = 0; r < dc.non_slack.size(); ++r)
    sol.va[dc.non_slack[r]] = theta_red[static_cast<Eigen::Index>(r)];
  sol.iterations = 0;
  sol.converged = true;
  sol.max_mismatch =
      (dc.b_reduced * theta_red - rhs).cwiseAbs().maxCoeff();
  sol.solve_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0).count();
  return sol;
}

/// Power mismatch at the current voltage estimate: dp over non-slack buses,
/// dq over PQ buses, zeros elsewhere. Specified injections come from
/// generation minus the scenario demand, per unit.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_mismatch(
    const NetworkCase& net, const AdmittanceMatrix& ybus, const LoadScenario& scenario,
    const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  const int L = net.size();
  if (vm.size() != L || va.size() != L)
    throw ShapeMismatch("compute_mismatch: voltage vectors must have length L");

  const Eigen::VectorXcd v = detail::complex_voltage(vm, va);
  const Eigen::VectorXcd s = v.cwiseProduct((ybus.y * v).conjugate());
  const Eigen::VectorXd p_spec = detail::p_injection(net, scenario, false);
  const Eigen::VectorXd q_spec = detail::q_injection(net, scenario);

  Eigen::VectorXd dp = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(L);
  for (int i = 0; i < L; ++i) {
    const BusType bt = net.buses[static_cast<std::size_t>(i)].btype;
    if (bt != BusType::Slack) dp[i] = s[i].real() - p_spec[i];
    if (bt == BusType::PQ) dq[i] = s[i].imag() - q_spec[i];
  }
  return {dp, dq};
}

/// Full Newton-Raphson AC power flow in polar form. Unknowns are angles at
/// PV and PQ buses and magnitudes at PQ buses; PV magnitudes stay pinned to
/// the generator setpoint and the slack bus to its case values. The
/// iteration count equals the number of Jacobian solves, so an initial
/// point inside tolerance exits with 0 iterations.
inline PowerFlowSolution solve_acpf(const NetworkCase& net, const AdmittanceMatrix& ybus,
                                    const LoadScenario& scenario,
                                    const InitialConditions& init,
                                    double tol = 1e-3, int max_iter = 30) {
  const auto t0 = std::chrono::steady_clock::now();
  const int L = net.size();
  if (init.vm0.size() != L || init.va0.size() != L)
    throw ShapeMismatch("solve_acpf: initial conditions must have length L");

  const std::vector<int> pv = net.pv_indices();
  const std::vector<int> pq = net.pq_indices();
  const int npv = static_cast<int>(pv.size());
  const int npq = static_cast<int>(pq.size());
  const int nth = npv + npq;       // angle unknowns
  const int nun = nth + npq;       // total unknowns

  // bus -> position in the unknown vector (-1 if fixed)
  std::vector<int> th_pos(static_cast<std::size_t>(L), -1);
  std::vector<int> vm_pos(static_cast<std::size_t>(L), -1);
  {
    int p = 0;
    for (int i : pv) th_pos[static_cast<std::size_t>(i)] = p++;
    for (int i : pq) th_pos[static_cast<std::size_t>(i)] = p++;
    int q = 0;
    for (int i : pq) vm_pos[static_cast<std::size_t>(i)] = nth + q++;
  }

  const Eigen::VectorXd p_spec = detail::p_injection(net, scenario, false);
  const Eigen::VectorXd q_spec = detail::q_injection(net, scenario);

  Eigen::VectorXd vm = init.vm0;
  Eigen::VectorXd va = init.va0;

  Eigen::VectorXd pcalc(L), qcalc(L);
  Eigen::VectorXd f(nun);

  auto evaluate = [&]() {
    const Eigen::VectorXcd v = detail::complex_voltage(vm, va);
    const Eigen::VectorXcd s = v.cwiseProduct((ybus.y * v).conjugate());
    for (int i = 0; i < L; ++i) {
      pcalc[i] = s[i].real();
      qcalc[i] = s[i].imag();
    }
    int r = 0;
    for (int i : pv) f[r++] = pcalc[i] - p_spec[i];
    for (int i : pq) f[r++] = pcalc[i] - p_spec[i];
    for (int i : pq) f[r++] = qcalc[i] - q_spec[i];
  };

  evaluate();

  PowerFlowSolution sol;
  Eigen::SparseLU<SparseReal> lu;
  bool pattern_analyzed = false;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(4 * ybus.y.nonZeros()));

  int it = 0;
  for (;;) {
    const double normf = (nun > 0) ? f.cwiseAbs().maxCoeff() : 0.0;
    if (normf < tol) {
      sol.converged = true;
      sol.max_mismatch = normf;
      break;
    }
    if (it >= max_iter) {
      sol.converged = false;
      sol.max_mismatch = normf;
      break;
    }

    // analytic polar Jacobian, assembled from the Ybus sparsity pattern
    trips.clear();
    for (int col = 0; col < ybus.y.outerSize(); ++col) {
      for (SparseComplex::InnerIterator yij(ybus.y, col); yij; ++yij) {
        const int i = static_cast<int>(yij.row());
        const int j = col;
        const int rp = th_pos[static_cast<std::size_t>(i)];  // P row index == theta pos
        const int rq = vm_pos[static_cast<std::size_t>(i)];  // Q row index == vm pos
        const int ct = th_pos[static_cast<std::size_t>(j)];
        const int cv = vm_pos[static_cast<std::size_t>(j)];
        if (rp < 0 && rq < 0) continue;

        double dp_dth, dp_dvm, dq_dth, dq_dvm;
        if (i == j) {
          const double g = yij.value().real();
          const double b = yij.value().imag();
          dp_dth = -qcalc[i] - b * vm[i] * vm[i];
          dp_dvm = pcalc[i] / vm[i] + g * vm[i];
          dq_dth = pcalc[i] - g * vm[i] * vm[i];
          dq_dvm = qcalc[i] / vm[i] - b * vm[i];
        } else {
          const double g = yij.value().real();
          const double b = yij.value().imag();
          const double thij = va[i] - va[j];
          const double sn = std::sin(thij);
          const double cs = std::cos(thij);
          dp_dth = vm[i] * vm[j] * (g * sn - b * cs);
          dp_dvm = vm[i] * (g * cs + b * sn);
          dq_dth = -vm[i] * vm[j] * (g * cs + b * sn);
          dq_dvm = vm[i] * (g * sn - b * cs);
        }
        if (rp >= 0 && ct >= 0) trips.emplace_back(rp, ct, dp_dth);
        if (rp >= 0 && cv >= 0) trips.emplace_back(rp, cv, dp_dvm);
        if (rq >= 0 && ct >= 0) trips.emplace_back(rq, ct, dq_dth);
        if (rq >= 0 && cv >= 0) trips.emplace_back(rq, cv, dq_dvm);
      }
    }
    SparseReal jac(nun, nun);
    jac.setFromTriplets(trips.begin(), trips.end());
    jac.makeCompressed();

    if (!pattern_analyzed) {
      lu.analyzePattern(jac);
      pattern_analyzed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw SingularJacobian(it);
    const Eigen::VectorXd dx = lu.solve(-f);

    for (int i : pv) va[i] += dx[th_pos[static_cast<std::size_t>(i)]];
    for (int i : pq) {
      va[i] += dx[th_pos[static_cast<std::size_t>(i)]];
      vm[i] += dx[vm_pos[static_cast<std::size_t>(i)]];
    }
    ++it;
    evaluate();
  }

  sol.vm = std::move(vm);
  sol.va = std::move(va);
  sol.iterations = it;
  sol.solve_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0).count();
  return sol;
}

/// Initial conditions per start mode. Flat: 1.0 / 0.0 at PQ buses. Warm:
/// DCPF angles, unit magnitudes at PQ. Hot: model predictions at every bus
/// the solver actually treats as unknown; PV magnitudes revert to the
/// generator setpoint and the slack keeps its case values.
inline InitialConditions assemble_initial(
    const NetworkCase& net, StartMode mode,
    const std::optional<PowerFlowSolution>& dc_solution = std::nullopt,
    const std::optional<VoltagePrediction>& prediction = std::nullopt) {
  const int L = net.size();
  const int slack = net.slack_index();
  const Eigen::VectorXd vg = detail::gen_voltage_setpoints(net);

  InitialConditions ic;
  ic.mode = mode;
  ic.vm0.resize(L);
  ic.va0.resize(L);

  const Bus& sb = net.buses[static_cast<std::size_t>(slack)];
  switch (mode) {
    case StartMode::Flat:
      for (int i = 0; i < L; ++i) {
        const Bus& b = net.buses[static_cast<std::size_t>(i)];
        ic.vm0[i] = b.btype == BusType::PQ ? 1.0 : vg[i];
        ic.va0[i] = 0.0;
      }
      break;
    case StartMode::Warm:
      if (!dc_solution) throw MissingInput("warm start requires a DCPF solution");
      for (int i = 0; i < L; ++i) {
        const Bus& b = net.buses[static_cast<std::size_t>(i)];
        ic.vm0[i] = b.btype == BusType::PQ ? 1.0 : vg[i];
        ic.va0[i] = dc_solution->va[i];
      }
      break;
    case StartMode::Hot:
      if (!prediction) throw MissingInput("hot start requires model predictions");
      if (prediction->vm.size() != L || prediction->va.size() != L)
        throw ShapeMismatch("prediction vectors must have length L");
      for (int i = 0; i < L; ++i) {
        const Bus& b = net.buses[static_cast<std::size_t>(i)];
        ic.vm0[i] = b.btype == BusType::PQ ? prediction->vm[i] : vg[i];
        ic.va0[i] = prediction->va[i];
      }
      break;
  }
  ic.vm0[slack] = sb.vm;
  ic.va0[slack] = deg2rad(sb.va);
  return ic;
}

/// Demand vector straight from the case file (the "stock" scenario).
inline LoadScenario default_scenario(const NetworkCase& net) {
  const int L = net.size();
  LoadScenario s;
  s.pd.resize(L);
  s.qd.resize(L);
  for (int i = 0; i < L; ++i) {
    s.pd[i] = net.buses[static_cast<std::size_t>(i)].pd;
    s.qd[i] = net.buses[static_cast<std::size_t>(i)].qd;
  }
  s.k = 0;
  return s;
}

}  // namespace hotpf
