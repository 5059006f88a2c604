#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hotpf/matpower.hpp"
#include "hotpf/network_model.hpp"
#include "hotpf/scenario.hpp"

// Independent dense Newton power flow used as a test oracle. Shares only
// the NetworkCase struct with the library: it stamps its own dense Ybus,
// evaluates injections with explicit polar-form double loops and uses a
// finite-difference Jacobian with dense LU. Slow and simple on purpose.

namespace testsupport {

struct ReferenceSolution {
  Eigen::VectorXd vm, va;
  bool converged = false;
  int iterations = 0;
};

inline Eigen::MatrixXcd reference_ybus(const hotpf::NetworkCase& net) {
  using cd = std::complex<double>;
  const int L = net.size();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(L, L);
  for (const auto& br : net.branches) {
    if (!br.status) continue;
    const int f = net.internal(br.from);
    const int t = net.internal(br.to);
    const cd zs(br.r, br.x);
    const cd ys = 1.0 / zs;
    const double ratio = br.tap;
    const double shift = br.shift * M_PI / 180.0;
    const cd tapc = ratio * std::exp(cd(0.0, shift));
    y(f, f) += (ys + cd(0, br.b / 2.0)) / (tapc * std::conj(tapc));
    y(f, t) += -ys / std::conj(tapc);
    y(t, f) += -ys / tapc;
    y(t, t) += ys + cd(0, br.b / 2.0);
  }
  for (int i = 0; i < L; ++i)
    y(i, i) += cd(net.buses[size_t(i)].gs, net.buses[size_t(i)].bs) / net.base_mva;
  return y;
}

// Polar injection sums, written out longhand.
inline void reference_injections(const Eigen::MatrixXcd& y, const Eigen::VectorXd& vm,
                                 const Eigen::VectorXd& va, Eigen::VectorXd& p,
                                 Eigen::VectorXd& q) {
  const int L = static_cast<int>(vm.size());
  p.setZero(L);
  q.setZero(L);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const double g = y(i, j).real();
      const double b = y(i, j).imag();
      if (g == 0.0 && b == 0.0) continue;
      const double th = va[i] - va[j];
      p[i] += vm[i] * vm[j] * (g * std::cos(th) + b * std::sin(th));
      q[i] += vm[i] * vm[j] * (g * std::sin(th) - b * std::cos(th));
    }
  }
}

inline ReferenceSolution reference_acpf(const hotpf::NetworkCase& net,
                                        const hotpf::LoadScenario& sc,
                                        const Eigen::VectorXd& vm0,
                                        const Eigen::VectorXd& va0,
                                        double tol = 1e-3, int max_iter = 40) {
  const int L = net.size();
  const Eigen::MatrixXcd y = reference_ybus(net);

  Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(L);
  for (const auto& g : net.gens) {
    if (!g.status) continue;
    p_spec[net.internal(g.bus)] += g.pg;
    q_spec[net.internal(g.bus)] += g.qg;
  }
  for (int i = 0; i < L; ++i) {
    p_spec[i] -= sc.pd[i];
    q_spec[i] -= sc.qd[i];
  }
  p_spec /= net.base_mva;
  q_spec /= net.base_mva;

  std::vector<int> th_idx, vm_idx;
  for (int i = 0; i < L; ++i) {
    const auto bt = net.buses[size_t(i)].btype;
    if (bt != hotpf::BusType::Slack) th_idx.push_back(i);
    if (bt == hotpf::BusType::PQ) vm_idx.push_back(i);
  }
  const int n = static_cast<int>(th_idx.size() + vm_idx.size());

  Eigen::VectorXd vm = vm0, va = va0;
  Eigen::VectorXd p(L), q(L);

  auto mismatch = [&](const Eigen::VectorXd& vmv, const Eigen::VectorXd& vav) {
    Eigen::VectorXd pp(L), qq(L), f(n);
    reference_injections(y, vmv, vav, pp, qq);
    int r = 0;
    for (int i : th_idx) f[r++] = pp[i] - p_spec[i];
    for (int i : vm_idx) f[r++] = qq[i] - q_spec[i];
    return f;
  };

  ReferenceSolution out;
  for (int it = 0; it <= max_iter; ++it) {
    Eigen::VectorXd f = mismatch(vm, va);
    if (f.cwiseAbs().maxCoeff() < tol) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    if (it == max_iter) break;

    // forward-difference Jacobian
    const double h = 1e-7;
    Eigen::MatrixXd jac(n, n);
    int c = 0;
    for (int i : th_idx) {
      Eigen::VectorXd vap = va;
      vap[i] += h;
      jac.col(c++) = (mismatch(vm, vap) - f) / h;
    }
    for (int i : vm_idx) {
      Eigen::VectorXd vmp = vm;
      vmp[i] += h;
      jac.col(c++) = (mismatch(vmp, va) - f) / h;
    }
    Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
    c = 0;
    for (int i : th_idx) va[i] += dx[c++];
    for (int i : vm_idx) vm[i] += dx[c++];
  }
  out.vm = vm;
  out.va = va;
  return out;
}

}  // namespace testsupport
