#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hotpf/errors.hpp"
#include "hotpf/matpower.hpp"

namespace hotpf {

using SparseComplex = Eigen::SparseMatrix<std::complex<double>>;
using SparseReal = Eigen::SparseMatrix<double>;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct AdmittanceMatrix {
  int dimension = 0;
  SparseComplex y;  // pu, bus shunts and line charging included
};

// Linearized network model. The reduced susceptance matrix is factorized
// once at build time; scenarios reuse the factorization.
struct DcModel {
  SparseReal b_full;     // L x L branch susceptance Laplacian
  SparseReal b_reduced;  // (L-1) x (L-1), slack row/column removed
  Eigen::VectorXd p_shift;     // length L, phase-shifter equivalent injections (pu)
  Eigen::VectorXd b_slack_col; // length L-1, column of b_full at the slack bus
  int slack_index = 0;
  double slack_va = 0.0;  // radians
  std::vector<int> non_slack;  // internal bus indices, file order
  std::shared_ptr<Eigen::SparseLU<SparseReal>> lu;
};

/// Standard pi-model bus admittance matrix with taps, phase shifts, line
/// charging and bus shunts.
inline AdmittanceMatrix build_ybus(const NetworkCase& net) {
  using cd = std::complex<double>;
  const int L = net.size();
  std::vector<Eigen::Triplet<cd>> trips;
  trips.reserve(4 * net.branches.size() + static_cast<std::size_t>(L));

  for (const auto& br : net.branches) {
    if (!br.status) continue;
    const int f = net.internal(br.from);
    const int t = net.internal(br.to);
    const cd ys = 1.0 / cd(br.r, br.x);
    const cd ytt = ys + cd(0.0, br.b / 2.0);
    const cd tap = std::polar(br.tap, deg2rad(br.shift));
    const cd yff = ytt / (tap * std::conj(tap));
    const cd yft = -ys / std::conj(tap);
    const cd ytf = -ys / tap;
    trips.emplace_back(f, f, yff);
    trips.emplace_back(f, t, yft);
    trips.emplace_back(t, f, ytf);
    trips.emplace_back(t, t, ytt);
  }
  for (int i = 0; i < L; ++i) {
    const auto& b = net.buses[i];
    if (b.gs != 0.0 || b.bs != 0.0)
      trips.emplace_back(i, i, cd(b.gs, b.bs) / net.base_mva);
  }

  AdmittanceMatrix y;
  y.dimension = L;
  y.y.resize(L, L);
  y.y.setFromTriplets(trips.begin(), trips.end());
  y.y.makeCompressed();
  return y;
}

/// Assembles the DC susceptance model: 1/x branch weights with tap-ratio
/// divisor, phase-shifter injections, slack row/column removed, LU
/// factorized for repeated solves.
inline DcModel build_dc(const NetworkCase& net) {
  const int L = net.size();
  DcModel dc;
  dc.slack_index = net.slack_index();
  dc.slack_va = deg2rad(net.buses[static_cast<std::size_t>(dc.slack_index)].va);
  dc.p_shift = Eigen::VectorXd::Zero(L);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * net.branches.size());
  for (const auto& br : net.branches) {
    if (!br.status) continue;
    const int f = net.internal(br.from);
    const int t = net.internal(br.to);
    const double b = 1.0 / (br.x * br.tap);
    trips.emplace_back(f, f, b);
    trips.emplace_back(f, t, -b);
    trips.emplace_back(t, f, -b);
    trips.emplace_back(t, t, b);
    const double pfinj = b * (-deg2rad(br.shift));
    dc.p_shift[f] += pfinj;
    dc.p_shift[t] -= pfinj;
  }
  dc.b_full.resize(L, L);
  dc.b_full.setFromTriplets(trips.begin(), trips.end());
  dc.b_full.makeCompressed();

  dc.non_slack.reserve(static_cast<std::size_t>(L) - 1);
  std::vector<int> red(static_cast<std::size_t>(L), -1);
  for (int i = 0; i < L; ++i) {
    if (i == dc.slack_index) continue;
    red[static_cast<std::size_t>(i)] = static_cast<int>(dc.non_slack.size());
    dc.non_slack.push_back(i);
  }

  std::vector<Eigen::Triplet<double>> rtrips;
  rtrips.reserve(trips.size());
  dc.b_slack_col = Eigen::VectorXd::Zero(L - 1);
  for (int col = 0; col < dc.b_full.outerSize(); ++col) {
    for (SparseReal::InnerIterator it(dc.b_full, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i == dc.slack_index) continue;
      if (col == dc.slack_index) {
        dc.b_slack_col[red[static_cast<std::size_t>(i)]] = it.value();
      } else {
        rtrips.emplace_back(red[static_cast<std::size_t>(i)],
                            red[static_cast<std::size_t>(col)], it.value());
      }
    }
  }
  dc.b_reduced.resize(L - 1, L - 1);
  dc.b_reduced.setFromTriplets(rtrips.begin(), rtrips.end());
  dc.b_reduced.makeCompressed();

  dc.lu = std::make_shared<Eigen::SparseLU<SparseReal>>();
  dc.lu->compute(dc.b_reduced);
  if (dc.lu->info() != Eigen::Success) throw SingularDcMatrix();
  return dc;
}

}  // namespace hotpf
