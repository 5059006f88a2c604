#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hotpf/errors.hpp"
#include "hotpf/io.hpp"
#include "hotpf/matpower.hpp"
#include "hotpf/rng.hpp"

// Stochastic load scenarios: Gaussian real-power fluctuation per PQ bus,
// reactive power from a per-sample lagging power factor drawn from a
// truncated Gaussian. Non-PQ buses keep their case defaults exactly.

namespace hotpf {

struct LoadScenario {
  Eigen::VectorXd pd;  // MW, length L
  Eigen::VectorXd qd;  // MVAr, length L
  int k = 0;           // sample ordinal
};

struct SamplerConfig {
  int n = 1;
  std::uint64_t seed = 0;
  double pf_mu = 1.0;
  double pf_sigma = 0.05;
  double pf_lo = 0.7;
  double pf_hi = 1.0;
};

struct ScenarioSet {
  Eigen::MatrixXd p;  // L x N, MW
  Eigen::MatrixXd q;  // L x N, MVAr
  std::uint64_t seed = 0;
  int n = 0;
  std::string case_name;

  LoadScenario column(int k) const {
    return LoadScenario{p.col(k), q.col(k), k};
  }
};

/// Standard deviation of the real-power demand fluctuation for a bus with
/// default demand p_mw. The constants are tied to MW-scale demands.
inline double sigma_of(double p_mw) {
  const double a = std::abs(p_mw);
  return 5.44130 + 0.17459 * std::sqrt(a) + 0.001673 * a;
}

namespace detail {

inline rng::Stream bus_stream(std::uint64_t seed, int bus_index) {
  return rng::Stream(rng::mix(seed, rng::kTagLoadP,
                              static_cast<std::uint64_t>(bus_index)));
}

inline rng::Stream pf_stream(std::uint64_t seed) {
  return rng::Stream(rng::mix(seed, rng::kTagPowerFactor));
}

}  // namespace detail

// Draws scenarios one at a time. Each PQ bus owns an independent stream
// derived from (seed, bus index), so row-wise matrix generation and
// column-wise streaming produce identical values.
class ScenarioSampler {
 public:
  ScenarioSampler(const NetworkCase& net, const SamplerConfig& cfg)
      : net_(&net), cfg_(cfg), pf_stream_(detail::pf_stream(cfg.seed)) {
    streams_.reserve(static_cast<std::size_t>(net.size()));
    for (int i = 0; i < net.size(); ++i)
      streams_.push_back(detail::bus_stream(cfg.seed, i));
  }

  LoadScenario next() {
    const int L = net_->size();
    LoadScenario s;
    s.k = k_++;
    s.pd.resize(L);
    s.qd.resize(L);
    const double pf = pf_stream_.truncated_normal(cfg_.pf_mu, cfg_.pf_sigma,
                                                  cfg_.pf_lo, cfg_.pf_hi);
    const double tanphi = std::tan(std::acos(pf));
    for (int i = 0; i < L; ++i) {
      const Bus& b = net_->buses[static_cast<std::size_t>(i)];
      if (b.btype == BusType::PQ) {
        s.pd[i] = streams_[static_cast<std::size_t>(i)].normal(b.pd, sigma_of(b.pd));
        s.qd[i] = s.pd[i] * tanphi;
      } else {
        s.pd[i] = b.pd;
        s.qd[i] = b.qd;
      }
    }
    return s;
  }

 private:
  const NetworkCase* net_;
  SamplerConfig cfg_;
  std::vector<rng::Stream> streams_;
  rng::Stream pf_stream_;
  int k_ = 0;
};

/// N Gaussian demand samples per PQ bus; non-PQ rows stay constant.
inline Eigen::MatrixXd sample_p(const NetworkCase& net, const SamplerConfig& cfg) {
  const int L = net.size();
  Eigen::MatrixXd p(L, cfg.n);
  for (int i = 0; i < L; ++i) {
    const Bus& b = net.buses[static_cast<std::size_t>(i)];
    if (b.btype == BusType::PQ) {
      auto st = detail::bus_stream(cfg.seed, i);
      const double sig = sigma_of(b.pd);
      for (int k = 0; k < cfg.n; ++k) p(i, k) = st.normal(b.pd, sig);
    } else {
      p.row(i).setConstant(b.pd);
    }
  }
  return p;
}

/// N lagging power factors from N(pf_mu, pf_sigma^2) truncated to
/// [pf_lo, pf_hi] by rejection sampling.
inline Eigen::VectorXd sample_pf(const SamplerConfig& cfg) {
  Eigen::VectorXd pf(cfg.n);
  auto st = detail::pf_stream(cfg.seed);
  for (int k = 0; k < cfg.n; ++k)
    pf[k] = st.truncated_normal(cfg.pf_mu, cfg.pf_sigma, cfg.pf_lo, cfg.pf_hi);
  return pf;
}

/// Q(i,k) = P(i,k) * tan(arccos(pf(k))) at PQ buses; defaults elsewhere.
inline Eigen::MatrixXd compute_q(const Eigen::MatrixXd& p, const Eigen::VectorXd& pf,
                                 const NetworkCase& net) {
  if (p.cols() != pf.size()) throw ShapeMismatch("compute_q: P columns != pf length");
  const int L = net.size();
  Eigen::MatrixXd q(L, p.cols());
  Eigen::VectorXd tanphi(pf.size());
  for (int k = 0; k < pf.size(); ++k) tanphi[k] = std::tan(std::acos(pf[k]));
  for (int i = 0; i < L; ++i) {
    const Bus& b = net.buses[static_cast<std::size_t>(i)];
    if (b.btype == BusType::PQ)
      q.row(i) = p.row(i).cwiseProduct(tanphi.transpose());
    else
      q.row(i).setConstant(b.qd);
  }
  return q;
}

inline ScenarioSet generate_scenarios(const NetworkCase& net, const SamplerConfig& cfg) {
  ScenarioSet set;
  set.p = sample_p(net, cfg);
  set.q = compute_q(set.p, sample_pf(cfg), net);
  set.seed = cfg.seed;
  set.n = cfg.n;
  set.case_name = net.name;
  return set;
}

// persistence: JSON header line + row-major f64 payload, P then Q

inline void save_scenarios(const ScenarioSet& set, const std::string& path) {
  auto os = io::open_out(path);
  io::json h{{"kind", "scenario_set"},
             {"case", set.case_name},
             {"l", set.p.rows()},
             {"n", set.n},
             {"seed", set.seed}};
  io::write_header(os, h);
  std::vector<double> row(static_cast<std::size_t>(set.n));
  for (const auto* m : {&set.p, &set.q}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index k = 0; k < m->cols(); ++k)
        row[static_cast<std::size_t>(k)] = (*m)(i, k);
      io::write_f64(os, row);
    }
  }
}

inline ScenarioSet load_scenarios(const std::string& path) {
  auto is = io::open_in(path);
  io::json h = io::read_header(is);
  if (h.value("kind", "") != std::string("scenario_set"))
    throw IoError(path + " is not a scenario set file");
  ScenarioSet set;
  const auto L = h.at("l").get<Eigen::Index>();
  set.n = h.at("n").get<int>();
  set.seed = h.at("seed").get<std::uint64_t>();
  set.case_name = h.value("case", "");
  set.p.resize(L, set.n);
  set.q.resize(L, set.n);
  for (auto* m : {&set.p, &set.q}) {
    for (Eigen::Index i = 0; i < L; ++i) {
      auto row = io::read_f64(is, static_cast<std::size_t>(set.n));
      for (Eigen::Index k = 0; k < set.n; ++k)
        (*m)(i, k) = row[static_cast<std::size_t>(k)];
    }
  }
  return set;
}

}  // namespace hotpf
