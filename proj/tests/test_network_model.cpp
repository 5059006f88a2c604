#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <numbers>

#include "hotpf/network_model.hpp"
#include "support/cases.hpp"

using namespace hotpf;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

cd at(const SparseComplex& m, int i, int j) { return m.coeff(i, j); }

}  // namespace

TEST_CASE("ybus stamps a plain series branch") {
  NetworkCase net = testsupport::two_bus();
  AdmittanceMatrix y = build_ybus(net);
  REQUIRE(y.dimension == 2);
  CHECK(at(y.y, 0, 0).imag() == Approx(-10.0));
  CHECK(at(y.y, 1, 1).imag() == Approx(-10.0));
  CHECK(at(y.y, 0, 1).imag() == Approx(10.0));
  CHECK(at(y.y, 1, 0).imag() == Approx(10.0));
  CHECK(at(y.y, 0, 0).real() == Approx(0.0));
}

TEST_CASE("ybus adds line charging to the diagonal") {
  std::string text = "mpc.baseMVA = 100;\nmpc.bus = [\n"
                     "1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;\n"
                     "2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;\n];\n"
                     "mpc.gen = [1 0 0 9 -9 1 100 1 9 -9;];\n"
                     "mpc.branch = [1 2 0 0.1 0.02 0 0 0 0 0 1 -360 360;];\n";
  AdmittanceMatrix y = build_ybus(load_case(text));
  CHECK(at(y.y, 0, 0).imag() == Approx(-9.99));
  CHECK(at(y.y, 1, 1).imag() == Approx(-9.99));
}

TEST_CASE("ybus with all branches out keeps only shunts") {
  std::string text = "mpc.baseMVA = 100;\nmpc.bus = [\n"
                     "1 3 0 0 5 30 1 1 0 138 1 1.1 0.9;\n"
                     "2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;\n];\n"
                     "mpc.gen = [1 0 0 9 -9 1 100 1 9 -9;];\n"
                     "mpc.branch = [1 2 0 0.1 0 0 0 0 0 0 0 -360 360;];\n";
  AdmittanceMatrix y = build_ybus(load_case(text));
  CHECK(at(y.y, 0, 0) == cd(0.05, 0.30));
  CHECK(at(y.y, 0, 1) == cd(0.0, 0.0));
  CHECK(at(y.y, 1, 0) == cd(0.0, 0.0));
  CHECK(at(y.y, 1, 1) == cd(0.0, 0.0));
}

TEST_CASE("ybus of a shift-free network is exactly symmetric") {
  NetworkCase net = testsupport::load_case118();
  bool any_shift = false;
  for (const auto& br : net.branches) any_shift |= (br.shift != 0.0);
  REQUIRE_FALSE(any_shift);
  AdmittanceMatrix y = build_ybus(net);
  SparseComplex diff = SparseComplex(y.y.transpose()) - y.y;
  double maxabs = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseComplex::InnerIterator it(diff, k); it; ++it)
      maxabs = std::max(maxabs, std::abs(it.value()));
  CHECK(maxabs == 0.0);
}

TEST_CASE("dc model of the two-bus case") {
  DcModel dc = build_dc(testsupport::two_bus());
  REQUIRE(dc.b_reduced.rows() == 1);
  CHECK(dc.b_reduced.coeff(0, 0) == Approx(10.0));
  CHECK(dc.slack_index == 0);
}

TEST_CASE("dc model of the three-bus ring") {
  DcModel dc = build_dc(testsupport::three_bus_ring());
  REQUIRE(dc.b_reduced.rows() == 2);
  CHECK(dc.b_reduced.coeff(0, 0) == Approx(20.0));
  CHECK(dc.b_reduced.coeff(1, 1) == Approx(20.0));
  CHECK(dc.b_reduced.coeff(0, 1) == Approx(-10.0));
  CHECK(dc.b_reduced.coeff(1, 0) == Approx(-10.0));
}

TEST_CASE("phase shifter contributes equivalent injections") {
  std::string text = "mpc.baseMVA = 100;\nmpc.bus = [\n"
                     "1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;\n"
                     "2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;\n];\n"
                     "mpc.gen = [1 0 0 9 -9 1 100 1 9 -9;];\n"
                     "mpc.branch = [1 2 0 0.5 0 0 0 0 0 30 1 -360 360;];\n";
  DcModel dc = build_dc(load_case(text));
  const double expect = (std::numbers::pi / 6.0) / 0.5;
  CHECK(dc.p_shift[0] == Approx(-expect));
  CHECK(dc.p_shift[1] == Approx(expect));
}

TEST_CASE("full dc matrix rows sum to zero") {
  DcModel dc = build_dc(testsupport::load_case118());
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(dc.b_full.cols());
  Eigen::VectorXd rowsum = dc.b_full * ones;
  CHECK(rowsum.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("removing then re-adding the slack row reproduces the full matrix") {
  NetworkCase net = testsupport::three_bus_pv();
  DcModel dc = build_dc(net);
  const int L = net.size();
  Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(L, L);
  // place reduced block and slack column back
  for (int c = 0; c < dc.b_reduced.outerSize(); ++c)
    for (SparseReal::InnerIterator it(dc.b_reduced, c); it; ++it)
      rebuilt(dc.non_slack[static_cast<size_t>(it.row())],
              dc.non_slack[static_cast<size_t>(c)]) = it.value();
  for (size_t r = 0; r < dc.non_slack.size(); ++r) {
    rebuilt(dc.non_slack[r], dc.slack_index) = dc.b_slack_col[static_cast<Eigen::Index>(r)];
    rebuilt(dc.slack_index, dc.non_slack[r]) = dc.b_slack_col[static_cast<Eigen::Index>(r)];
  }
  // slack diagonal from row-sum-zero
  rebuilt(dc.slack_index, dc.slack_index) = -rebuilt.row(dc.slack_index).sum();
  Eigen::MatrixXd full = Eigen::MatrixXd(dc.b_full);
  CHECK((rebuilt - full).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("disconnected network is singular") {
  std::string text = "mpc.baseMVA = 100;\nmpc.bus = [\n"
                     "1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;\n"
                     "2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;\n"
                     "3 1 0 0 0 0 1 1 0 138 1 1.1 0.9;\n];\n"
                     "mpc.gen = [1 0 0 9 -9 1 100 1 9 -9;];\n"
                     "mpc.branch = [1 2 0 0.1 0 0 0 0 0 0 1 -360 360;"
                     " 2 3 0 0.1 0 0 0 0 0 0 0 -360 360;];\n";
  CHECK_THROWS_AS(build_dc(load_case(text)), SingularDcMatrix);
}
