#pragma once

#include <string>

#include "hotpf/io.hpp"
#include "hotpf/matpower.hpp"

// Small hand-checkable systems shared across the test suite.

namespace testsupport {

// slack -- PQ over a single x = 0.1 branch; 100 MW / 0 MVAr load.
inline std::string two_bus_text() {
  return R"(function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1.0 0 138 1 1.1 0.9;
  2 1 100 0 0 0 1 1.0 0 138 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 999 -999 1.0 100 1 999 -999;
];
mpc.branch = [
  1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
)";
}

// three-bus ring, all x = 0.1; slack at bus 1, injections set by loads.
inline std::string three_bus_ring_text(double pd2 = -100.0, double pd3 = 100.0) {
  return "function mpc = case3ring\n"
         "mpc.baseMVA = 100;\n"
         "mpc.bus = [\n"
         "  1 3 0 0 0 0 1 1.0 0 138 1 1.1 0.9;\n"
         "  2 1 " + std::to_string(pd2) + " 0 0 0 1 1.0 0 138 1 1.1 0.9;\n"
         "  3 1 " + std::to_string(pd3) + " 0 0 0 1 1.0 0 138 1 1.1 0.9;\n"
         "];\n"
         "mpc.gen = [\n"
         "  1 0 0 999 -999 1.0 100 1 999 -999;\n"
         "];\n"
         "mpc.branch = [\n"
         "  1 2 0 0.1 0 0 0 0 0 0 1 -360 360;\n"
         "  2 3 0 0.1 0 0 0 0 0 0 1 -360 360;\n"
         "  3 1 0 0.1 0 0 0 0 0 0 1 -360 360;\n"
         "];\n";
}

// slack, PV (vg = 1.02, 50 MW), PQ (80 MW / 20 MVAr) on a line network
// with realistic impedances.
inline std::string three_bus_pv_text() {
  return R"(function mpc = case3pv
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0  0 0 1 1.01 0 138 1 1.1 0.9;
  2 2 10 5  0 0 1 1.0  0 138 1 1.1 0.9;
  3 1 80 20 0 0 1 1.0  0 138 1 1.1 0.9;
];
mpc.gen = [
  1 0  0 999 -999 1.01 100 1 999 -999;
  2 50 0 999 -999 1.02 100 1 999 -999;
];
mpc.branch = [
  1 2 0.01 0.06 0.02 0 0 0 0 0 1 -360 360;
  2 3 0.02 0.09 0.03 0 0 0 0 0 1 -360 360;
  1 3 0.015 0.08 0.025 0 0 0 0 0 1 -360 360;
];
)";
}

inline hotpf::NetworkCase two_bus() { return hotpf::load_case(two_bus_text()); }
inline hotpf::NetworkCase three_bus_ring() { return hotpf::load_case(three_bus_ring_text()); }
inline hotpf::NetworkCase three_bus_pv() { return hotpf::load_case(three_bus_pv_text()); }

inline std::string data_path(const std::string& file) {
  return std::string(HOTPF_TEST_DATA_DIR) + "/" + file;
}

inline hotpf::NetworkCase load_case118() {
  return hotpf::load_case(hotpf::io::read_text_file(data_path("case118.m")));
}

}  // namespace testsupport
