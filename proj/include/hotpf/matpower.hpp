#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hotpf/errors.hpp"

// Parser for the numeric-matrix subset of the MATPOWER case format:
// `mpc.baseMVA = <num>;` plus `mpc.bus`, `mpc.gen` and `mpc.branch`
// matrices of numeric literals. Comments (%) are allowed anywhere,
// gencost and other assignments are skipped.

namespace hotpf {

struct RawCase {
  double base_mva = 0.0;
  std::vector<std::vector<double>> bus_rows;
  std::vector<std::vector<double>> gen_rows;
  std::vector<std::vector<double>> branch_rows;
  std::string name;
};

enum class BusType { PQ = 1, PV = 2, Slack = 3 };

struct Bus {
  int id = 0;           // external bus number
  BusType btype = BusType::PQ;
  double pd = 0.0;      // MW
  double qd = 0.0;      // MVAr
  double gs = 0.0;      // MW consumed at V = 1.0 pu
  double bs = 0.0;      // MVAr injected at V = 1.0 pu
  double vm = 1.0;      // pu
  double va = 0.0;      // degrees
  double base_kv = 0.0;
};

struct Gen {
  int bus = 0;          // external bus id
  double pg = 0.0;      // MW
  double qg = 0.0;      // MVAr
  double vg = 1.0;      // pu setpoint
  bool status = true;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;       // pu
  double x = 0.0;       // pu
  double b = 0.0;       // pu, total line charging
  double tap = 1.0;     // off-nominal ratio, file value 0 normalized to 1.0
  double shift = 0.0;   // degrees
  bool status = true;
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Gen> gens;
  std::vector<Branch> branches;
  std::unordered_map<int, int> index_map;  // external id -> 0-based internal

  int size() const { return static_cast<int>(buses.size()); }

  int internal(int external_id) const {
    auto it = index_map.find(external_id);
    if (it == index_map.end()) throw Error("unknown bus id " + std::to_string(external_id));
    return it->second;
  }

  int slack_index() const {
    for (int i = 0; i < size(); ++i)
      if (buses[i].btype == BusType::Slack) return i;
    throw NoSlackBus(0);
  }

  std::vector<int> pv_indices() const {
    std::vector<int> v;
    for (int i = 0; i < size(); ++i)
      if (buses[i].btype == BusType::PV) v.push_back(i);
    return v;
  }

  std::vector<int> pq_indices() const {
    std::vector<int> v;
    for (int i = 0; i < size(); ++i)
      if (buses[i].btype == BusType::PQ) v.push_back(i);
    return v;
  }

  friend bool operator==(const NetworkCase& a, const NetworkCase& b) {
    auto bus_eq = [](const Bus& x, const Bus& y) {
      return x.id == y.id && x.btype == y.btype && x.pd == y.pd && x.qd == y.qd &&
             x.gs == y.gs && x.bs == y.bs && x.vm == y.vm && x.va == y.va &&
             x.base_kv == y.base_kv;
    };
    auto gen_eq = [](const Gen& x, const Gen& y) {
      return x.bus == y.bus && x.pg == y.pg && x.qg == y.qg && x.vg == y.vg &&
             x.status == y.status;
    };
    auto br_eq = [](const Branch& x, const Branch& y) {
      return x.from == y.from && x.to == y.to && x.r == y.r && x.x == y.x &&
             x.b == y.b && x.tap == y.tap && x.shift == y.shift && x.status == y.status;
    };
    return a.base_mva == b.base_mva &&
           std::equal(a.buses.begin(), a.buses.end(), b.buses.begin(), b.buses.end(), bus_eq) &&
           std::equal(a.gens.begin(), a.gens.end(), b.gens.begin(), b.gens.end(), gen_eq) &&
           std::equal(a.branches.begin(), a.branches.end(), b.branches.begin(), b.branches.end(), br_eq);
  }
};

namespace detail {

struct Line {
  std::string_view text;  // comment stripped
  int number;             // 1-based
};

inline std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int n = 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = (nl == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    std::size_t pct = line.find('%');
    if (pct != std::string_view::npos) line = line.substr(0, pct);
    lines.push_back({line, n});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
    ++n;
  }
  return lines;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

// Matches `mpc.<name>` at the start of a trimmed line with a proper token
// boundary, so "mpc.gen" does not match "mpc.gencost". Returns the rest
// of the line after the matched name.
inline bool match_assignment(std::string_view line, std::string_view name,
                             std::string_view& rest) {
  std::string_view t = trim(line);
  std::string prefix = "mpc." + std::string(name);
  if (t.substr(0, prefix.size()) != prefix) return false;
  if (t.size() > prefix.size() && ident_char(t[prefix.size()])) return false;
  rest = trim(t.substr(prefix.size()));
  return rest.substr(0, 1) == "=";
}

inline double parse_number(std::string_view tok, int line_no) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw NonNumericToken(std::string(tok), line_no);
  return value;
}

// Parses whitespace-separated numbers, with ';' closing a row. Several
// rows may share a physical line.
inline void parse_row_text(std::string_view text, int line_no,
                           std::vector<std::vector<double>>& rows,
                           std::vector<double>& current,
                           std::vector<int>& row_lines) {
  std::size_t i = 0;
  auto flush = [&] {
    if (!current.empty()) {
      rows.push_back(std::move(current));
      row_lines.push_back(line_no);
      current.clear();
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
      ++i;
    } else if (c == ';') {
      flush();
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != ' ' && text[j] != '\t' &&
             text[j] != '\r' && text[j] != ';' && text[j] != ',')
        ++j;
      current.push_back(parse_number(text.substr(i, j - i), line_no));
      i = j;
    }
  }
}

}  // namespace detail

/// Parses MATPOWER case text into raw numeric matrices. Total over the
/// grammar: every failure names the offending section or line.
inline RawCase parse_case(std::string_view text) {
  using namespace detail;
  RawCase raw;
  bool have_base = false, have_bus = false, have_gen = false, have_branch = false;

  auto lines = split_lines(text);
  std::size_t li = 0;

  // `function mpc = caseNNN` supplies the case name when present.
  for (const auto& line : lines) {
    std::string_view t = trim(line.text);
    if (t.substr(0, 8) == "function") {
      std::size_t eq = t.find('=');
      if (eq != std::string_view::npos) raw.name = std::string(trim(t.substr(eq + 1)));
      break;
    }
  }

  auto parse_matrix = [&](std::string_view rest, const char* section,
                          std::vector<std::vector<double>>& rows,
                          std::vector<int>& row_lines, std::size_t min_cols) {
    // rest starts with '=', matrix body may begin on the same line
    rest = trim(rest.substr(1));
    if (rest.substr(0, 1) != "[")
      throw MalformedRow(section, lines[li].number);
    rest = rest.substr(1);
    std::vector<double> current;
    int start_line = lines[li].number;
    for (;;) {
      std::size_t close = rest.find(']');
      std::string_view body = (close == std::string_view::npos) ? rest : rest.substr(0, close);
      parse_row_text(body, lines[li].number, rows, current, row_lines);
      if (close != std::string_view::npos) {
        if (!current.empty()) {  // final row without trailing ';'
          rows.push_back(std::move(current));
          row_lines.push_back(lines[li].number);
          current.clear();
        }
        break;
      }
      if (++li >= lines.size())
        throw MalformedRow(section, start_line);  // unterminated matrix
      rest = lines[li].text;
    }
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (rows[r].size() < min_cols) throw MalformedRow(section, row_lines[r]);
  };

  std::vector<int> bus_lines, gen_lines, branch_lines;
  for (li = 0; li < lines.size(); ++li) {
    std::string_view rest;
    if (match_assignment(lines[li].text, "baseMVA", rest)) {
      rest = trim(rest.substr(1));
      std::size_t semi = rest.find(';');
      if (semi != std::string_view::npos) rest = trim(rest.substr(0, semi));
      raw.base_mva = parse_number(rest, lines[li].number);
      if (!(raw.base_mva > 0.0)) throw MalformedRow("baseMVA", lines[li].number);
      have_base = true;
    } else if (match_assignment(lines[li].text, "bus", rest)) {
      parse_matrix(rest, "bus", raw.bus_rows, bus_lines, 13);
      have_bus = true;
    } else if (match_assignment(lines[li].text, "gen", rest)) {
      parse_matrix(rest, "gen", raw.gen_rows, gen_lines, 10);
      have_gen = true;
    } else if (match_assignment(lines[li].text, "branch", rest)) {
      parse_matrix(rest, "branch", raw.branch_rows, branch_lines, 13);
      have_branch = true;
    }
  }

  if (!have_base) throw MissingSection("baseMVA");
  if (!have_bus) throw MissingSection("bus");
  if (!have_gen) throw MissingSection("gen");
  if (!have_branch) throw MissingSection("branch");
  return raw;
}

/// Validates raw matrices into an immutable network model with contiguous
/// 0-based internal indexing in file order.
inline NetworkCase validate(const RawCase& raw) {
  NetworkCase net;
  net.name = raw.name;
  net.base_mva = raw.base_mva;

  int slack_count = 0;
  for (const auto& row : raw.bus_rows) {
    Bus b;
    b.id = static_cast<int>(row[0]);
    int type = static_cast<int>(row[1]);
    switch (type) {
      case 1: b.btype = BusType::PQ; break;
      case 2: b.btype = BusType::PV; break;
      case 3: b.btype = BusType::Slack; ++slack_count; break;
      case 4: throw Error("isolated bus " + std::to_string(b.id) + " not supported");
      default: throw Error("unknown bus type " + std::to_string(type));
    }
    b.pd = row[2];
    b.qd = row[3];
    b.gs = row[4];
    b.bs = row[5];
    b.vm = row[7];
    b.va = row[8];
    b.base_kv = row[9];
    int idx = static_cast<int>(net.buses.size());
    if (!net.index_map.emplace(b.id, idx).second) throw DuplicateBusId(b.id);
    net.buses.push_back(b);
  }
  if (slack_count != 1) throw NoSlackBus(slack_count);

  for (const auto& row : raw.gen_rows) {
    Gen g;
    g.bus = static_cast<int>(row[0]);
    g.pg = row[1];
    g.qg = row[2];
    g.vg = row[5];
    g.status = row[7] > 0.0;
    if (net.index_map.find(g.bus) == net.index_map.end())
      throw Error("generator at unknown bus " + std::to_string(g.bus));
    net.gens.push_back(g);
  }

  int branch_idx = 0;
  for (const auto& row : raw.branch_rows) {
    Branch br;
    br.from = static_cast<int>(row[0]);
    br.to = static_cast<int>(row[1]);
    br.r = row[2];
    br.x = row[3];
    br.b = row[4];
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    br.shift = row[9];
    br.status = row[10] > 0.0;
    if (net.index_map.find(br.from) == net.index_map.end() ||
        net.index_map.find(br.to) == net.index_map.end())
      throw DanglingBranch(br.from, br.to);
    if (br.status && br.x == 0.0) throw ZeroReactanceBranch(branch_idx);
    net.branches.push_back(br);
    ++branch_idx;
  }

  // every PV / slack bus needs at least one in-service generator
  std::vector<bool> has_gen(net.buses.size(), false);
  for (const auto& g : net.gens)
    if (g.status) has_gen[static_cast<std::size_t>(net.internal(g.bus))] = true;
  for (int i = 0; i < net.size(); ++i)
    if (net.buses[i].btype != BusType::PQ && !has_gen[static_cast<std::size_t>(i)])
      throw MissingGenerator(net.buses[i].id);

  return net;
}

inline NetworkCase load_case(std::string_view text) { return validate(parse_case(text)); }

/// Emits case-file text that parses back to an identical NetworkCase.
/// Numbers use %.17g so doubles survive the round trip exactly.
inline std::string serialize(const NetworkCase& net) {
  std::string out;
  out.reserve(64 * (net.buses.size() + net.gens.size() + net.branches.size()));
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += '\t';
    out += buf;
  };

  out += "function mpc = " + (net.name.empty() ? std::string("case") : net.name) + "\n";
  out += "mpc.version = '2';\n";
  std::snprintf(buf, sizeof(buf), "%.17g", net.base_mva);
  out += "mpc.baseMVA = ";
  out += buf;
  out += ";\n";

  out += "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  out += "mpc.bus = [\n";
  for (const auto& b : net.buses) {
    num(b.id);
    num(static_cast<double>(b.btype));
    num(b.pd); num(b.qd); num(b.gs); num(b.bs);
    num(1);  // area, not modeled
    num(b.vm); num(b.va); num(b.base_kv);
    num(1);           // zone, not modeled
    num(1.1); num(0.9);  // voltage limits, not modeled
    out += ";\n";
  }
  out += "];\n";

  out += "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  out += "mpc.gen = [\n";
  for (const auto& g : net.gens) {
    num(g.bus);
    num(g.pg); num(g.qg);
    num(9999); num(-9999);  // Q limits, not enforced
    num(g.vg);
    num(net.base_mva);
    num(g.status ? 1 : 0);
    num(9999); num(-9999);  // P limits, not enforced
    out += ";\n";
  }
  out += "];\n";

  out += "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n";
  out += "mpc.branch = [\n";
  for (const auto& br : net.branches) {
    num(br.from); num(br.to);
    num(br.r); num(br.x); num(br.b);
    num(0); num(0); num(0);  // ratings, not modeled
    num(br.tap); num(br.shift);
    num(br.status ? 1 : 0);
    num(-360); num(360);
    out += ";\n";
  }
  out += "];\n";
  return out;
}

}  // namespace hotpf
