#pragma once

#include <stdexcept>
#include <string>

namespace hotpf {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- case-file parsing ---
struct MissingSection : Error {
  explicit MissingSection(const std::string& name)
      : Error("missing section: " + name), section(name) {}
  std::string section;
};

struct MalformedRow : Error {
  MalformedRow(const std::string& sec, int ln)
      : Error("malformed row in " + sec + " at line " + std::to_string(ln)),
        section(sec), line(ln) {}
  std::string section;
  int line;
};

struct NonNumericToken : Error {
  NonNumericToken(const std::string& tok, int ln)
      : Error("non-numeric token '" + tok + "' at line " + std::to_string(ln)),
        token(tok), line(ln) {}
  std::string token;
  int line;
};

// --- network validation ---
struct NoSlackBus : Error {
  explicit NoSlackBus(int n)
      : Error(n == 0 ? std::string("no slack bus")
                     : "expected exactly one slack bus, found " + std::to_string(n)),
        count(n) {}
  int count;
};

struct DuplicateBusId : Error {
  explicit DuplicateBusId(int bus)
      : Error("duplicate bus id " + std::to_string(bus)), id(bus) {}
  int id;
};

struct DanglingBranch : Error {
  DanglingBranch(int f, int t)
      : Error("branch endpoint not in bus list: " + std::to_string(f) + "-" +
              std::to_string(t)),
        from(f), to(t) {}
  int from;
  int to;
};

struct ZeroReactanceBranch : Error {
  explicit ZeroReactanceBranch(int i)
      : Error("in-service branch " + std::to_string(i) + " has x = 0"), index(i) {}
  int index;
};

struct MissingGenerator : Error {
  explicit MissingGenerator(int bus)
      : Error("PV/slack bus " + std::to_string(bus) + " has no in-service generator"),
        id(bus) {}
  int id;
};

// --- solvers ---
struct SingularDcMatrix : Error {
  SingularDcMatrix() : Error("DC susceptance matrix is singular (disconnected network?)") {}
};

struct SingularJacobian : Error {
  explicit SingularJacobian(int it)
      : Error("singular Jacobian at iteration " + std::to_string(it)), iteration(it) {}
  int iteration;
};

// --- generic contract violations ---
struct ShapeMismatch : Error {
  using Error::Error;
};

struct MissingInput : Error {
  using Error::Error;
};

struct NonFiniteLoss : Error {
  NonFiniteLoss(int ep, int ba)
      : Error("non-finite loss at epoch " + std::to_string(ep) + ", batch " +
              std::to_string(ba)),
        epoch(ep), batch(ba) {}
  int epoch;
  int batch;
};

struct UnconvergedTarget : Error {
  explicit UnconvergedTarget(int sample)
      : Error("sample " + std::to_string(sample) + " did not converge; cannot be a target"),
        k(sample) {}
  int k;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace hotpf
