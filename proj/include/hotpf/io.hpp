#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hotpf/errors.hpp"

// All persisted artifacts share one container layout: a single-line JSON
// header terminated by '\n', followed by raw little-endian float64 blocks.
// The header names every block and its length, so files round-trip
// bit-exactly and stay inspectable with `head -1`.

namespace hotpf::io {

using json = nlohmann::json;

inline void write_header(std::ostream& os, const json& header) {
  os << header.dump() << '\n';
}

inline json read_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("cannot read file header");
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw IoError("file header is not valid JSON");
  return j;
}

inline void write_f64(std::ostream& os, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i], 8);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      os.write(buf, 8);
    }
  }
}

inline void write_f64(std::ostream& os, const std::vector<double>& v) {
  write_f64(os, v.data(), v.size());
}

inline std::vector<double> read_f64(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      char buf[8];
      is.read(buf, 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
      std::memcpy(&v[i], &bits, 8);
    }
  }
  if (!is) throw IoError("payload truncated: expected " + std::to_string(n) + " float64 values");
  return v;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return text;
}

}  // namespace hotpf::io
