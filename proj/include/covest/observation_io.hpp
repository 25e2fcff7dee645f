#pragma once

// Observation matrix files.
//
// Binary (.bin):
//   bytes 0..7   magic "COVOBS01"
//   uint64 N, uint64 M, uint64 seed      (little-endian)
//   N*M entries row-major, each (re, im) as IEEE-754 float64 little-endian
//
// CSV (.csv):
//   line 1  "N,M,seed"
//   line 2  the three integers
//   then N rows of 2M values: re_0,im_0,re_1,im_1,...

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "covest/ensemble.hpp"
#include "covest/error.hpp"

namespace covest {

struct ObservationFile {
  ComplexMatrix y;
  std::uint64_t seed = 0;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");

inline void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw Error(ErrorCode::io, "truncated observation header");
  return v;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline constexpr char kObservationMagic[8] = {'C', 'O', 'V', 'O', 'B', 'S', '0', '1'};

inline void write_observations_binary(std::ostream& os, const ComplexMatrix& y, std::uint64_t seed) {
  os.write(kObservationMagic, 8);
  detail::write_u64(os, static_cast<std::uint64_t>(y.rows()));
  detail::write_u64(os, static_cast<std::uint64_t>(y.cols()));
  detail::write_u64(os, seed);
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      detail::write_f64(os, y(r, c).real());
      detail::write_f64(os, y(r, c).imag());
    }
  if (!os) throw Error(ErrorCode::io, "failed writing observations");
}

inline ObservationFile read_observations_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kObservationMagic, 8) != 0)
    throw Error(ErrorCode::io, "not a covest observation file");
  const std::uint64_t n = detail::read_u64(is);
  const std::uint64_t m = detail::read_u64(is);
  ObservationFile out;
  out.seed = detail::read_u64(is);
  if (n == 0 || m == 0 || n > (1u << 20) || m > (1u << 20))
    throw Error(ErrorCode::io, "implausible observation dimensions");
  out.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<double> buf(2 * m);
  for (Eigen::Index r = 0; r < out.y.rows(); ++r) {
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!is) throw Error(ErrorCode::io, "truncated observation payload");
    for (Eigen::Index c = 0; c < out.y.cols(); ++c)
      out.y(r, c) = {buf[2 * static_cast<std::size_t>(c)], buf[2 * static_cast<std::size_t>(c) + 1]};
  }
  return out;
}

inline void write_observations_csv(std::ostream& os, const ComplexMatrix& y, std::uint64_t seed) {
  os << "N,M,seed\n" << y.rows() << ',' << y.cols() << ',' << seed << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      if (c > 0) os << ',';
      os << y(r, c).real() << ',' << y(r, c).imag();
    }
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::io, "failed writing observations");
}

inline ObservationFile read_observations_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("N,M,seed", 0) != 0)
    throw Error(ErrorCode::io, "missing CSV header 'N,M,seed'");
  if (!std::getline(is, line)) throw Error(ErrorCode::io, "missing CSV dimensions");
  std::uint64_t n = 0, m = 0;
  ObservationFile out;
  {
    std::istringstream ls(line);
    char c1 = 0, c2 = 0;
    if (!(ls >> n >> c1 >> m >> c2 >> out.seed) || c1 != ',' || c2 != ',')
      throw Error(ErrorCode::io, "malformed CSV dimensions");
  }
  if (n == 0 || m == 0) throw Error(ErrorCode::io, "empty observation matrix");
  out.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < out.y.rows(); ++r) {
    if (!std::getline(is, line)) throw Error(ErrorCode::io, "truncated CSV payload");
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::io, "non-numeric CSV cell: " + cell);
      }
    }
    if (vals.size() != 2 * m) throw Error(ErrorCode::io, "CSV row has wrong length");
    for (Eigen::Index c = 0; c < out.y.cols(); ++c)
      out.y(r, c) = {vals[2 * static_cast<std::size_t>(c)], vals[2 * static_cast<std::size_t>(c) + 1]};
  }
  return out;
}

/// Dispatches on extension: ".csv" is text, anything else binary.
inline void save_observations(const std::string& path, const ComplexMatrix& y, std::uint64_t seed) {
  const bool csv = detail::ends_with(path, ".csv");
  std::ofstream os(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path);
  if (csv)
    write_observations_csv(os, y, seed);
  else
    write_observations_binary(os, y, seed);
}

inline ObservationFile load_observations(const std::string& path) {
  const bool csv = detail::ends_with(path, ".csv");
  std::ifstream is(path, csv ? std::ios::in : std::ios::in | std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path);
  return csv ? read_observations_csv(is) : read_observations_binary(is);
}

}  // namespace covest
