#pragma once

/// @file checkpoint.hpp
/// @brief Binary run archives: tagged sequences of float64 array records
///        carrying grid fields, body poses, energy ledgers and trajectory
///        samples.  Round trips are bit-exact, writes are atomic, and a
///        truncated or foreign file is rejected rather than misread.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfsi/ns_solver.hpp"

namespace kfsi {

// =========================================================================
// Array records
// =========================================================================
//
// One record:  magic "KFSI" | u32 version | u32 nx | u32 ny | nx*ny f64,
// little-endian, row-major (index i outermost).  A file is a sequence of
// records; higher-level readers know the sequence layout from the leading
// meta record.

constexpr std::uint32_t kRecordVersion = 1;

namespace detail_ck {

inline void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little)
    throw std::runtime_error("checkpoint: this build only writes little-endian hosts");
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  char b[4];
  is.read(b, 4);
  if (is.gcount() != 4) throw std::runtime_error("checkpoint: truncated record header");
  std::uint32_t v;
  std::memcpy(&v, b, 4);
  return v;
}

}  // namespace detail_ck

inline void write_record(std::ostream& os, const Eigen::ArrayXXd& a) {
  detail_ck::require_little_endian();
  os.write("KFSI", 4);
  detail_ck::put_u32(os, kRecordVersion);
  detail_ck::put_u32(os, static_cast<std::uint32_t>(a.rows()));
  detail_ck::put_u32(os, static_cast<std::uint32_t>(a.cols()));
  std::vector<char> buf(static_cast<size_t>(a.rows()) * static_cast<size_t>(a.cols()) * 8);
  char* p = buf.data();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      double v = a(i, j);
      std::memcpy(p, &v, 8);
      p += 8;
    }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline Eigen::ArrayXXd read_record(std::istream& is) {
  detail_ck::require_little_endian();
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4) throw std::runtime_error("checkpoint: truncated record header");
  if (std::memcmp(magic, "KFSI", 4) != 0)
    throw std::runtime_error("checkpoint: bad record magic");
  std::uint32_t version = detail_ck::get_u32(is);
  if (version != kRecordVersion)
    throw std::runtime_error("checkpoint: unsupported record version " + std::to_string(version));
  std::uint32_t nx = detail_ck::get_u32(is);
  std::uint32_t ny = detail_ck::get_u32(is);
  if (nx == 0 || ny == 0 || static_cast<std::uint64_t>(nx) * ny > (1ull << 30))
    throw std::runtime_error("checkpoint: implausible record dimensions");
  Eigen::ArrayXXd a(nx, ny);
  std::vector<char> buf(static_cast<size_t>(nx) * ny * 8);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("checkpoint: truncated record payload");
  const char* p = buf.data();
  for (std::uint32_t i = 0; i < nx; ++i)
    for (std::uint32_t j = 0; j < ny; ++j) {
      double v;
      std::memcpy(&v, p, 8);
      p += 8;
      a(i, j) = v;
    }
  return a;
}

// =========================================================================
// Run archives
// =========================================================================

/// Complete persisted run: either a finished trajectory or an in-flight
/// state that a continuation loop can pick up without changing a single
/// bit of the eventual result.
struct RunArchive {
  std::uint64_t config_key = 0;  // identity of the producing configuration
  Real nu = 0;                   // 0 for inviscid runs
  Real L = 0;                    // half box width; n comes from field shapes
  Real kinetic0 = 0;
  int steps_taken = 0;
  bool finished = false;
  NSState state;             // current integration state
  EnergyLedgerRow acc;       // running accumulators (dissipation, work)
  StripTotals strips;        // running strip ledgers
  Real last_strip_rate = 0;  // most recent per-step strip rate
  std::vector<NSState> states;        // sampled trajectory
  std::vector<EnergyLedgerRow> rows;  // aligned ledger rows

  Trajectory trajectory() const {
    Trajectory t;
    t.states = states;
    t.rows = rows;
    t.strips = strips;
    t.kinetic0 = kinetic0;
    t.steps_taken = steps_taken;
    return t;
  }
};

namespace detail_ck {

constexpr double kArchiveSchema = 3;

inline Eigen::ArrayXXd row_vec(std::initializer_list<double> v) {
  Eigen::ArrayXXd a(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) a(0, k++) = x;
  return a;
}

inline Eigen::ArrayXXd pack_ledger(const EnergyLedgerRow& r) {
  return row_vec({r.t, r.kinetic, r.diss_deform, r.diss_curl, r.diss_grad, r.work,
                  r.strip_deform_rate, r.ell_x, r.ell_y, r.r, r.h_x, r.h_y, r.theta});
}

inline EnergyLedgerRow unpack_ledger(const Eigen::ArrayXXd& a) {
  if (a.rows() != 1 || a.cols() != 13)
    throw std::runtime_error("checkpoint: malformed ledger record");
  EnergyLedgerRow r;
  r.t = a(0, 0);
  r.kinetic = a(0, 1);
  r.diss_deform = a(0, 2);
  r.diss_curl = a(0, 3);
  r.diss_grad = a(0, 4);
  r.work = a(0, 5);
  r.strip_deform_rate = a(0, 6);
  r.ell_x = a(0, 7);
  r.ell_y = a(0, 8);
  r.r = a(0, 9);
  r.h_x = a(0, 10);
  r.h_y = a(0, 11);
  r.theta = a(0, 12);
  return r;
}

inline Eigen::ArrayXXd pack_body(const NSState& s) {
  return row_vec({s.t, s.body.ell.x(), s.body.ell.y(), s.body.r, s.body.theta, s.body.h.x(),
                  s.body.h.y()});
}

inline void unpack_body(const Eigen::ArrayXXd& a, NSState& s) {
  if (a.rows() != 1 || a.cols() != 7)
    throw std::runtime_error("checkpoint: malformed body record");
  s.t = a(0, 0);
  s.body.ell = Vec2(a(0, 1), a(0, 2));
  s.body.r = a(0, 3);
  s.body.theta = a(0, 4);
  s.body.h = Vec2(a(0, 5), a(0, 6));
}

inline void write_state(std::ostream& os, const NSState& s) {
  write_record(os, pack_body(s));
  write_record(os, s.w.u);
  write_record(os, s.w.v);
  write_record(os, s.p.data());
}

inline NSState read_state(std::istream& is, const Grid& g) {
  NSState s(g);
  Eigen::ArrayXXd body = read_record(is);
  unpack_body(body, s);
  s.w.u = read_record(is);
  s.w.v = read_record(is);
  s.p.data() = read_record(is);
  if (s.w.u.rows() != g.n + 1 || s.w.u.cols() != g.n || s.w.v.rows() != g.n ||
      s.w.v.cols() != g.n + 1 || s.p.data().rows() != g.n || s.p.data().cols() != g.n)
    throw std::runtime_error("checkpoint: field dimensions do not match the header grid");
  return s;
}

}  // namespace detail_ck

inline void save_archive(const std::filesystem::path& path, const RunArchive& a) {
  namespace fs = std::filesystem;
  const int n = static_cast<int>(a.state.p.data().rows());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    using detail_ck::row_vec;
    write_record(os, row_vec({detail_ck::kArchiveSchema, static_cast<double>(n), a.L, a.nu,
                              a.kinetic0, static_cast<double>(a.steps_taken),
                              a.finished ? 1.0 : 0.0, a.last_strip_rate,
                              static_cast<double>(a.config_key >> 32),
                              static_cast<double>(a.config_key & 0xffffffffu),
                              static_cast<double>(a.states.size())}));
    write_record(os, row_vec({a.strips.strip_deform, a.strips.strip_curl, a.strips.strip_grad,
                              a.strips.total_deform, a.strips.under_resolved ? 1.0 : 0.0}));
    write_record(os, detail_ck::pack_ledger(a.acc));
    detail_ck::write_state(os, a.state);
    for (size_t k = 0; k < a.states.size(); ++k) {
      detail_ck::write_state(os, a.states[k]);
      write_record(os, detail_ck::pack_ledger(a.rows[k]));
    }
  }
  fs::rename(tmp, path);
}

inline RunArchive load_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  Eigen::ArrayXXd meta = read_record(is);
  if (meta.rows() != 1 || meta.cols() != 11 || meta(0, 0) != detail_ck::kArchiveSchema)
    throw std::runtime_error("checkpoint: unsupported archive layout");
  RunArchive a;
  const int n = static_cast<int>(meta(0, 1));
  a.L = meta(0, 2);
  a.nu = meta(0, 3);
  a.kinetic0 = meta(0, 4);
  a.steps_taken = static_cast<int>(meta(0, 5));
  a.finished = meta(0, 6) != 0;
  a.last_strip_rate = meta(0, 7);
  a.config_key = (static_cast<std::uint64_t>(meta(0, 8)) << 32) |
                 static_cast<std::uint64_t>(meta(0, 9));
  const size_t nsamples = static_cast<size_t>(meta(0, 10));
  if (n < 2 || a.L <= 0) throw std::runtime_error("checkpoint: implausible archive grid");
  Grid g(n, a.L);
  Eigen::ArrayXXd strips = read_record(is);
  if (strips.rows() != 1 || strips.cols() != 5)
    throw std::runtime_error("checkpoint: malformed strip record");
  a.strips.strip_deform = strips(0, 0);
  a.strips.strip_curl = strips(0, 1);
  a.strips.strip_grad = strips(0, 2);
  a.strips.total_deform = strips(0, 3);
  a.strips.under_resolved = strips(0, 4) != 0;
  a.acc = detail_ck::unpack_ledger(read_record(is));
  a.state = detail_ck::read_state(is, g);
  a.states.reserve(nsamples);
  a.rows.reserve(nsamples);
  for (size_t k = 0; k < nsamples; ++k) {
    a.states.push_back(detail_ck::read_state(is, g));
    a.rows.push_back(detail_ck::unpack_ledger(read_record(is)));
  }
  return a;
}

}  // namespace kfsi
