#pragma once

/// @file config.hpp
/// @brief Run configuration: a strict JSON schema with dot-path override
///        support, defaulting, semantic validation that refuses unresolvable
///        strip widths by naming the minimum grid, and a canonical echo whose
///        hash keys cached run archives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfsi/corrector.hpp"
#include "kfsi/euler_reference.hpp"
#include "kfsi/ns_solver.hpp"

namespace kfsi {

// =========================================================================
// Modes
// =========================================================================

enum class RunMode { ns, euler, frozen_body, sweep, diagnose, corrector, identities };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::ns: return "ns";
    case RunMode::euler: return "euler";
    case RunMode::frozen_body: return "frozen_body";
    case RunMode::sweep: return "sweep";
    case RunMode::diagnose: return "diagnose";
    case RunMode::corrector: return "corrector";
    case RunMode::identities: return "identities";
  }
  return "ns";
}

inline RunMode mode_from_string(const std::string& s) {
  for (RunMode m : {RunMode::ns, RunMode::euler, RunMode::frozen_body, RunMode::sweep,
                    RunMode::diagnose, RunMode::corrector, RunMode::identities})
    if (to_string(m) == s) return m;
  throw std::invalid_argument(
      "config: unknown mode '" + s +
      "'; expected one of ns, euler, frozen_body, sweep, diagnose, corrector, identities");
}

// =========================================================================
// Configuration record
// =========================================================================

struct RunConfig {
  RunMode mode = RunMode::ns;
  // grid
  int n = 0;
  Real L = 8.0;
  // body
  std::string shape = "disk";
  Real radius = 0;
  Real density = 0;
  Vec2 ell0 = Vec2::Zero();
  Real r0 = 0;
  // fluid
  std::vector<Real> nu_list;
  Real penalty_eps = 1e-8;
  // time
  Real T = 0;
  Real cfl = 0.5;
  Real dt_max = 0.05;
  int sample_stride = 8;
  // forcing
  Vec2 gravity = Vec2(0, -9.8);
  // strip
  Real kato_c = 64.0;
  // corrector
  XiProfile xi_profile = XiProfile::quadratic;
  Real corrector_t0 = 0.3;
  // output
  std::string out_dir = "out";
  int checkpoint_stride = 0;
  // execution
  int workers = 1;
  std::uint64_t seed = 1000;

  Grid grid() const { return Grid(n, L); }
  BodyGeometry body() const { return BodyGeometry::disk(radius, density); }
  Real nu_finest() const { return nu_list.back(); }

  NSConfig ns_config(Real nu, bool frozen) const {
    NSConfig c;
    c.grid = grid();
    c.bc = BoxBC::dirichlet;
    c.has_body = true;
    c.body = body();
    c.nu = nu;
    c.gravity = gravity;
    c.penalty_eps = penalty_eps;
    c.cfl = cfl;
    c.dt_max = dt_max;
    c.T = T;
    c.sample_stride = sample_stride;
    c.frozen_body = frozen;
    c.kato_c = kato_c;
    c.ell0 = ell0;
    c.r0 = r0;
    return c;
  }

  EulerConfig euler_config() const {
    EulerConfig c;
    c.grid = grid();
    c.bc = BoxBC::freeslip;
    c.has_body = true;
    c.body = body();
    c.gravity = gravity;
    c.cfl = cfl;
    c.dt_max = dt_max;
    c.T = T;
    c.sample_stride = sample_stride;
    c.frozen_body = false;
    c.ell0 = ell0;
    c.r0 = r0;
    return c;
  }

  nlohmann::json canonical() const;
  std::uint64_t run_key(Real nu, const std::string& kind) const;
};

// =========================================================================
// Schema walk
// =========================================================================

namespace detail_cfg {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

inline Real need_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail("'" + path + "' must be a number");
  return j.get<Real>();
}

inline int need_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail("'" + path + "' must be an integer");
  return j.get<int>();
}

inline std::string need_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail("'" + path + "' must be a string");
  return j.get<std::string>();
}

inline Vec2 need_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail("'" + path + "' must be an array of two numbers");
  return Vec2(j[0].get<Real>(), j[1].get<Real>());
}

inline std::vector<Real> need_num_array(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail("'" + path + "' must be a non-empty array of numbers");
  std::vector<Real> out;
  for (const auto& e : j) {
    if (!e.is_number()) fail("'" + path + "' must contain only numbers");
    out.push_back(e.get<Real>());
  }
  return out;
}

/// Rejects keys outside the known tree, naming the full dot path.
inline void reject_unknown(const json& j, const json& schema, const std::string& prefix) {
  for (const auto& [key, val] : j.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) fail("unknown key '" + path + "'");
    if (schema[key].is_object()) {
      if (!val.is_object()) fail("'" + path + "' must be an object");
      reject_unknown(val, schema[key], path);
    }
  }
}

inline const json& schema_tree() {
  static const json tree = {
      {"mode", true},
      {"grid", {{"n", true}, {"L", true}}},
      {"body",
       {{"shape", true}, {"radius", true}, {"density", true}, {"ell0", true}, {"r0", true}}},
      {"fluid", {{"nu_list", true}, {"penalty_eps", true}}},
      {"time", {{"T", true}, {"cfl", true}, {"dt_max", true}, {"sample_stride", true}}},
      {"gravity", true},
      {"kato", {{"c", true}}},
      {"corrector", {{"xi_profile", true}, {"t0", true}}},
      {"output", {{"dir", true}, {"checkpoint_stride", true}}},
      {"workers", true},
      {"seed", true},
  };
  return tree;
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

inline std::string num_str(Real v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail_cfg

// =========================================================================
// Parsing and validation
// =========================================================================

inline RunConfig config_from_json(const nlohmann::json& j) {
  using namespace detail_cfg;
  if (!j.is_object()) fail("top level must be an object");
  reject_unknown(j, schema_tree(), "");

  RunConfig c;
  if (j.contains("mode")) c.mode = mode_from_string(need_str(j["mode"], "mode"));

  if (!j.contains("grid") || !j["grid"].contains("n")) fail("missing required key 'grid.n'");
  c.n = need_int(j["grid"]["n"], "grid.n");
  if (j["grid"].contains("L")) c.L = need_num(j["grid"]["L"], "grid.L");

  if (!j.contains("body")) fail("missing required key 'body.radius'");
  const auto& jb = j["body"];
  if (jb.contains("shape")) c.shape = need_str(jb["shape"], "body.shape");
  if (!jb.contains("radius")) fail("missing required key 'body.radius'");
  c.radius = need_num(jb["radius"], "body.radius");
  if (!jb.contains("density")) fail("missing required key 'body.density'");
  c.density = need_num(jb["density"], "body.density");
  if (jb.contains("ell0")) c.ell0 = need_vec2(jb["ell0"], "body.ell0");
  if (jb.contains("r0")) c.r0 = need_num(jb["r0"], "body.r0");

  if (!j.contains("fluid") || !j["fluid"].contains("nu_list"))
    fail("missing required key 'fluid.nu_list'");
  c.nu_list = need_num_array(j["fluid"]["nu_list"], "fluid.nu_list");
  if (j["fluid"].contains("penalty_eps"))
    c.penalty_eps = need_num(j["fluid"]["penalty_eps"], "fluid.penalty_eps");

  if (!j.contains("time") || !j["time"].contains("T")) fail("missing required key 'time.T'");
  const auto& jt = j["time"];
  c.T = need_num(jt["T"], "time.T");
  if (jt.contains("cfl")) c.cfl = need_num(jt["cfl"], "time.cfl");
  if (jt.contains("dt_max")) c.dt_max = need_num(jt["dt_max"], "time.dt_max");
  if (jt.contains("sample_stride")) c.sample_stride = need_int(jt["sample_stride"], "time.sample_stride");

  if (j.contains("gravity")) c.gravity = need_vec2(j["gravity"], "gravity");
  if (j.contains("kato") && j["kato"].contains("c")) c.kato_c = need_num(j["kato"]["c"], "kato.c");

  if (j.contains("corrector")) {
    const auto& jc = j["corrector"];
    if (jc.contains("xi_profile")) {
      std::string p = need_str(jc["xi_profile"], "corrector.xi_profile");
      if (p != "quadratic")
        fail("corrector.xi_profile '" + p + "' is not implemented; available: quadratic");
      c.xi_profile = XiProfile::quadratic;
    }
    if (jc.contains("t0")) c.corrector_t0 = need_num(jc["t0"], "corrector.t0");
  }

  if (j.contains("output")) {
    const auto& jo = j["output"];
    if (jo.contains("dir")) c.out_dir = need_str(jo["dir"], "output.dir");
    if (jo.contains("checkpoint_stride"))
      c.checkpoint_stride = need_int(jo["checkpoint_stride"], "output.checkpoint_stride");
  }

  if (j.contains("workers")) c.workers = need_int(j["workers"], "workers");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) fail("'seed' must be an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  // ---- semantic checks -------------------------------------------------
  if (c.n < 8) fail("grid.n must be at least 8");
  if (c.L <= 0) fail("grid.L must be positive");
  if (c.shape != "disk") fail("body.shape '" + c.shape + "' is not implemented; available: disk");
  if (c.radius <= 0) fail("body.radius must be positive");
  if (c.radius >= c.L) fail("body.radius must be smaller than the box half-width grid.L");
  if (c.density <= 0) fail("body.density must be positive");
  for (size_t k = 0; k < c.nu_list.size(); ++k)
    if (c.nu_list[k] <= 0) fail("fluid.nu_list entries must be positive");
  for (size_t k = 1; k < c.nu_list.size(); ++k)
    if (!(c.nu_list[k] < c.nu_list[k - 1]))
      fail("fluid.nu_list must be strictly decreasing; entry " + std::to_string(k) + " (" +
           detail_cfg::num_str(c.nu_list[k]) + ") does not fall below entry " +
           std::to_string(k - 1) + " (" + detail_cfg::num_str(c.nu_list[k - 1]) + ")");
  if (c.penalty_eps <= 0) fail("fluid.penalty_eps must be positive");
  if (c.T <= 0) fail("time.T must be positive");
  if (c.cfl <= 0 || c.cfl > 1) fail("time.cfl must lie in (0, 1]");
  if (c.dt_max <= 0) fail("time.dt_max must be positive");
  if (c.sample_stride < 1) fail("time.sample_stride must be at least 1");
  if (c.kato_c <= 0) fail("kato.c must be positive");
  if (c.corrector_t0 < 0) fail("corrector.t0 must be non-negative");
  if (c.mode == RunMode::corrector && c.corrector_t0 > c.T)
    fail("corrector.t0 must lie inside [0, time.T]");
  if (c.checkpoint_stride < 0) fail("output.checkpoint_stride must be non-negative");
  if (c.workers < 1) fail("workers must be at least 1");

  const bool solves_flow = c.mode == RunMode::ns || c.mode == RunMode::euler ||
                           c.mode == RunMode::frozen_body || c.mode == RunMode::sweep;
  if (solves_flow && !detail_cfg::is_pow2(c.n))
    fail("grid.n must be a power of two for flow solves; got " + std::to_string(c.n));

  // Strip resolvability: the cutoff construction needs c*nu to span at
  // least four cells.  The corrector family keeps c*nu*n constant across
  // grid-matched members, so its rule binds at the largest viscosity; every
  // other mode must resolve the finest one.
  const bool uses_strips = c.mode != RunMode::euler && c.mode != RunMode::identities;
  if (uses_strips) {
    const Real nu_ref =
        c.mode == RunMode::corrector ? c.nu_list.front() : c.nu_list.back();
    const Real h = 2 * c.L / c.n;
    if (c.kato_c * nu_ref < 4 * h - 1e-12) {
      int n_min = static_cast<int>(std::ceil(8 * c.L / (c.kato_c * nu_ref) - 1e-9));
      if (solves_flow) n_min = detail_cfg::next_pow2(n_min);
      fail("the strip at " + std::string(c.mode == RunMode::corrector ? "the largest" : "the finest") +
           " viscosity spans fewer than four cells: c*nu = " +
           detail_cfg::num_str(c.kato_c * nu_ref) + ", h = " + detail_cfg::num_str(h) +
           "; raise grid.n to at least " + std::to_string(n_min));
    }
    if (c.mode == RunMode::corrector) {
      for (Real nu : c.nu_list) {
        Real exact = c.n * (c.nu_list.front() / nu);
        if (std::abs(exact - std::round(exact)) > 1e-9 * exact)
          fail("corrector family member for nu = " + detail_cfg::num_str(nu) +
               " needs a non-integer grid (n = " + detail_cfg::num_str(exact) +
               "); choose viscosities in integer ratio to the largest");
      }
    }
  }
  return c;
}

// =========================================================================
// Overrides
// =========================================================================

/// Applies "path.to.key=value" onto the raw JSON before validation; the
/// value is parsed as JSON when possible and as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: override '" + assignment +
                                "' is not of the form path.to.key=value");
  std::string path = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;  // bare words become strings
  }
  nlohmann::json* node = &j;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty())
      throw std::invalid_argument("config: override path '" + path + "' has an empty segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline RunConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

inline RunConfig load_config_file(const std::filesystem::path& path,
                                  const std::vector<std::string>& overrides = {}) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), overrides);
}

// =========================================================================
// Canonical echo and cache keys
// =========================================================================

inline nlohmann::json RunConfig::canonical() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["grid"] = {{"n", n}, {"L", L}};
  j["body"] = {{"shape", shape},
               {"radius", radius},
               {"density", density},
               {"ell0", {ell0.x(), ell0.y()}},
               {"r0", r0}};
  j["fluid"] = {{"nu_list", nu_list}, {"penalty_eps", penalty_eps}};
  j["time"] = {{"T", T}, {"cfl", cfl}, {"dt_max", dt_max}, {"sample_stride", sample_stride}};
  j["gravity"] = {gravity.x(), gravity.y()};
  j["kato"] = {{"c", kato_c}};
  j["corrector"] = {{"xi_profile", "quadratic"}, {"t0", corrector_t0}};
  j["output"] = {{"dir", out_dir}, {"checkpoint_stride", checkpoint_stride}};
  j["workers"] = workers;
  j["seed"] = seed;
  return j;
}

/// Keys one solver run: the experiment-defining fields plus the specific
/// viscosity and run kind.  Execution details (output paths, worker count,
/// checkpoint cadence, top-level mode) do not enter, so moving an output
/// tree or re-running under a different mode reuses finished archives.
inline std::uint64_t RunConfig::run_key(Real nu, const std::string& kind) const {
  nlohmann::json j = canonical();
  j.erase("output");
  j.erase("workers");
  j.erase("mode");
  j.erase("seed");
  j["fluid"].erase("nu_list");
  char nubuf[40];
  std::snprintf(nubuf, sizeof nubuf, "%.17g", static_cast<double>(nu));
  std::string text = j.dump() + "|kind=" + kind + "|nu=" + nubuf;
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace kfsi
