// Study orchestration: the eight named experiments behind the CLI and the
// C API. Each study is a pure function of (command, configuration) -> JSON
// report + CSV table; the only nondeterministic output byte is the report's
// "timestamp" field. Worker threads only partition independent Monte Carlo
// paths or fixture trials, and all reductions are fixed-shape pairwise sums
// over index-ordered slots, so results are identical for any thread count.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/lab.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "stpde/bessel.hpp"
#include "stpde/dual.hpp"
#include "stpde/fixtures.hpp"
#include "stpde/grid.hpp"
#include "stpde/heat_kernel.hpp"
#include "stpde/lattice.hpp"
#include "stpde/oracle.hpp"
#include "stpde/parametrix.hpp"
#include "stpde/quadrature.hpp"
#include "stpde/rng.hpp"
#include "stpde/sde.hpp"
#include "stpde/stats.hpp"

namespace stpde {

// ==========================================================================
// KVConfig
// ==========================================================================

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

KVConfig KVConfig::parse(const std::string& text) {
  KVConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + body +
                                  "'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

void KVConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool KVConfig::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

std::string KVConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KVConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string v = trim(it->second);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw std::invalid_argument("config key '" + key + "': '" + it->second +
                                "' is not a real number");
  return x;
}

long KVConfig::get_long(const std::string& key, long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string v = trim(it->second);
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw std::invalid_argument("config key '" + key + "': '" + it->second +
                                "' is not an integer");
  return x;
}

bool KVConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = trim(it->second);
  for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': '" + it->second +
                              "' is not a boolean");
}

std::vector<double> KVConfig::get_list(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) continue;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
      throw std::invalid_argument("config key '" + key + "': '" + item +
                                  "' is not a real number");
    out.push_back(x);
  }
  if (out.empty())
    throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

std::vector<std::string> lab_commands() {
  return {"calculus-check",  "kernel-validate",   "parametrix-validate",
          "dual-solve",      "simulate",          "stability-study",
          "convergence-study", "consistency-suite"};
}

std::string default_output_dir() {
  const char* v = std::getenv(kOutputDirEnvVar);
  if (v != nullptr && v[0] != '\0') return v;
  return ".";
}

// ==========================================================================
// shared study plumbing
// ==========================================================================

namespace {

using nlohmann::json;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string iso_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json make_report(const std::string& command, const KVConfig& cfg) {
  json j;
  j["command"] = command;
  json c = json::object();
  for (const auto& kv : cfg.entries()) c[kv.first] = kv.second;
  j["config"] = c;
  j["schema_version"] = kReportSchemaVersion;
  j["version"] = kVersionString;
  j["timestamp"] = iso_utc_now();
  return j;
}

LabResult finish(json& rep, std::string csv, const std::string& status,
                 const std::string& message) {
  rep["status"] = status;
  rep["message"] = message;
  LabResult r;
  r.status = status;
  r.message = message;
  r.csv = std::move(csv);
  r.exit_code = (status == "pass" || status == "inconclusive" ||
                 status == "oracle-limited")
                    ? 0
                    : 1;
  r.json = rep.dump(2) + "\n";
  return r;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Boundary boundary_from(const KVConfig& cfg, const std::string& key,
                       Boundary fallback) {
  const std::string dflt =
      fallback == Boundary::Periodic ? "periodic" : "zero-exterior";
  std::string v = cfg.get_string(key, dflt);
  for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "periodic") return Boundary::Periodic;
  if (v == "zero-exterior" || v == "zeroexterior" || v == "zero")
    return Boundary::ZeroExterior;
  throw std::invalid_argument("config key '" + key + "': unknown boundary '" +
                              v + "' (periodic | zero-exterior)");
}

/// Lattice radius giving box half-width ~ half_width at mesh dx.
int radius_for(double half_width, double dx) {
  require(half_width > 0.0 && dx > 0.0,
          "half_width and dx must be positive");
  const long n = std::lround(half_width / dx - 0.5);
  return static_cast<int>(std::max(1L, n));
}

GridSpec make_spec(int dim, double dx, double half_width, Boundary bc) {
  GridSpec spec;
  spec.dim = dim;
  spec.dx = dx;
  spec.radius = radius_for(half_width, dx);
  spec.boundary = bc;
  return spec;
}

/// One refinement level of a study: coefficients and the projected pairing
/// weight on a common grid.
struct StudyLevel {
  GridSpec spec;
  SchemeBuild build;
  GridFunction test_fn;
};

StudyLevel make_level(const Fixture& fx, double dx, double half_width,
                      Boundary bc) {
  StudyLevel lv;
  lv.spec = make_spec(fx.dim, dx, half_width, bc);
  lv.build = build_coefficients(fx.velocity, fx.sigma, fx.u0, lv.spec);
  lv.test_fn = project(lv.spec, fx.test_function, 3);
  return lv;
}

/// Runs fn(0..n-1), partitioned over `threads` workers pulling from an
/// atomic counter. fn must only write to its own index's slots.
void run_indexed(std::size_t n, long threads,
                 const std::function<void(std::size_t)>& fn) {
  threads = std::max(1L, std::min(threads, 64L));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Picks ~k indices out of 0..n (inclusive), always keeping both endpoints.
std::vector<std::size_t> checkpoint_indices(std::size_t n, std::size_t k) {
  k = std::max<std::size_t>(2, std::min(k, n + 1));
  std::vector<std::size_t> idx;
  idx.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = (n * j + (k - 1) / 2) / (k - 1);
    if (idx.empty() || i > idx.back()) idx.push_back(i);
  }
  if (idx.back() != n) idx.push_back(n);
  return idx;
}

double central_fd(const ScalarField& f, Point x, int axis, double h) {
  Point a = x, b = x;
  a[axis] += h;
  b[axis] -= h;
  return (f(a) - f(b)) / (2.0 * h);
}

// ==========================================================================
// calculus-check
// ==========================================================================

const std::array<const char*, 7> kIdentityNames = {
    "product_rule_onesided",   "product_rule_dual_upwind",
    "convolution_commute",     "summation_by_parts",
    "upwind_duality",          "chain_rule_second_order",
    "chain_rule_upwind"};

LabResult run_calculus(const KVConfig& cfg, json& rep) {
  const long trials = cfg.get_long("trials", 1000);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_long("seed", 42));
  const double tol = cfg.get_double("tol", 1e-13);
  require(trials >= 1, "calculus-check: trials must be >= 1");

  std::array<double, 7> worst{};
  for (long k = 0; k < trials; ++k) {
    GridSpec spec;
    spec.dim = 1 + static_cast<int>(k & 1);
    spec.radius = spec.dim == 1 ? 3 + static_cast<int>(k % 7)
                                : 3 + static_cast<int>(k % 3);
    spec.dx = 0.3 + 0.12 * static_cast<double>(k % 9);
    spec.boundary = (k % 3 == 0) ? Boundary::Periodic : Boundary::ZeroExterior;

    GridFunction f(spec), g(spec);
    VectorGridFunction V(spec);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto ci = static_cast<std::uint32_t>(i);
      f[i] = gaussian_draw(seed, static_cast<std::uint64_t>(k), 0, ci);
      g[i] = gaussian_draw(seed, static_cast<std::uint64_t>(k), 1, ci);
      for (int j = 0; j < spec.dim; ++j)
        V.comp(j)[i] = gaussian_draw(seed, static_cast<std::uint64_t>(k),
                                     2 + static_cast<std::uint32_t>(j), ci);
    }
    if (spec.boundary == Boundary::ZeroExterior) {
      // The convolution identity needs supp f + supp g inside the box; give
      // f and g support radii summing to at most radius - 1.
      const int rf = std::max(1, (spec.radius - 1) / 2);
      const int rg = std::max(1, spec.radius - 1 - rf);
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
        int m = 0;
        for (int j = 0; j < spec.dim; ++j)
          m = std::max(m, std::abs(alpha[j]));
        if (m > rf) f[i] = 0.0;
        if (m > rg) g[i] = 0.0;
      });
    }
    const CalculusReport r = calculus_identity_suite(f, g, V);
    for (std::size_t q = 0; q < 7; ++q)
      worst[q] = std::max(worst[q],
                          r.residual[q] / std::max(r.scale[q], 1e-300));
  }

  double overall = 0.0;
  for (double w : worst) overall = std::max(overall, w);

  std::string csv = "identity,max_residual\n";
  json per = json::object();
  for (std::size_t q = 0; q < 7; ++q) {
    csv += std::string(kIdentityNames[q]) + "," + fmt_g(worst[q]) + "\n";
    per[kIdentityNames[q]] = worst[q];
  }
  json data;
  data["trials"] = trials;
  data["tolerance"] = tol;
  data["per_identity"] = per;
  data["worst_relative"] = overall;
  rep["data"] = data;

  const bool ok = overall <= tol;
  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                "worst relative identity residual " + fmt_g(overall) +
                    " over " + std::to_string(trials) + " random fixtures" +
                    " (tolerance " + fmt_g(tol) + ")");
}

// ==========================================================================
// kernel-validate
// ==========================================================================

LabResult run_kernel_validate(const KVConfig& cfg, json& rep) {
  const double tol = cfg.get_double("tol", 1e-10);
  const double slope_tol = cfg.get_double("slope_tol", 0.05);

  json checks = json::array();
  double worst_diff = 0.0, worst_mass = 0.0;
  double worst_min = std::numeric_limits<double>::infinity();

  // -- closed form vs the shifted-series oracle, periodic and truncated ---
  const auto run_case = [&](int dim, Boundary bc, double r_max) {
    DiffusionDiag c;
    c.dim = dim;
    c.c[0] = 1.0;
    if (dim > 1) c.c[1] = 0.7;
    const double dx = 0.25;
    const double t = r_max * dx * dx / (2.0 * c.max());
    GridSpec spec;
    spec.dim = dim;
    spec.dx = dx;
    spec.boundary = bc;
    spec.radius = bc == Boundary::Periodic
                      ? 32
                      : suggested_radius(c, dx, t, 1e-13);
    const GridFunction closed = kernel_closed(spec, c, t);
    const GridFunction series = kernel_series(spec, c, t);
    const double diff = max_abs_diff(closed, series);
    double sum = 0.0, mn = closed[0];
    for (std::size_t i = 0; i < closed.size(); ++i) {
      sum += closed[i];
      mn = std::min(mn, closed[i]);
    }
    const double mass = std::abs(sum * spec.cell_volume() - 1.0);
    worst_diff = std::max(worst_diff, diff);
    worst_mass = std::max(worst_mass, mass);
    worst_min = std::min(worst_min, mn);
    json c_rep;
    c_rep["dim"] = dim;
    c_rep["boundary"] =
        bc == Boundary::Periodic ? "periodic" : "zero-exterior";
    c_rep["r"] = r_max;
    c_rep["t"] = t;
    c_rep["radius"] = spec.radius;
    c_rep["max_abs_diff"] = diff;
    c_rep["mass_defect"] = mass;
    c_rep["min_entry"] = mn;
    checks.push_back(c_rep);
  };
  for (int dim : {1, 2}) {
    for (double r : {1.0, 10.0, 100.0, 1000.0, 10000.0})
      run_case(dim, Boundary::Periodic, r);
    for (double r : {1.0, 10.0, 100.0}) run_case(dim, Boundary::ZeroExterior, r);
  }

  // -- L^2 monotonicity of the exact profile in time ----------------------
  bool monotone = true;
  json l2_values = json::array();
  {
    DiffusionDiag c;
    c.dim = 1;
    c.c[0] = 1.0;
    GridSpec spec;
    spec.dim = 1;
    spec.dx = 0.25;
    spec.radius = 32;
    spec.boundary = Boundary::Periodic;
    double prev = 0.0;
    bool first = true;
    for (double r : {0.5, 2.0, 8.0, 32.0, 128.0, 512.0}) {
      const double t = r * spec.dx * spec.dx / 2.0;
      const double nrm = lp_norm(kernel_closed(spec, c, t), 2.0);
      l2_values.push_back(nrm);
      if (!first && nrm > prev * (1.0 + 1e-12)) monotone = false;
      prev = nrm;
      first = false;
    }
  }

  // -- norm decay exponents vs the scaling law ----------------------------
  struct DecayCase {
    int dim, m;
    double p;
  };
  const std::array<DecayCase, 3> cases = {{{1, 0, 2.0}, {1, 1, 2.0}, {2, 0, 4.0}}};
  json decay = json::array();
  std::string csv = "dim,p,m,t,norm,fitted_slope\n";
  bool slopes_ok = true;
  for (const DecayCase& dc : cases) {
    DiffusionDiag c;
    c.dim = dc.dim;
    for (int j = 0; j < dc.dim; ++j) c.c[j] = 1.0;
    const double t_min = 25.0, t_max = 2500.0;
    GridSpec spec;
    spec.dim = dc.dim;
    spec.dx = 1.0;
    spec.boundary = Boundary::ZeroExterior;
    spec.radius = suggested_radius(c, spec.dx, t_max, 1e-12);
    const DecayFit fit =
        decay_exponent_fit(spec, c, 0, dc.m, dc.p, t_min, t_max, 8);
    const double target =
        -static_cast<double>(dc.dim) / (2.0 * dc.p) - 0.5 * dc.m;
    const double rel = std::abs(fit.slope - target) / std::abs(target);
    if (rel > slope_tol) slopes_ok = false;
    json d;
    d["dim"] = dc.dim;
    d["p"] = dc.p;
    d["m"] = dc.m;
    d["slope"] = fit.slope;
    d["target"] = target;
    d["rel_error"] = rel;
    d["max_fit_residual"] = fit.max_fit_residual;
    decay.push_back(d);
    for (std::size_t i = 0; i < fit.t_values.size(); ++i)
      csv += std::to_string(dc.dim) + "," + fmt_g(dc.p) + "," +
             std::to_string(dc.m) + "," + fmt_g(fit.t_values[i]) + "," +
             fmt_g(fit.norms[i]) + "," + fmt_g(fit.slope) + "\n";
  }

  json data;
  data["series_checks"] = checks;
  data["worst_abs_diff"] = worst_diff;
  data["worst_mass_defect"] = worst_mass;
  data["min_entry"] = worst_min;
  data["l2_norms"] = l2_values;
  data["l2_monotone"] = monotone;
  data["decay"] = decay;
  data["tolerance"] = tol;
  data["slope_tolerance"] = slope_tol;
  rep["data"] = data;

  const bool ok = worst_diff <= tol && worst_mass <= tol && worst_min > 0.0 &&
                  monotone && slopes_ok;
  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                "closed-vs-series max diff " + fmt_g(worst_diff) +
                    ", mass defect " + fmt_g(worst_mass) +
                    ", min entry " + fmt_g(worst_min) +
                    (monotone ? ", L2 monotone" : ", L2 NOT monotone") +
                    (slopes_ok ? ", decay slopes within " : ", decay slopes OUTSIDE ") +
                    fmt_g(100.0 * slope_tol) + "%");
}

// ==========================================================================
// parametrix-validate
// ==========================================================================

LabResult run_parametrix_validate(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "smooth");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const double dx = cfg.get_double("dx", 0.1);
  const Fixture fx = make_fixture(fixture, dim);
  const double half_width = cfg.get_double("half_width", fx.default_half_width);
  const double p = cfg.get_double("p", fx.default_p);
  const double tol = cfg.get_double("tol", 1e-8);
  const int n_frames = static_cast<int>(cfg.get_long("n_frames", 256));
  const double t_hint = cfg.get_double("t_hint", 0.03125);
  const double order_floor = cfg.get_double("order_floor", 1.8);
  const double const_tol = cfg.get_double("const_tol", 1e-12);
  const double prop_tol = cfg.get_double("prop_tol", 1e-8);
  const long mem_budget_mb = cfg.get_long("memory_budget_mb", 768);
  const TimeQuad quad = TimeQuad::Trapezoid;
  require(n_frames >= 8 && n_frames % 4 == 0,
          "parametrix-validate: n_frames must be a multiple of 4, >= 8");

  const Boundary bc = boundary_from(cfg, "boundary", Boundary::Periodic);
  const GridSpec spec = make_spec(dim, dx, half_width, bc);
  const double cells = static_cast<double>(spec.cell_count());
  // F, Phi, Gamma plus convolution scratch, on three meshes (n, n/2, 2n).
  const double est_mb =
      cells * cells * 8.0 * (3.5 * n_frames + 4.0) * 3.5 / (1024.0 * 1024.0);
  if (est_mb > static_cast<double>(mem_budget_mb))
    throw std::invalid_argument(
        "parametrix-validate: estimated " + fmt_g(est_mb) +
        " MB of kernel frames exceeds memory_budget_mb = " +
        std::to_string(mem_budget_mb) + "; reduce n_frames, dx resolution, or dim");

  const SchemeBuild sb = build_coefficients(fx.velocity, fx.sigma, fx.u0, spec);
  const VariableCoefficients vc = sb.coeffs.dual_coefficients();

  double factor = 0.0;
  const double t0 = choose_t0(vc, t_hint, 16, quad, &factor);

  NeumannResult info;
  const TimeKernel gamma = assemble_gamma(vc, t0, n_frames, p, tol, quad, &info);
  const double phi_residual = info.contraction_ratio * info.last_increment;

  // ODE residual at matching physical time on meshes h and 2h.
  const TimeKernel gamma_half =
      assemble_gamma(vc, t0, n_frames / 2, p, tol, quad);
  const double res_h =
      gamma_ode_residual(vc, gamma, static_cast<std::size_t>(n_frames / 2));
  const double res_2h = gamma_ode_residual(
      vc, gamma_half, static_cast<std::size_t>(n_frames / 4));
  const double order = std::log2(res_2h / res_h);

  // Constant-coefficient degeneration against the closed-form route.
  double const_err = 0.0;
  {
    std::vector<GridFunction> comps;
    GridFunction one(spec);
    one.fill(1.0);
    for (int j = 0; j < dim; ++j) comps.push_back(one);
    const VariableCoefficients vc_const =
        VariableCoefficients::build(spec, std::move(comps));
    const int nc = std::min(n_frames, 16);
    const TimeKernel gc = assemble_gamma(vc_const, t0, nc, p, tol, quad);
    DiffusionDiag half_c;
    half_c.dim = dim;
    for (int j = 0; j < dim; ++j) half_c.c[j] = 0.5;
    for (int k = 0; k <= nc; ++k) {
      const Kernel2 exact =
          translation_kernel(kernel_closed(spec, half_c, gc.times[static_cast<std::size_t>(k)]));
      const double d =
          (gc.frames[static_cast<std::size_t>(k)].matrix() - exact.matrix())
              .cwiseAbs()
              .maxCoeff();
      const_err = std::max(const_err, d);
    }
  }

  // Propagation self-consistency: Gamma(2 T0) by composition of the base
  // window vs direct assembly on [0, 2 T0].
  const Kernel2 composed = propagate_gamma(gamma, 1, t0);
  const TimeKernel gamma2 =
      assemble_gamma(vc, 2.0 * t0, 2 * n_frames, p, tol, quad);
  Kernel2 prop_diff = composed;
  prop_diff.matrix() -= gamma2.frames.back().matrix();
  const double prop_err =
      mixed_norm(prop_diff, kInf, 1.0, MixedOrder::AlphaOuter);

  std::string csv = "h,ode_residual,observed_order\n";
  csv += fmt_g(gamma_half.step()) + "," + fmt_g(res_2h) + "," + fmt_g(order) + "\n";
  csv += fmt_g(gamma.step()) + "," + fmt_g(res_h) + "," + fmt_g(order) + "\n";

  json data;
  data["t0"] = t0;
  data["contraction_factor"] = factor;
  data["neumann_terms"] = info.m_used;
  data["neumann_converged"] = info.converged;
  data["phi_residual_bound"] = phi_residual;
  data["ode_residual_h"] = res_h;
  data["ode_residual_2h"] = res_2h;
  data["observed_order"] = order;
  data["const_coeff_error"] = const_err;
  data["propagation_error"] = prop_err;
  data["cells"] = spec.cell_count();
  data["n_frames"] = n_frames;
  rep["data"] = data;

  const bool ok = info.converged && phi_residual <= 2.0 * tol &&
                  order >= order_floor && const_err <= const_tol &&
                  prop_err <= prop_tol;
  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                "fixed-point residual " + fmt_g(phi_residual) +
                    ", ODE-residual order " + fmt_g(order) +
                    ", const-coefficient error " + fmt_g(const_err) +
                    ", propagation error " + fmt_g(prop_err));
}

// ==========================================================================
// dual-solve
// ==========================================================================

LabResult run_dual_solve(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "rough");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const Fixture fx = make_fixture(fixture, dim);
  const double half_width = cfg.get_double("half_width", fx.default_half_width);
  const double T = cfg.get_double("T", fx.default_horizon);
  const double p = cfg.get_double("p", fx.default_p);
  const Boundary bc = boundary_from(cfg, "boundary", Boundary::Periodic);
  const std::vector<double> ladder =
      cfg.get_list("dx_ladder", {0.08, 0.04, 0.02});
  const double dt_factor = cfg.get_double("dt_factor", 0.125);
  const double min_floor = cfg.get_double("min_floor", -1e-12);
  const double cross_tol_gap = cfg.get_double("cross_tol", 1e-5);
  const double grad_ratio_tol = cfg.get_double("grad_ratio_tol", 2.0);
  require(T > 0.0 && !ladder.empty(), "dual-solve: T and dx_ladder required");

  std::string csv = "dx,min_phi,sup_phi,sup_grad\n";
  json levels = json::array();
  double min_phi = 0.0, grad_lo = 0.0, grad_hi = 0.0;
  bool terminal_exact = true;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const double dx = ladder[l];
    const StudyLevel lv = make_level(fx, dx, half_width, bc);
    const DualProblem prob = DualProblem::build(
        lv.build.coeffs.dual_coefficients(), lv.build.coeffs.Z, T, p);
    const double dt = dt_factor * dx * dx;
    const long n_steps = std::lround(T / dt);
    const int store = static_cast<int>(std::max(1L, n_steps / 64));
    const DualSolution sol =
        solve_dual_ode(prob, dt, DualStepper::ImplicitEuler, store);
    const DualDiagnostics diag = dual_diagnostics(sol);
    const GridFunction& at_T = sol.phi.back();
    for (std::size_t i = 0; i < at_T.size(); ++i)
      if (at_T[i] != 1.0) terminal_exact = false;
    const double g = diag.sup_grad(dim);
    min_phi = std::min(min_phi, diag.min_value);
    grad_lo = l == 0 ? g : std::min(grad_lo, g);
    grad_hi = l == 0 ? g : std::max(grad_hi, g);
    csv += fmt_g(dx) + "," + fmt_g(diag.min_value) + "," +
           fmt_g(diag.sup_norm) + "," + fmt_g(g) + "\n";
    json jl;
    jl["dx"] = dx;
    jl["dt"] = dt;
    jl["min_phi"] = diag.min_value;
    jl["sup_phi"] = diag.sup_norm;
    jl["sup_grad"] = g;
    levels.push_back(jl);
  }
  const double grad_ratio = grad_hi / std::max(grad_lo, 1e-300);

  // Cross-method agreement on a short horizon: backward ODE at a fine step
  // vs the propagator-based Duhamel representation on a shared time mesh.
  const double cross_dx = cfg.get_double("cross_dx", 0.04);
  const double cross_T = cfg.get_double("cross_T", 0.25 * T);
  const int cross_frames = static_cast<int>(cfg.get_long("cross_frames", 512));
  const double cross_dt_target = cfg.get_double("cross_dt", 1e-7);
  const double picard_tol = cfg.get_double("picard_tol", 1e-9);

  const StudyLevel cl = make_level(fx, cross_dx, half_width, bc);
  const DualProblem cross_prob = DualProblem::build(
      cl.build.coeffs.dual_coefficients(), cl.build.coeffs.Z, cross_T, p);
  const TimeKernel gamma =
      assemble_gamma(cl.build.coeffs.dual_coefficients(), cross_T,
                     cross_frames, p, 1e-10, TimeQuad::Trapezoid);
  PicardReport picard;
  const DualSolution duh = solve_dual_duhamel(cross_prob, gamma, picard_tol,
                                              TimeQuad::Trapezoid, &picard);
  const double h_gamma = cross_T / cross_frames;
  const long substeps =
      std::max(1L, std::lround(std::ceil(h_gamma / cross_dt_target)));
  const DualSolution ode =
      solve_dual_ode(cross_prob, h_gamma / static_cast<double>(substeps),
                     DualStepper::ImplicitEuler, static_cast<int>(substeps));
  double cross_gap = 0.0;
  for (std::size_t k = 0; k < duh.times.size(); ++k) {
    const GridFunction& a = duh.phi[k];
    const GridFunction& b = ode.at_time(duh.times[k]);
    cross_gap = std::max(cross_gap, max_abs_diff(a, b));
  }

  json data;
  data["levels"] = levels;
  data["terminal_exact"] = terminal_exact;
  data["min_phi"] = min_phi;
  data["sup_grad_ratio"] = grad_ratio;
  json cross;
  cross["dx"] = cross_dx;
  cross["T"] = cross_T;
  cross["n_frames"] = cross_frames;
  cross["ode_dt"] = h_gamma / static_cast<double>(substeps);
  cross["gap"] = cross_gap;
  cross["picard_subintervals"] = picard.subintervals;
  cross["picard_iterations"] = picard.iterations;
  data["cross_method"] = cross;
  rep["data"] = data;

  const bool ok = terminal_exact && min_phi >= min_floor &&
                  cross_gap <= cross_tol_gap && grad_ratio <= grad_ratio_tol;
  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                std::string("terminal ") +
                    (terminal_exact ? "exact" : "NOT exact") + ", min phi " +
                    fmt_g(min_phi) + ", ODE-vs-Duhamel gap " +
                    fmt_g(cross_gap) + ", sup-gradient ratio " +
                    fmt_g(grad_ratio) + " across " +
                    std::to_string(ladder.size()) + " meshes");
}

// ==========================================================================
// simulate
// ==========================================================================

LabResult run_simulate(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "smooth");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const Fixture fx = make_fixture(fixture, dim);
  if (!cfg.has("dx"))
    throw std::invalid_argument("simulate: config key 'dx' is required");
  const double dx = cfg.get_double("dx", 0.0);
  const double half_width = cfg.get_double("half_width", fx.default_half_width);
  const double T = cfg.get_double("T", fx.default_horizon);
  const Boundary bc = boundary_from(cfg, "boundary", Boundary::Periodic);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_long("seed", 42));
  const long paths = cfg.get_long("paths", 1);
  const long threads = cfg.get_long("threads", 1);
  require(paths >= 1, "simulate: paths must be >= 1");

  const StudyLevel lv = make_level(fx, dx, half_width, bc);
  const double dt_bound = max_stable_dt(lv.build.coeffs);
  const double dt = cfg.get_double(
      "dt", T / static_cast<double>(std::lround(std::ceil(T / dt_bound - 1e-12))));
  if (dt > dt_bound * (1.0 + 1e-12))
    throw std::invalid_argument("simulate: dt = " + fmt_g(dt) +
                                " exceeds the stability bound " +
                                fmt_g(dt_bound));

  std::vector<double> final_energy(static_cast<std::size_t>(paths), 0.0);
  std::vector<char> diverged(static_cast<std::size_t>(paths), 0);
  PathTrace trace0;
  run_indexed(static_cast<std::size_t>(paths), threads, [&](std::size_t pid) {
    PathTrace* tr = pid == 0 ? &trace0 : nullptr;
    const PathState st =
        simulate_path(lv.build.coeffs, lv.build.u0, T, dt, seed, pid,
                      DriftForm::Upwind, tr);
    const double n2 = lp_norm(st.u, 2.0);
    final_energy[pid] = n2 * n2;
    diverged[pid] = st.diverged ? 1 : 0;
  });

  long n_div = 0;
  for (char d : diverged) n_div += d;
  const SampleStats stats = sample_stats(final_energy);
  const double u0_l2 = lp_norm(lv.build.u0, 2.0);

  std::string csv = "t,l2_energy\n";
  const std::size_t rows = trace0.times.size();
  const std::size_t stride = 1 + (rows > 4096 ? (rows - 1) / 4096 : 0);
  for (std::size_t i = 0; i < rows; i += stride)
    csv += fmt_g(trace0.times[i]) + "," +
           fmt_g(trace0.l2_norm[i] * trace0.l2_norm[i]) + "\n";
  if (rows > 0 && (rows - 1) % stride != 0)
    csv += fmt_g(trace0.times[rows - 1]) + "," +
           fmt_g(trace0.l2_norm[rows - 1] * trace0.l2_norm[rows - 1]) + "\n";

  json data;
  data["dx"] = dx;
  data["dt"] = dt;
  data["dt_bound"] = dt_bound;
  data["steps"] = std::lround(T / dt);
  data["paths"] = paths;
  data["diverged"] = n_div;
  data["initial_energy"] = u0_l2 * u0_l2;
  data["final_energy_mean"] = stats.mean;
  data["final_energy_stderr"] = stats.stderr_mean;
  rep["data"] = data;

  const bool ok = n_div == 0;
  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                std::to_string(paths) + " path(s) to T = " + fmt_g(T) +
                    ", mean final energy " + fmt_g(stats.mean) + " (from " +
                    fmt_g(u0_l2 * u0_l2) + "), " + std::to_string(n_div) +
                    " diverged");
}

// ==========================================================================
// stability-study
// ==========================================================================

LabResult run_stability(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "rough");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const Fixture fx = make_fixture(fixture, dim);
  const double T = cfg.get_double("T", 0.5);
  // Wide default box: initial support plus advective range plus a >5-sigma
  // Brownian transport margin, so the periodic wrap stays in the quiet zone.
  const double half_width = cfg.get_double("half_width", 12.8);
  const Boundary bc = boundary_from(cfg, "boundary", Boundary::Periodic);
  const std::vector<double> ladder =
      cfg.get_list("dx_ladder", {0.08, 0.04, 0.02, 0.01});
  const long paths = cfg.get_long("paths", 1000);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_long("seed", 42));
  const long threads = cfg.get_long("threads", 1);
  const double p = cfg.get_double("p", fx.default_p);
  const double dual_dt_factor = cfg.get_double("dual_dt_factor", 0.5);
  require(paths >= 2 && ladder.size() >= 2,
          "stability-study: needs >= 2 paths and >= 2 ladder levels");

  std::string csv = "dx,dt,paths,energy_ratio,stderr,sup_grad_dual,divergences\n";
  json levels = json::array();
  std::vector<double> ratios(ladder.size()), errs(ladder.size());
  long total_div = 0;
  double u0_energy = 0.0;
  bool trivial = false;
  bool monotone_mean_ok = true;

  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const double dx = ladder[l];
    const StudyLevel lv = make_level(fx, dx, half_width, bc);
    // Shrink dt below the stability bound so every level lands exactly on T;
    // otherwise coarse levels overshoot by a fraction of a step and their
    // energy ratios are biased relative to the fine levels.
    const double dt_bound = max_stable_dt(lv.build.coeffs);
    const long n_steps = std::lround(std::ceil(T / dt_bound - 1e-12));
    const double dt = T / static_cast<double>(n_steps);
    const double u0_l2 = lp_norm(lv.build.u0, 2.0);
    u0_energy = u0_l2 * u0_l2;
    if (u0_energy == 0.0) {
      trivial = true;
      break;
    }

    const std::vector<std::size_t> marks =
        checkpoint_indices(static_cast<std::size_t>(n_steps), 33);
    const std::size_t n_marks = marks.size();
    std::vector<double> energy(static_cast<std::size_t>(paths));
    std::vector<char> div_flags(static_cast<std::size_t>(paths), 0);
    std::vector<double> traces(static_cast<std::size_t>(paths) * n_marks, 0.0);

    run_indexed(static_cast<std::size_t>(paths), threads, [&](std::size_t pid) {
      PathTrace tr;
      const PathState st = simulate_path(lv.build.coeffs, lv.build.u0, T, dt,
                                         seed, pid, DriftForm::Upwind, &tr);
      const double n2 = lp_norm(st.u, 2.0);
      energy[pid] = n2 * n2;
      div_flags[pid] = st.diverged ? 1 : 0;
      for (std::size_t m = 0; m < n_marks; ++m) {
        const double v = tr.l2_norm[std::min(marks[m], tr.l2_norm.size() - 1)];
        traces[pid * n_marks + m] = v * v;
      }
    });

    long divs = 0;
    for (char d : div_flags) divs += d;
    total_div += divs;
    const SampleStats st = sample_stats(energy);
    const double ratio = st.mean / u0_energy;
    const double err = st.stderr_mean / u0_energy;
    ratios[l] = ratio;
    errs[l] = err;

    // Deterministic mean energy trace (pairwise reduction per checkpoint).
    std::vector<double> mean_trace(n_marks), scratch(static_cast<std::size_t>(paths));
    for (std::size_t m = 0; m < n_marks; ++m) {
      for (std::size_t pid = 0; pid < static_cast<std::size_t>(paths); ++pid)
        scratch[pid] = traces[pid * n_marks + m];
      mean_trace[m] =
          pairwise_sum(scratch.data(), scratch.size()) / static_cast<double>(paths);
    }
    if (fx.velocity.empty() || lv.build.coeffs.v_max == 0.0) {
      // Divergence-free noise: the mean energy must not increase beyond MC
      // wiggle (3 standard errors of the final-time mean).
      for (std::size_t m = 1; m < n_marks; ++m)
        if (mean_trace[m] > mean_trace[m - 1] + 3.0 * st.stderr_mean)
          monotone_mean_ok = false;
    }

    // Dual gradient diagnostic at this level (implicit, cheap).
    const DualProblem prob = DualProblem::build(
        lv.build.coeffs.dual_coefficients(), lv.build.coeffs.Z, T, p);
    const double dual_dt = dual_dt_factor * dx * dx;
    const long dual_steps = std::lround(T / dual_dt);
    const DualSolution sol =
        solve_dual_ode(prob, dual_dt, DualStepper::ImplicitEuler,
                       static_cast<int>(std::max(1L, dual_steps / 32)));
    const double sup_grad = dual_diagnostics(sol).sup_grad(dim);

    csv += fmt_g(dx) + "," + fmt_g(dt) + "," + std::to_string(paths) + "," +
           fmt_g(ratio) + "," + fmt_g(err) + "," + fmt_g(sup_grad) + "," +
           std::to_string(divs) + "\n";
    json jl;
    jl["dx"] = dx;
    jl["dt"] = dt;
    jl["paths"] = paths;
    jl["energy_ratio"] = ratio;
    jl["stderr"] = err;
    jl["sup_grad_dual"] = sup_grad;
    jl["divergences"] = divs;
    json times = json::array(), trace = json::array();
    for (std::size_t m = 0; m < n_marks; ++m) {
      times.push_back(static_cast<double>(marks[m]) * dt);
      trace.push_back(mean_trace[m]);
    }
    jl["trace_times"] = times;
    jl["mean_energy_trace"] = trace;
    levels.push_back(jl);
  }

  json data;
  data["levels"] = levels;
  data["initial_energy"] = u0_energy;
  data["diverged_total"] = total_div;

  if (trivial) {
    data["trivial"] = true;
    rep["data"] = data;
    return finish(rep, std::move(csv), "pass",
                  "initial datum is identically zero; stability holds trivially");
  }

  // Bound: every level's ratio within 3 stderr of the coarse-level ceiling.
  const double c_star = std::max(ratios[0], ratios[1]);
  bool bounded = true;
  for (std::size_t l = 0; l < ladder.size(); ++l)
    if (ratios[l] > (1.0 + 3.0 * errs[l]) * c_star) bounded = false;
  data["c_star"] = c_star;
  data["bounded"] = bounded;
  data["mean_trace_monotone"] = monotone_mean_ok;
  rep["data"] = data;

  const bool ok = bounded && total_div == 0 && monotone_mean_ok;
  std::string msg = "energy ratios";
  for (double r : ratios) msg += " " + fmt_g(r);
  msg += " vs ceiling " + fmt_g(c_star) + "; " + std::to_string(total_div) +
         " diverged";
  return finish(rep, std::move(csv), ok ? "pass" : "fail", msg);
}

// ==========================================================================
// convergence-study
// ==========================================================================

LabResult run_convergence(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "smooth");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const Fixture fx = make_fixture(fixture, dim);
  const double T = cfg.get_double("T", fx.default_horizon);
  const double half_width = cfg.get_double("half_width", fx.default_half_width);
  const Boundary bc = boundary_from(cfg, "boundary", Boundary::Periodic);
  const std::vector<double> ladder =
      cfg.get_list("dx_ladder", {0.32, 0.16, 0.08, 0.04});
  const long paths = cfg.get_long("paths", 4000);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_long("seed", 42));
  const long threads = cfg.get_long("threads", 1);
  const long oracle_refine = cfg.get_long("oracle_refine", 4);
  require(paths >= 2 && !ladder.empty(),
          "convergence-study: needs >= 2 paths and a dx ladder");
  require(oracle_refine >= 2, "convergence-study: oracle_refine must be >= 2");

  // Monte Carlo pairings per ladder level.
  std::vector<double> means(ladder.size()), errs(ladder.size()),
      dts(ladder.size());
  std::string csv =
      "dx,dt,paths,pairing_mean,pairing_stderr,oracle_pairing,abs_error\n";
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const StudyLevel lv = make_level(fx, ladder[l], half_width, bc);
    // Exact landing on T (see the stability study for why).
    const double dt_bound = max_stable_dt(lv.build.coeffs);
    const double dt =
        T / static_cast<double>(std::lround(std::ceil(T / dt_bound - 1e-12)));
    dts[l] = dt;
    std::vector<double> vals(static_cast<std::size_t>(paths));
    std::vector<char> div_flags(static_cast<std::size_t>(paths), 0);
    run_indexed(static_cast<std::size_t>(paths), threads, [&](std::size_t pid) {
      const PathState st = simulate_path(lv.build.coeffs, lv.build.u0, T, dt,
                                         seed, pid, DriftForm::Upwind);
      div_flags[pid] = st.diverged ? 1 : 0;
      vals[pid] = st.diverged ? 0.0 : pairing(st.u, lv.test_fn);
    });
    long divs = 0;
    for (char d : div_flags) divs += d;
    if (divs > 0)
      throw std::runtime_error("convergence-study: " + std::to_string(divs) +
                               " path(s) diverged at dx = " + fmt_g(ladder[l]));
    const SampleStats st = sample_stats(vals);
    means[l] = st.mean;
    errs[l] = st.stderr_mean;
  }

  // Mean-field oracle on a grid `oracle_refine` times finer than the finest
  // MC level, with a Richardson companion at twice that resolution.
  const double dx_min = *std::min_element(ladder.begin(), ladder.end());
  const double dx_ref = dx_min / static_cast<double>(oracle_refine);
  const auto oracle_pairing_at = [&](double dxr) {
    const StudyLevel lv = make_level(fx, dxr, half_width, bc);
    const GridFunction m =
        mean_energy_oracle(lv.build.coeffs, lv.build.u0, T, dxr * dxr);
    return pairing(m, lv.test_fn);
  };
  const double oracle_val = oracle_pairing_at(dx_ref);
  const double oracle_fine = oracle_pairing_at(0.5 * dx_ref);
  const double richardson_gap = std::abs(oracle_val - oracle_fine);

  double min_stderr = errs[0];
  for (double e : errs) min_stderr = std::min(min_stderr, e);
  const bool oracle_limited = richardson_gap > min_stderr;

  std::vector<double> abs_err(ladder.size());
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    abs_err[l] = std::abs(means[l] - oracle_val);
    csv += fmt_g(ladder[l]) + "," + fmt_g(dts[l]) + "," +
           std::to_string(paths) + "," + fmt_g(means[l]) + "," +
           fmt_g(errs[l]) + "," + fmt_g(oracle_val) + "," +
           fmt_g(abs_err[l]) + "\n";
  }

  json levels = json::array();
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    json jl;
    jl["dx"] = ladder[l];
    jl["dt"] = dts[l];
    jl["pairing_mean"] = means[l];
    jl["pairing_stderr"] = errs[l];
    jl["abs_error"] = abs_err[l];
    levels.push_back(jl);
  }
  json data;
  data["levels"] = levels;
  json orc;
  orc["dx_ref"] = dx_ref;
  orc["pairing"] = oracle_val;
  orc["richardson_gap"] = richardson_gap;
  orc["limited"] = oracle_limited;
  data["oracle"] = orc;
  const std::size_t last = ladder.size() - 1;
  const bool finest_within = abs_err[last] <= 3.0 * errs[last];
  data["finest_within_3_stderr"] = finest_within;

  std::string status, msg;
  if (oracle_limited) {
    status = "oracle-limited";
    msg = "oracle two-level gap " + fmt_g(richardson_gap) +
          " exceeds the smallest MC standard error " + fmt_g(min_stderr);
    data["monotone_decrease"] = false;
    data["decrease_beyond_noise"] = false;
  } else if (ladder.size() == 1) {
    status = finest_within ? "pass" : "fail";
    msg = "single level |MC - oracle| = " + fmt_g(abs_err[0]) + " vs 3 stderr = " +
          fmt_g(3.0 * errs[0]);
    data["monotone_decrease"] = true;
    data["decrease_beyond_noise"] = true;
  } else {
    bool monotone = true, beyond = true, significant_increase = false;
    for (std::size_t l = 0; l + 1 < ladder.size(); ++l) {
      const double drop = abs_err[l] - abs_err[l + 1];
      const double noise =
          std::sqrt(errs[l] * errs[l] + errs[l + 1] * errs[l + 1]);
      if (drop <= 0.0) monotone = false;
      if (drop <= noise) beyond = false;
      if (drop < -noise) significant_increase = true;
    }
    data["monotone_decrease"] = monotone;
    data["decrease_beyond_noise"] = beyond;
    if (monotone && beyond) {
      status = "pass";
      msg = "pairing error decreases at every halving, beyond MC noise";
    } else if (significant_increase) {
      status = "fail";
      msg = "pairing error increases beyond MC noise under refinement";
    } else {
      status = "inconclusive";
      msg = "MC error exceeds the refinement signal; increase paths";
    }
    msg += "; errors";
    for (double e : abs_err) msg += " " + fmt_g(e);
  }
  rep["data"] = data;
  return finish(rep, std::move(csv), status, msg);
}

// ==========================================================================
// consistency-suite
// ==========================================================================

LabResult run_consistency(const KVConfig& cfg, json& rep) {
  const std::string fixture = cfg.get_string("fixture", "smooth");
  const int dim = static_cast<int>(cfg.get_long("dim", 1));
  const Fixture fx = make_fixture(fixture, dim);
  if (!fx.has_divergence)
    throw std::invalid_argument(
        "consistency-suite: fixture '" + fixture +
        "' has no analytic divergence; use 'smooth' or 'const'");
  const double half_width = cfg.get_double("half_width", fx.default_half_width);
  const Boundary bc = boundary_from(cfg, "boundary", Boundary::ZeroExterior);
  const std::vector<double> ladder = cfg.get_list("dx_ladder", {0.2, 0.1, 0.05});
  const double p = cfg.get_double("p", 2.0);
  require(ladder.size() >= 2, "consistency-suite: needs >= 2 ladder levels");

  const std::array<const char*, 5> names = {
      "velocity_projection", "div_upwind_one", "div_upwind_test",
      "central_grad_sigma_phi", "sigma_laplacian"};
  std::array<std::vector<double>, 5> dist;
  for (auto& v : dist) v.resize(ladder.size());

  const double fd_h1 = 1e-5;  // first derivatives of fixture fields
  const double fd_h2 = 1e-4;  // nested second derivatives

  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const double dx = ladder[l];
    const GridSpec spec = make_spec(dim, dx, half_width, bc);
    const VectorGridFunction Vd = project_vector(spec, fx.velocity, 3);
    const GridFunction sig = project(spec, fx.sigma, 3);
    const ScalarField sig_phi = [&](const Point& x) {
      return fx.sigma(x) * fx.test_function(x);
    };
    const GridFunction w = project(spec, sig_phi, 3);
    const GridFunction phi_d = project(spec, fx.test_function, 3);

    // 1. projected velocity vs its center samples
    {
      double worst = 0.0;
      for (int j = 0; j < dim; ++j) {
        GridFunction diff(spec);
        for_each_cell(spec, [&](std::size_t i, const MultiIndex& a) {
          Point x{};
          for (int q = 0; q < dim; ++q) x[q] = spec.coord(a[q]);
          diff[i] = Vd.comp(j)[i] - fx.velocity[static_cast<std::size_t>(j)](x);
        });
        worst = std::max(worst, lp_norm(diff, p));
      }
      dist[0][l] = worst;
    }
    // 2. discrete divergence surrogate vs analytic div V
    {
      GridFunction diff = dual_upwind_one(Vd);
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& a) {
        Point x{};
        for (int q = 0; q < dim; ++q) x[q] = spec.coord(a[q]);
        diff[i] -= fx.div_velocity(x);
      });
      dist[1][l] = lp_norm(diff, p);
    }
    // 3. dual upwind on a projected test function vs div(V phi)
    {
      GridFunction diff = dual_upwind_apply(Vd, phi_d);
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& a) {
        Point x{};
        for (int q = 0; q < dim; ++q) x[q] = spec.coord(a[q]);
        double target = fx.div_velocity(x) * fx.test_function(x);
        for (int j = 0; j < dim; ++j)
          target += fx.velocity[static_cast<std::size_t>(j)](x) *
                    central_fd(fx.test_function, x, j, fd_h1);
        diff[i] -= target;
      });
      dist[2][l] = lp_norm(diff, p);
    }
    // 4. central gradient of the projected product sigma*phi
    {
      double worst = 0.0;
      for (int j = 0; j < dim; ++j) {
        GridFunction diff = central_diff(w, j);
        for_each_cell(spec, [&](std::size_t i, const MultiIndex& a) {
          Point x{};
          for (int q = 0; q < dim; ++q) x[q] = spec.coord(a[q]);
          diff[i] -= central_fd(sig_phi, x, j, fd_h1);
        });
        worst = std::max(worst, lp_norm(diff, p));
      }
      dist[3][l] = worst;
    }
    // 5. conservative second-order operator vs div(sigma grad(sigma phi))
    {
      GridFunction lhs(spec);
      for (int j = 0; j < dim; ++j) {
        const GridFunction sm = average_minus(sig, j);
        GridFunction flux = backward_diff(w, j);
        for (std::size_t i = 0; i < flux.size(); ++i) flux[i] *= sm[i];
        lhs += forward_diff(flux, j);
      }
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& a) {
        Point x{};
        for (int q = 0; q < dim; ++q) x[q] = spec.coord(a[q]);
        double target = 0.0;
        for (int j = 0; j < dim; ++j) {
          // d_j [ sigma d_j (sigma phi) ] by nested central differences
          Point xp = x, xm = x;
          xp[j] += fd_h2;
          xm[j] -= fd_h2;
          const double fp = fx.sigma(xp) * central_fd(sig_phi, xp, j, fd_h2);
          const double fm = fx.sigma(xm) * central_fd(sig_phi, xm, j, fd_h2);
          target += (fp - fm) / (2.0 * fd_h2);
        }
        lhs[i] -= target;
      });
      dist[4][l] = lp_norm(lhs, p);
    }
  }

  std::string csv = "dx,quantity,distance\n";
  json table = json::object();
  bool ok = true;
  for (std::size_t q = 0; q < names.size(); ++q) {
    json col = json::array();
    bool trivial = true, monotone = true;
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      csv += fmt_g(ladder[l]) + "," + names[q] + "," + fmt_g(dist[q][l]) + "\n";
      col.push_back(dist[q][l]);
      if (dist[q][l] > 1e-13) trivial = false;
      if (l > 0 && dist[q][l] >= dist[q][l - 1]) monotone = false;
    }
    json entry;
    entry["distances"] = col;
    entry["monotone"] = monotone;
    entry["trivially_zero"] = trivial;
    table[names[q]] = entry;
    if (!monotone && !trivial) ok = false;
  }
  json data;
  data["quantities"] = table;
  data["norm_p"] = p;
  rep["data"] = data;

  return finish(rep, std::move(csv), ok ? "pass" : "fail",
                ok ? "all five discretization distances decrease under refinement"
                   : "a discretization distance failed to decrease under refinement");
}

}  // namespace

// ==========================================================================
// dispatcher
// ==========================================================================

LabResult run_lab(const std::string& command, const KVConfig& config) {
  json rep = make_report(command, config);
  try {
    if (command == "calculus-check") return run_calculus(config, rep);
    if (command == "kernel-validate") return run_kernel_validate(config, rep);
    if (command == "parametrix-validate")
      return run_parametrix_validate(config, rep);
    if (command == "dual-solve") return run_dual_solve(config, rep);
    if (command == "simulate") return run_simulate(config, rep);
    if (command == "stability-study") return run_stability(config, rep);
    if (command == "convergence-study") return run_convergence(config, rep);
    if (command == "consistency-suite") return run_consistency(config, rep);
    std::string known;
    for (const std::string& c : lab_commands()) known += " " + c;
    throw std::invalid_argument("unknown command '" + command +
                                "'; expected one of:" + known);
  } catch (const std::invalid_argument& e) {
    rep["status"] = "error";
    rep["message"] = e.what();
    LabResult r;
    r.exit_code = 2;
    r.status = "error";
    r.message = e.what();
    r.json = rep.dump(2) + "\n";
    return r;
  } catch (const std::exception& e) {
    rep["status"] = "error";
    rep["message"] = e.what();
    LabResult r;
    r.exit_code = 1;
    r.status = "error";
    r.message = e.what();
    r.json = rep.dump(2) + "\n";
    return r;
  }
}

}  // namespace stpde
