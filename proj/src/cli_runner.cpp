#include "levypot/cli_runner.hpp"

#include "levypot/bocher_engine.hpp"
#include "levypot/exact_kernels.hpp"
#include "levypot/polarity.hpp"
#include "levypot/quadrature.hpp"
#include "levypot/stats.hpp"

#include <CLI11.hpp>
#include <toml.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace levypot::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw SchemaError(where, what); }

bool has(const Json& obj, const std::string& key) { return obj.is_object() && obj.contains(key) && !obj.at(key).is_null(); }

const Json& require(const Json& obj, const std::string& key, const std::string& where) {
  if (!has(obj, key)) fail(where + "." + key, "missing required field");
  return obj.at(key);
}

double as_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

double number_or(const Json& obj, const std::string& key, double def, const std::string& where) {
  return has(obj, key) ? as_number(obj.at(key), where + "." + key) : def;
}

std::int64_t as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<std::int64_t>();
}

std::int64_t int_or(const Json& obj, const std::string& key, std::int64_t def, const std::string& where) {
  return has(obj, key) ? as_int(obj.at(key), where + "." + key) : def;
}

std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool bool_or(const Json& obj, const std::string& key, bool def, const std::string& where) {
  if (!has(obj, key)) return def;
  if (!obj.at(key).is_boolean()) fail(where + "." + key, "expected a boolean");
  return obj.at(key).get<bool>();
}

Point as_point(const Json& j, const std::string& where, int d = -1) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of numbers");
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) p[static_cast<Eigen::Index>(i)] = as_number(j[i], where + "[" + std::to_string(i) + "]");
  if (d > 0 && p.size() != d) fail(where, "expected " + std::to_string(d) + " coordinates");
  return p;
}

std::vector<double> as_numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Json point_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

Json estimate_json(const MCEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n_samples}, {"censored_fraction", e.censored_fraction},
          {"flagged", e.flagged}};
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> kinds{
      "exit_law", "green",           "poisson",   "resolvent",      "exterior_hit", "wv",      "dynkin",
      "duality",  "killing",         "resolvent_identity", "decompose", "representation", "maxprin", "polarity"};
  return kinds;
}

// ---------------------------------------------------------------------------
// Model parsing

LevyTriplet parse_operator(const Json& op) {
  const std::string w = "operator";
  const int d = static_cast<int>(as_int(require(op, "dim", w), w + ".dim"));
  if (d < 1 || d > kMaxDim) fail(w + ".dim", "dimension out of range");
  const std::string jump = has(op, "jump") ? as_string(op.at("jump"), w + ".jump") : "none";
  if (jump == "none") return brownian(d, number_or(op, "variance", 1.0, w));
  if (jump == "isotropic") return isotropic_stable(d, as_number(require(op, "s", w), w + ".s"));
  if (jump == "mixed") return mixed_laplacian_stable(d, as_number(require(op, "s", w), w + ".s"));
  if (jump == "cylindrical") {
    const auto s = as_numbers(require(op, "s_axes", w), w + ".s_axes");
    if (static_cast<int>(s.size()) != d) fail(w + ".s_axes", "expected one exponent per axis");
    return cylindrical_stable(s);
  }
  fail(w + ".jump", "unknown jump kind '" + jump + "'");
}

Process parse_process(const Json& sc) {
  const LevyTriplet t = parse_operator(require(sc, "operator", "scenario"));
  const Json& dr = sc.value("drift", Json::object());
  const std::string name = has(dr, "name") ? as_string(dr.at("name"), "drift.name") : "zero";
  const std::vector<double> params = has(dr, "params") ? as_numbers(dr.at("params"), "drift.params") : std::vector<double>{};
  return {t, make_drift(name, t.dim(), params)};
}

Domain parse_domain(const Json& j, const std::string& where, int d) {
  if (!j.is_object() || j.size() != 1) fail(where, "expected exactly one of ball, box, interval, annulus");
  const std::string kind = j.begin().key();
  const Json& v = j.begin().value();
  const std::string w = where + "." + kind;
  if (kind == "ball")
    return Domain::ball(as_point(require(v, "center", w), w + ".center", d), as_number(require(v, "radius", w), w + ".radius"));
  if (kind == "box") return Domain::box(as_point(require(v, "lo", w), w + ".lo", d), as_point(require(v, "hi", w), w + ".hi", d));
  if (kind == "interval") {
    const auto ab = as_numbers(v, w);
    if (ab.size() != 2 || d != 1) fail(w, "expected [a, b] in one dimension");
    return Domain::interval(ab[0], ab[1]);
  }
  if (kind == "annulus")
    return Domain::annulus(as_point(require(v, "center", w), w + ".center", d), as_number(require(v, "r_in", w), w + ".r_in"),
                           as_number(require(v, "r_out", w), w + ".r_out"));
  fail(where, "unknown domain kind '" + kind + "'");
}

ScalarField parse_function(const Json& j, const std::string& where, int d) {
  if (j.is_number()) {
    const double c = as_number(j, where);
    return [c](const Point&) { return c; };
  }
  const std::string kind = as_string(require(j, "kind", where), where + ".kind");
  if (kind == "constant") {
    const double c = as_number(require(j, "value", where), where + ".value");
    return [c](const Point&) { return c; };
  }
  if (kind == "power") {
    // scale |x - center|^exponent
    const Point c = has(j, "center") ? as_point(j.at("center"), where + ".center", d) : zero_point(d);
    const double p = as_number(require(j, "exponent", where), where + ".exponent");
    const double a = number_or(j, "scale", 1.0, where);
    return [c, p, a](const Point& y) { return a * std::pow((y - c).norm(), p); };
  }
  if (kind == "affine") {
    const double c0 = number_or(j, "const", 0.0, where);
    const Point g = as_point(require(j, "coeffs", where), where + ".coeffs", d);
    return [c0, g](const Point& y) { return c0 + g.dot(y); };
  }
  if (kind == "gaussian") {
    const Point c = as_point(require(j, "center", where), where + ".center", d);
    const double width = as_number(require(j, "width", where), where + ".width");
    const double h = number_or(j, "height", 1.0, where);
    if (!(width > 0.0)) fail(where + ".width", "must be positive");
    return [c, width, h](const Point& y) { return h * std::exp(-(y - c).squaredNorm() / (2.0 * width * width)); };
  }
  if (kind == "indicator_ball" || kind == "indicator_exterior") {
    const Point c = has(j, "center") ? as_point(j.at("center"), where + ".center", d) : zero_point(d);
    const double r = as_number(require(j, "radius", where), where + ".radius");
    const double v = number_or(j, "value", 1.0, where);
    if (kind == "indicator_ball") return [c, r, v](const Point& y) { return (y - c).norm() < r ? v : 0.0; };
    return [c, r, v](const Point& y) { return (y - c).norm() > r ? v : 0.0; };
  }
  if (kind == "quadratic_bump") {
    // scale * max(0, radius^2 - |x - center|^2)
    const Point c = has(j, "center") ? as_point(j.at("center"), where + ".center", d) : zero_point(d);
    const double r = as_number(require(j, "radius", where), where + ".radius");
    const double a = number_or(j, "scale", 1.0, where);
    return [c, r, a](const Point& y) { return a * std::max(0.0, r * r - (y - c).squaredNorm()); };
  }
  if (kind == "sum") {
    const Json& terms = require(j, "terms", where);
    if (!terms.is_array() || terms.empty()) fail(where + ".terms", "expected a nonempty array");
    std::vector<ScalarField> fs;
    for (std::size_t i = 0; i < terms.size(); ++i)
      fs.push_back(parse_function(terms[i], where + ".terms[" + std::to_string(i) + "]", d));
    return [fs](const Point& y) {
      double s = 0.0;
      for (const auto& f : fs) s += f(y);
      return s;
    };
  }
  fail(where + ".kind", "unknown function kind '" + kind + "'");
}

MeasureSpec parse_measure(const Json& j, const std::string& where, int d) {
  MeasureSpec m;
  if (j.is_string() && j.get<std::string>() == "zero") return m;
  if (j.is_string() && j.get<std::string>() == "lebesgue") return MeasureSpec::lebesgue();
  if (!j.is_object()) fail(where, "expected a measure object, \"zero\" or \"lebesgue\"");
  if (has(j, "density")) m.density = parse_function(j.at("density"), where + ".density", d);
  if (has(j, "atoms")) {
    const Json& a = j.at("atoms");
    if (!a.is_array()) fail(where + ".atoms", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string w = where + ".atoms[" + std::to_string(i) + "]";
      const double mass = as_number(require(a[i], "mass", w), w + ".mass");
      if (mass < 0.0) fail(w + ".mass", "must be nonnegative");
      m.atoms.push_back({as_point(require(a[i], "x", w), w + ".x", d), mass});
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Task execution

struct Check {
  std::string name;
  double value = 0.0;
  std::string op;
  double threshold = 0.0;
  bool pass = false;
};

Json check_json(const Check& c) {
  Json v = std::isfinite(c.value) ? Json(c.value) : Json(c.value > 0 ? "inf" : (c.value < 0 ? "-inf" : "nan"));
  return {{"name", c.name}, {"value", v}, {"op", c.op}, {"threshold", c.threshold}, {"pass", c.pass}};
}

Check make_check(const std::string& name, double value, const std::string& op, double threshold) {
  bool pass = false;
  if (op == "<") pass = value < threshold;
  if (op == "<=") pass = value <= threshold;
  if (op == ">") pass = value > threshold;
  if (op == ">=") pass = value >= threshold;
  if (op == "==") pass = value == threshold;
  return {name, value, op, threshold, pass};
}

struct Context {
  std::string id;
  Process process;
  PathConfig cfg;
  std::int64_t n = 0;
  Json geometry;
  std::uint64_t hash = 0;
  int d = 1;
};

struct TaskOutput {
  Json results = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> rows;
  std::int64_t n_effective = 0;
};

class TaskRunner {
 public:
  TaskRunner(const Context& ctx, const Json& task, std::size_t index)
      : ctx_(ctx), params_(task.value("params", Json::object())), tol_(task.value("tolerances", Json::object())),
        where_("tasks[" + std::to_string(index) + "]") {}

  TaskOutput run(const std::string& kind) {
    if (kind == "exit_law") exit_law();
    else if (kind == "green") green();
    else if (kind == "poisson") poisson();
    else if (kind == "resolvent") resolvent();
    else if (kind == "exterior_hit") exterior_hit();
    else if (kind == "wv") wv();
    else if (kind == "dynkin") dynkin();
    else if (kind == "duality") duality();
    else if (kind == "killing") killing();
    else if (kind == "resolvent_identity") resolvent_identity();
    else if (kind == "decompose") decompose_task();
    else if (kind == "representation") representation();
    else if (kind == "maxprin") maxprin();
    else if (kind == "polarity") polarity();
    else fail(where_ + ".kind", "unknown task kind '" + kind + "'");
    return std::move(out_);
  }

 private:
  std::string pw(const std::string& key) const { return where_ + ".params." + key; }
  double z_max() const { return number_or(tol_, "z_max", 3.0, where_ + ".tolerances"); }

  Domain domain(const std::string& key) const {
    if (has(params_, key)) return parse_domain(params_.at(key), pw(key), ctx_.d);
    return parse_domain(require(ctx_.geometry, key, "geometry"), "geometry." + key, ctx_.d);
  }
  bool has_domain(const std::string& key) const { return has(params_, key) || has(ctx_.geometry, key); }

  Point point(const std::string& key) const {
    if (has(params_, key)) return as_point(params_.at(key), pw(key), ctx_.d);
    if (has(ctx_.geometry, key)) return as_point(ctx_.geometry.at(key), "geometry." + key, ctx_.d);
    fail(pw(key), "missing required point");
  }

  std::vector<Point> singular_set() const {
    std::vector<Point> K;
    const Json& g = has(params_, "K") ? params_.at("K") : ctx_.geometry.value("K", Json::array());
    if (!g.is_array()) fail("geometry.K", "expected an array of points");
    for (std::size_t i = 0; i < g.size(); ++i) K.push_back(as_point(g[i], "geometry.K[" + std::to_string(i) + "]", ctx_.d));
    return K;
  }

  ScalarField function(const std::string& key) const { return parse_function(require(params_, key, where_ + ".params"), pw(key), ctx_.d); }
  MeasureSpec measure(const std::string& key) const { return parse_measure(require(params_, key, where_ + ".params"), pw(key), ctx_.d); }

  double kappa(const std::string& key, const Domain& over) const {
    if (!has(params_, key)) return 0.0;
    const Json& k = params_.at(key);
    if (k.is_number()) return as_number(k, pw(key));
    if (has(k, "kappa0_plus")) {
      Kappa0Options ko;
      ko.grid = default_kappa0_grid(over, 4000);
      const double k0 = ctx_.process.drift.identically_zero ? 0.0 : kappa0(ctx_.process.drift, ko);
      return k0 + as_number(k.at("kappa0_plus"), pw(key) + ".kappa0_plus");
    }
    fail(pw(key), "expected a number or {kappa0_plus: c}");
  }

  std::int64_t n() const { return ctx_.n; }
  void row(const std::string& name, const MCEstimate& e) {
    out_.rows.push_back(csv_row(name, ctx_.hash, e) + "," + std::to_string(ctx_.cfg.seed));
  }
  void z_check(const std::string& name, double z) { out_.checks.push_back(make_check(name, z, "<", z_max())); }
  void identity(const IdentityCheck& c, const std::string& name) {
    out_.results[name] = {{"lhs", estimate_json(c.lhs)}, {"rhs", estimate_json(c.rhs)}, {"z", c.z}};
    row(name + ".lhs", c.lhs);
    row(name + ".rhs", c.rhs);
    z_check(name + ".z", c.z);
    out_.n_effective += c.lhs.n_samples + c.rhs.n_samples;
  }

  void exit_law() {
    const Domain V = domain("V");
    const Ball* ball = V.as_ball();
    const auto* iso = std::get_if<IsotropicStable>(&ctx_.process.triplet.jump);
    if (!ball || !iso) throw UnsupportedError("exit_law needs a ball V and an isotropic stable process");
    const Point x = point("x");
    const int bins = static_cast<int>(int_or(params_, "bins", 20, where_ + ".params"));
    if (bins < 2) fail(pw("bins"), "need at least two bins");
    const int d = ctx_.d;
    const double s = iso->s, R = ball->radius;
    const Point xc = x - ball->center;
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) {
      const double target = static_cast<double>(k) / bins;
      double lo = 0.0, hi = R;
      while (poisson_ball_radial_cdf(d, s, R, xc, hi) < target) hi *= 2.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (poisson_ball_radial_cdf(d, s, R, xc, mid) < target ? lo : hi) = mid;
      }
      edges.push_back(0.5 * (lo + hi));
    }
    struct Counts {
      std::vector<double> c;
      void merge(const Counts& o) {
        if (c.size() < o.c.size()) c.resize(o.c.size(), 0.0);
        for (std::size_t i = 0; i < o.c.size(); ++i) c[i] += o.c[i];
      }
    };
    Counts init;
    init.c.assign(static_cast<std::size_t>(bins), 0.0);
    const StreamKey key = estimator_key(ctx_.cfg.seed, "exit-law", x);
    const Counts counts = run_paths<Counts>(
        n(), ctx_.cfg.threads,
        [&](std::int64_t c, std::int64_t i, Counts& acc) {
          Rng rng(key, c, i);
          const ExitSample e = wos_exit(ctx_.process, V, x, ctx_.cfg, rng);
          const double gap = (e.exit_pos - ball->center).norm() - R;
          const auto b = std::upper_bound(edges.begin(), edges.end(), gap) - edges.begin();
          acc.c[static_cast<std::size_t>(b)] += 1.0;
        },
        init);
    const ChiSquareResult chi = chi_square_test(counts.c, std::vector<double>(static_cast<std::size_t>(bins), 1.0 / bins));
    out_.results = {{"chi_square", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}, {"counts", counts.c}};
    out_.checks.push_back(make_check("exit_law.p_value", chi.p_value, ">", number_or(tol_, "p_min", 0.01, where_)));
    out_.n_effective = n();
  }

  void green() {
    const Domain V = domain("V");
    const Point x = point("x");
    const double cell = number_or(params_, "cell", 0.1, where_ + ".params");
    const double margin = number_or(params_, "margin", 0.1, where_ + ".params");
    const double k = kappa("kappa", V);
    if (!(cell > 0.0)) fail(pw("cell"), "must be positive");
    // Cells aligned so that x sits at a cell centre.
    const Point blo = V.bbox_lo(), bhi = V.bbox_hi();
    Point lo(ctx_.d), hi(ctx_.d);
    for (int i = 0; i < ctx_.d; ++i) {
      lo[i] = x[i] - cell * (0.5 + std::ceil((x[i] - blo[i]) / cell - 0.5));
      hi[i] = x[i] + cell * (0.5 + std::ceil((bhi[i] - x[i]) / cell - 0.5));
    }
    const GreenGrid grid{lo, hi, cell};
    const GreenEstimate g = estimate_green_density(ctx_.process, V, x, grid, k, n(), ctx_.cfg, "green");
    out_.n_effective = n();
    row("green.total_mass", g.total_mass);
    out_.results["total_mass"] = estimate_json(g.total_mass);
    const double half_diag = 0.5 * cell * std::sqrt(static_cast<double>(ctx_.d));
    const quad::Cubature rule = quad::box_rule(Point::Zero(ctx_.d), Point::Constant(ctx_.d, cell), 6);
    double max_rel = 0.0, max_z = 0.0;
    int eligible = 0;
    bool oracle = false;
    Json cells = Json::array();
    for (std::int64_t c = 0; c < grid.size(); ++c) {
      const Point ctr = grid.center(c);
      if ((ctr - x).norm() - half_diag < margin || V.signed_distance(ctr) - half_diag < margin) continue;
      const Point clo = ctr - Point::Constant(ctx_.d, 0.5 * cell);
      double avg = 0.0;
      bool ok = true;
      for (std::size_t q = 0; q < rule.nodes.size() && ok; ++q) {
        const auto gv = green_oracle(ctx_.process, V, x, clo + rule.nodes[q], k);
        if (!gv) ok = false;
        else avg += rule.weights[q] * *gv;
      }
      const auto idx = static_cast<std::size_t>(c);
      MCEstimate e{g.density[idx], g.std_error[idx], n(), 0.0, false};
      row("green.cell_" + std::to_string(c), e);
      Json cj = {{"center", point_json(ctr)}, {"density", e.value}, {"std_error", e.std_error}};
      if (ok) {
        oracle = true;
        avg /= grid.cell_volume();
        ++eligible;
        const double rel = std::abs(e.value - avg) / avg;
        max_rel = std::max(max_rel, rel);
        max_z = std::max(max_z, std::abs(e.value - avg) / std::max(e.std_error, 1e-300));
        cj["oracle"] = avg;
      }
      cells.push_back(cj);
    }
    out_.results["cells"] = cells;
    if (oracle) {
      out_.results["eligible_cells"] = eligible;
      out_.results["max_relative_error"] = max_rel;
      out_.results["max_cell_z"] = max_z;
      out_.checks.push_back(make_check("green.max_relative_error", max_rel, "<=", number_or(tol_, "rel", 0.05, where_)));
      const Ball* b = V.as_ball();
      const auto* iso = std::get_if<IsotropicStable>(&ctx_.process.triplet.jump);
      if (b && iso && k == 0.0) {
        const double et = expected_exit_time_ball(ctx_.d, iso->s, b->radius, x - b->center);
        z_check("green.total_mass_z", z_score(g.total_mass, MCEstimate::exact(et)));
      }
    }
  }

  void poisson() {
    const Domain V = domain("V");
    const Point x = point("x");
    const double k = kappa("kappa", V);
    const MCEstimate e = estimate_harmonic_extension(ctx_.process, V, x, function("u"), k, n(), ctx_.cfg, "poisson");
    out_.results["estimate"] = estimate_json(e);
    row("poisson", e);
    out_.n_effective = n();
    if (has(params_, "radial_tail")) {
      // Oracle P(|X_tau - c| > r) from the ball exit law.
      const Ball* b = V.as_ball();
      const auto* iso = std::get_if<IsotropicStable>(&ctx_.process.triplet.jump);
      if (!b || !iso) throw UnsupportedError("radial_tail oracle needs a ball and an isotropic stable process");
      const double r = as_number(params_.at("radial_tail"), pw("radial_tail"));
      const double oracle = 1.0 - poisson_ball_radial_cdf(ctx_.d, iso->s, b->radius, x - b->center, r - b->radius);
      out_.results["oracle"] = oracle;
      z_check("poisson.z", z_score(e, MCEstimate::exact(oracle)));
    }
    if (has(params_, "expected")) {
      const double ex = as_number(params_.at("expected"), pw("expected"));
      out_.results["expected"] = ex;
      z_check("poisson.z", z_score(e, MCEstimate::exact(ex)));
    }
    out_.checks.push_back(make_check("poisson.censored_fraction", e.censored_fraction, "<=", kCensoringThreshold));
  }

  void resolvent() {
    const Domain V = domain("V");
    const Point x = point("x");
    const MCEstimate e = estimate_resolvent(ctx_.process, V, x, measure("mu"), kappa("kappa", V), n(), ctx_.cfg);
    out_.results["estimate"] = estimate_json(e);
    row("resolvent", e);
    out_.n_effective = n();
    if (has(params_, "expected")) {
      const double ex = as_number(params_.at("expected"), pw("expected"));
      const double rel = number_or(tol_, "rel", 0.0, where_);
      out_.results["expected"] = ex;
      if (rel > 0.0) {
        out_.checks.push_back(make_check("resolvent.relative_error", std::abs(e.value - ex) / std::abs(ex), "<=", rel));
      } else {
        z_check("resolvent.z", z_score(e, MCEstimate::exact(ex)));
      }
    }
  }

  void exterior_hit() {
    const Domain V = domain("V"), D = domain("D");
    const Point x = point("x");
    const ExteriorHit h = estimate_exterior_hit(ctx_.process, V, D, function("u_ext"), x, kappa("kappa", V), n(), ctx_.cfg);
    out_.results = {{"direct", estimate_json(h.direct)}, {"iw", estimate_json(h.iw)}, {"z", h.z}};
    row("exterior_hit.direct", h.direct);
    row("exterior_hit.iw", h.iw);
    z_check("exterior_hit.z", h.z);
    out_.n_effective = 2 * n();
  }

  void wv() {
    const Domain V = domain("V"), D = domain("D");
    const Point x = point("x");
    const WvEstimate w = estimate_wv(ctx_.process, V, D, x, n(), ctx_.cfg);
    out_.results = {{"direct", estimate_json(w.direct)}, {"iw_complement", estimate_json(w.iw_complement)}, {"z", w.z}};
    row("wv.direct", w.direct);
    row("wv.iw_complement", w.iw_complement);
    out_.n_effective = 2 * n();
    if (has_jumps(ctx_.process.triplet.jump)) {
      z_check("wv.z", w.z);
    } else {
      out_.checks.push_back(make_check("wv.local_deviation", std::abs(w.direct.value - 1.0), "<=", w.direct.censored_fraction));
    }
    out_.checks.push_back(make_check("wv.censored_fraction", w.direct.censored_fraction, "<=", kCensoringThreshold));
  }

  void dynkin() {
    const Domain V = domain("V"), B = domain("B");
    const Point x = point("x");
    DynkinOptions o;
    o.n_outer = int_or(params_, "n_outer", o.n_outer, where_ + ".params");
    o.n_inner = int_or(params_, "n_inner", o.n_inner, where_ + ".params");
    o.budget_cap = static_cast<double>(int_or(params_, "budget_cap", static_cast<std::int64_t>(o.budget_cap), where_ + ".params"));
    identity(check_dynkin(ctx_.process, B, V, measure("mu"), x, kappa("kappa", V), n(), ctx_.cfg, o), "dynkin");
  }

  void duality() {
    const Domain V = domain("V");
    const int nodes = static_cast<int>(int_or(params_, "nodes", 8, where_ + ".params"));
    identity(check_duality(ctx_.process, V, function("f"), function("g"), kappa("kappa", V), n(), ctx_.cfg, nodes), "duality");
  }

  void killing() {
    const Domain V = domain("V");
    identity(check_killing(ctx_.process, V, point("x"), function("f"), kappa("kappa", V), n(), ctx_.cfg), "killing");
  }

  void resolvent_identity() {
    const Domain V = domain("V");
    const double alpha = number_or(params_, "alpha", 0.0, where_ + ".params");
    const double beta = number_or(params_, "beta", 1.0, where_ + ".params");
    const std::int64_t no = int_or(params_, "n_outer", 1000, where_ + ".params");
    const std::int64_t ni = int_or(params_, "n_inner", 100, where_ + ".params");
    identity(check_resolvent_identity(ctx_.process, V, function("f"), point("x"), alpha, beta, n(), no, ni, ctx_.cfg),
             "resolvent_identity");
  }

  ProblemSpec problem() const {
    ProblemSpec spec{ctx_.process, function("u"), domain("D"), domain("V"), {}, {}, std::nullopt, {}, 0.0, {}};
    spec.K = singular_set();
    if (has(params_, "lambda_plus")) spec.lambda.plus = measure("lambda_plus");
    if (has(params_, "lambda_minus")) spec.lambda.minus = measure("lambda_minus");
    if (has(params_, "mu0")) spec.mu0 = measure("mu0");
    if (has(params_, "sigma")) spec.sigma = measure("sigma");
    spec.kappa1 = has(params_, "kappa1") ? kappa("kappa1", spec.D) : 0.0;
    spec.grid_size = static_cast<int>(int_or(params_, "grid_size", spec.grid_size, where_ + ".params"));
    spec.grid_cell = number_or(params_, "grid_cell", spec.grid_cell, where_ + ".params");
    spec.mu0_hats_per_dim = static_cast<int>(int_or(params_, "mu0_hats_per_dim", 0, where_ + ".params"));
    if (has(params_, "grid")) {
      const Json& g = params_.at("grid");
      if (!g.is_array()) fail(pw("grid"), "expected an array of points");
      for (std::size_t i = 0; i < g.size(); ++i) spec.grid.push_back(as_point(g[i], pw("grid") + "[" + std::to_string(i) + "]", ctx_.d));
    }
    return spec;
  }

  void decompose_task() {
    const ProblemSpec spec = problem();
    const BocherDecomposition dec = decompose(spec, n(), ctx_.cfg);
    out_.n_effective = n() * static_cast<std::int64_t>(dec.grid_points.size());
    Json atoms = Json::array();
    for (const AtomCoefficient& a : dec.atom_coeffs)
      atoms.push_back({{"x", point_json(a.x)}, {"a", a.a}, {"std_error", a.std_error}, {"unconstrained", a.unconstrained}});
    Json grid = Json::array();
    for (std::size_t i = 0; i < dec.grid_points.size(); ++i) {
      grid.push_back({{"x", point_json(dec.grid_points[i])}, {"u", dec.u_values[i]}, {"h", estimate_json(dec.h_values[i])},
                      {"sigma_potential", dec.sigma_potential[i]}, {"mu0_potential", dec.mu0_potential[i]},
                      {"lambda_potential", dec.lambda_potential[i]}});
      row("decompose.h_" + std::to_string(i), dec.h_values[i]);
    }
    out_.results = {{"atoms", atoms},           {"grid", grid},
                    {"residual_rms", dec.residual_rms}, {"residual_floor", dec.residual_floor},
                    {"central_scale", dec.central_scale}, {"inconsistent", dec.inconsistent},
                    {"density_coeffs", dec.density_coeffs}};
    for (std::size_t k = 0; k < dec.atom_coeffs.size(); ++k)
      row("decompose.atom_" + std::to_string(k), MCEstimate{dec.atom_coeffs[k].a, dec.atom_coeffs[k].std_error, n(), 0.0, false});
    if (has(params_, "expected_atoms")) {
      const auto ex = as_numbers(params_.at("expected_atoms"), pw("expected_atoms"));
      if (ex.size() != dec.atom_coeffs.size()) fail(pw("expected_atoms"), "one value per singular point required");
      for (std::size_t k = 0; k < ex.size(); ++k)
        out_.checks.push_back(make_check("decompose.atom_" + std::to_string(k) + ".relative_error",
                                         std::abs(dec.atom_coeffs[k].a - ex[k]) / std::abs(ex[k]), "<=",
                                         number_or(tol_, "atom_rel", 0.05, where_)));
    }
    if (has(tol_, "residual_rel")) {
      out_.checks.push_back(make_check("decompose.residual_over_scale", dec.residual_rms / dec.central_scale, "<",
                                       as_number(tol_.at("residual_rel"), where_ + ".tolerances.residual_rel")));
    }
    if (bool_or(params_, "positive_atoms", false, where_ + ".params")) {
      for (std::size_t k = 0; k < dec.atom_coeffs.size(); ++k)
        out_.checks.push_back(make_check("decompose.atom_" + std::to_string(k) + ".z_positive",
                                         dec.atom_coeffs[k].a / std::max(dec.atom_coeffs[k].std_error, 1e-300), ">", z_max()));
    }
    if (bool_or(params_, "removable", false, where_ + ".params")) {
      for (std::size_t k = 0; k < dec.atom_coeffs.size(); ++k) {
        const double z = dec.atom_coeffs[k].std_error > 0.0 ? std::abs(dec.atom_coeffs[k].a) / dec.atom_coeffs[k].std_error
                                                            : (dec.atom_coeffs[k].a == 0.0 ? 0.0 : kInf);
        z_check("decompose.atom_" + std::to_string(k) + ".removable_z", z);
      }
    }
    if (bool_or(params_, "cross_check_strength", false, where_ + ".params")) {
      const double s = std::holds_alternative<NoJump>(ctx_.process.triplet.jump)
                           ? 1.0
                           : std::visit([](const auto& j) -> double {
                               if constexpr (requires { j.s + 0.0; }) return j.s;
                               else throw UnsupportedError("singularity strength needs an isotropic kernel");
                             }, ctx_.process.triplet.jump);
      for (std::size_t k = 0; k < dec.atom_coeffs.size(); ++k) {
        const double a_loc = singularity_strength(spec.u, dec.atom_coeffs[k].x, ctx_.d, s, {0.1, 0.05, 0.025, 0.0125});
        out_.results["atoms"][k]["singularity_strength"] = a_loc;
        out_.checks.push_back(make_check("decompose.atom_" + std::to_string(k) + ".strength_agreement",
                                         std::abs(dec.atom_coeffs[k].a - a_loc) / std::abs(a_loc), "<=",
                                         number_or(tol_, "strength_rel", 0.10, where_)));
      }
    }
  }

  void representation() {
    const RepresentationCheck r = representation_check_kappa1(problem(), n(), ctx_.cfg);
    Json pts = Json::array();
    for (std::size_t i = 0; i < r.grid_points.size(); ++i) {
      pts.push_back({{"x", point_json(r.grid_points[i])}, {"lhs", estimate_json(r.lhs[i])}, {"rhs", estimate_json(r.rhs[i])}});
      row("representation.rhs_" + std::to_string(i), r.rhs[i]);
    }
    out_.results = {{"points", pts}, {"max_z", r.max_z_score}};
    z_check("representation.max_z", r.max_z_score);
    out_.n_effective = n() * static_cast<std::int64_t>(r.grid_points.size());
  }

  void maxprin() {
    const int samples = static_cast<int>(int_or(params_, "exterior_samples", 10000, where_ + ".params"));
    const MaxPrincipleCheck m = verify_max_principle(problem(), n(), ctx_.cfg, samples);
    Json pts = Json::array();
    for (std::size_t i = 0; i < m.grid_points.size(); ++i) {
      pts.push_back({{"x", point_json(m.grid_points[i])}, {"margin", estimate_json(m.margins[i])}});
      row("maxprin.margin_" + std::to_string(i), m.margins[i]);
    }
    out_.results = {{"points", pts},
                    {"min_margin", m.min_margin},
                    {"min_margin_z", std::isfinite(m.min_margin_z) ? Json(m.min_margin_z) : Json("inf")},
                    {"inf_exterior", m.inf_exterior},
                    {"inf_is_sample_infimum", true},
                    {"exterior_samples", m.exterior_samples}};
    out_.checks.push_back(make_check("maxprin.min_margin_z", m.min_margin_z, ">=", -z_max()));
    out_.n_effective = n() * static_cast<std::int64_t>(m.grid_points.size());
  }

  void polarity() {
    const std::string mode = has(params_, "mode") ? as_string(params_.at("mode"), pw("mode")) : "ladder";
    const auto expect_verdict = [&](const std::string& got) {
      if (!has(params_, "expected")) return;
      const std::string ex = as_string(params_.at("expected"), pw("expected"));
      out_.results["expected"] = ex;
      out_.checks.push_back(make_check("polarity.verdict_matches", got == ex ? 1.0 : 0.0, "==", 1.0));
    };
    if (mode == "lil") {
      const LilResult r = lil_singleton_test(ctx_.process.triplet.jump, ctx_.d);
      const std::string v = r.polar ? "polar" : "nonpolar";
      out_.results = {{"verdict", v},          {"criterion", r.criterion},      {"beta", r.beta},
                      {"window", {r.window_lo, r.window_hi}}, {"window_nonempty", r.window_nonempty},
                      {"paper_beta", r.paper_beta}, {"paper_window_nonempty", r.paper_window_nonempty}};
      expect_verdict(v);
      return;
    }
    if (mode == "hyperplane") {
      HyperplaneOptions ho;
      ho.n = int_or(params_, "n_mc", 0, where_ + ".params");
      ho.cfg = ctx_.cfg;
      const int codim = static_cast<int>(int_or(params_, "codim", 2, where_ + ".params"));
      const PolarityVerdict v = hyperplane_polarity(ctx_.process.triplet, ctx_.d, codim, ho);
      out_.results = {{"verdict", to_string(v.verdict)}, {"note", v.note}};
      ladder_json(v);
      expect_verdict(to_string(v.verdict));
      out_.n_effective = 5 * ho.n;
      return;
    }
    if (mode == "capacity") {
      const auto eps = as_numbers(require(params_, "eps", where_ + ".params"), pw("eps"));
      if (eps.size() < 2) fail(pw("eps"), "need at least two radii");
      Json caps = Json::array();
      std::vector<double> lc;
      for (double e : eps) {
        lc.push_back(capacity_estimate(ctx_.process.triplet.jump, ctx_.d, e, number_or(params_, "kappa", 0.0, where_)));
        caps.push_back({{"eps", e}, {"capacity_lower_bound", lc.back()}});
      }
      const double slope = std::log(lc.front() / lc.back()) / std::log(eps.front() / eps.back());
      out_.results = {{"capacities", caps}, {"slope", slope}};
      if (has(params_, "expected_exponent"))
        out_.checks.push_back(make_check("polarity.capacity_slope_error",
                                         std::abs(slope - as_number(params_.at("expected_exponent"), pw("expected_exponent"))),
                                         "<=", number_or(tol_, "exponent", 0.05, where_)));
      return;
    }
    if (mode != "ladder") fail(pw("mode"), "expected ladder, lil, hyperplane or capacity");
    const Point x = point("x");
    const Point c = has(params_, "center") ? as_point(params_.at("center"), pw("center"), ctx_.d) : zero_point(ctx_.d);
    std::vector<double> eps = has(params_, "eps") ? as_numbers(params_.at("eps"), pw("eps")) : default_eps_ladder(x, c);
    HittingOptions ho;
    ho.reference_radius = number_or(params_, "reference_radius", 0.0, where_ + ".params");
    ho.kappa = number_or(params_, "kappa", 0.0, where_ + ".params");
    const Target t = has(params_, "codim") ? Target::tube(c, static_cast<int>(as_int(params_.at("codim"), pw("codim"))), eps.front())
                                           : Target::ball(c, eps.front());
    const PolarityVerdict v = polar_extrapolate(hitting_ladder(ctx_.process, t, x, eps, n(), ctx_.cfg, ho));
    out_.results = {{"verdict", to_string(v.verdict)}, {"note", v.note}};
    ladder_json(v);
    out_.n_effective = n() * static_cast<std::int64_t>(eps.size());
    expect_verdict(to_string(v.verdict));
    if (has(params_, "expected_exponent"))
      out_.checks.push_back(make_check("polarity.exponent_error",
                                       std::abs(v.fitted_exponent - as_number(params_.at("expected_exponent"), pw("expected_exponent"))),
                                       "<=", number_or(tol_, "exponent", 0.1, where_)));
  }

  void ladder_json(const PolarityVerdict& v) {
    Json lad = Json::array();
    for (const LadderEntry& e : v.evidence) {
      lad.push_back({{"eps", e.eps}, {"estimate", e.estimate}, {"std_error", e.std_error}, {"n", e.n}});
      row("polarity.eps_" + hex64(hash_double(0, e.eps)), MCEstimate{e.estimate, e.std_error, e.n, 0.0, false});
    }
    out_.results["ladder"] = lad;
    out_.results["fitted_exponent"] = v.fitted_exponent;
    out_.results["exponent_std_error"] = std::isfinite(v.exponent_std_error) ? Json(v.exponent_std_error) : Json("inf");
    out_.results["limit"] = v.limit;
    out_.results["limit_std_error"] = v.limit_std_error;
  }

  const Context& ctx_;
  Json params_;
  Json tol_;
  std::string where_;
  TaskOutput out_;
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return id != "." && id != "..";
}

std::string task_list(const Json& canonical) {
  std::string s;
  for (const Json& t : canonical.at("tasks")) s += (s.empty() ? "" : ",") + t.at("kind").get<std::string>();
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

Json parse_config_text(const std::string& text, bool toml, const std::string& origin) {
  if (toml) {
    try {
      const toml::table tbl = toml::parse(text, origin);
      std::ostringstream ss;
      ss << toml::json_formatter{tbl};
      return Json::parse(ss.str());
    } catch (const toml::parse_error& e) {
      fail(origin + ":" + std::to_string(e.source().begin.line), std::string(e.description()));
    }
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into a line number.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    fail(origin + ":" + std::to_string(line), e.what());
  }
}

Json load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.extension() == ".toml", path.string());
}

std::vector<std::string> builtin_names() {
  return {"wv_local_is_one", "exit_law_stable", "green_stable", "dynkin_stable", "empty"};
}

Json builtin_scenario(const std::string& name) {
  if (name == "wv_local_is_one") {
    return Json::parse(R"({
      "id": "wv_local_is_one",
      "operator": {"dim": 2, "jump": "none"},
      "geometry": {"D": {"ball": {"center": [0, 0], "radius": 1}}, "V": {"ball": {"center": [0, 0], "radius": 0.5}}, "x": [0.1, 0.2]},
      "budget": {"n": 2000, "scheme": "wos", "seed": 1},
      "tasks": [{"kind": "wv"}]
    })");
  }
  if (name == "exit_law_stable") {
    return Json::parse(R"({
      "id": "exit_law_stable",
      "operator": {"dim": 2, "jump": "isotropic", "s": 0.5},
      "geometry": {"V": {"ball": {"center": [0, 0], "radius": 1}}, "x": [0.3, 0]},
      "budget": {"n": 100000, "scheme": "wos", "seed": 1},
      "tasks": [{"kind": "exit_law", "params": {"bins": 20}}]
    })");
  }
  if (name == "green_stable") {
    return Json::parse(R"({
      "id": "green_stable",
      "operator": {"dim": 2, "jump": "isotropic", "s": 0.75},
      "geometry": {"V": {"ball": {"center": [0, 0], "radius": 1}}, "x": [0.3, 0]},
      "budget": {"n": 100000, "scheme": "wos", "seed": 1},
      "tasks": [{"kind": "green", "params": {"cell": 0.1, "margin": 0.1}, "tolerances": {"rel": 0.1}}]
    })");
  }
  if (name == "dynkin_stable") {
    return Json::parse(R"({
      "id": "dynkin_stable",
      "operator": {"dim": 2, "jump": "isotropic", "s": 0.75},
      "geometry": {"V": {"ball": {"center": [0, 0], "radius": 1}}, "B": {"ball": {"center": [0, 0], "radius": 0.25}}, "x": [0, 0]},
      "budget": {"n": 20000, "scheme": "wos", "seed": 1},
      "tasks": [{"kind": "dynkin", "params": {"mu": "lebesgue", "n_outer": 1000, "n_inner": 100}}]
    })");
  }
  if (name == "empty") {
    return Json::parse(R"({"id": "empty", "operator": {"dim": 1}, "tasks": []})");
  }
  fail("builtin", "unknown built-in scenario '" + name + "'");
}

Json canonicalize(const Json& scenario, const Overrides& ov) {
  if (!scenario.is_object()) fail("scenario", "expected an object");
  Json c = Json::object();
  const std::string id = as_string(require(scenario, "id", "scenario"), "id");
  if (!valid_id(id)) fail("id", "must be 1-128 characters from [A-Za-z0-9_.-]");
  c["id"] = id;
  c["operator"] = require(scenario, "operator", "scenario");
  parse_operator(c["operator"]);
  c["drift"] = scenario.value("drift", Json{{"name", "zero"}, {"params", Json::array()}});
  c["geometry"] = scenario.value("geometry", Json::object());
  if (!c["geometry"].is_object()) fail("geometry", "expected an object");

  const Json b = scenario.value("budget", Json::object());
  if (!b.is_object()) fail("budget", "expected an object");
  Json budget;
  budget["n"] = int_or(b, "n", 10000, "budget");
  budget["dt"] = number_or(b, "dt", 1e-3, "budget");
  if (has(b, "seed")) {
    const Json& s = b.at("seed");
    if (!s.is_number_unsigned()) fail("budget.seed", "expected a nonnegative integer");
    budget["seed"] = s.get<std::uint64_t>();
  } else {
    budget["seed"] = std::uint64_t{1};
  }
  budget["scheme"] = has(b, "scheme") ? as_string(b.at("scheme"), "budget.scheme") : "euler";
  budget["threads"] = int_or(b, "threads", 1, "budget");
  budget["horizon"] = number_or(b, "horizon", 0.0, "budget");
  if (ov.n) budget["n"] = *ov.n;
  if (ov.dt) budget["dt"] = *ov.dt;
  if (ov.seed) budget["seed"] = *ov.seed;
  if (budget["n"].get<std::int64_t>() < 1) fail("budget.n", "must be positive");
  if (!(budget["dt"].get<double>() > 0.0)) fail("budget.dt", "must be positive");
  if (budget["threads"].get<std::int64_t>() < 1) fail("budget.threads", "must be at least 1");
  if (budget["horizon"].get<double>() < 0.0) fail("budget.horizon", "must be nonnegative");
  const std::string scheme = budget["scheme"].get<std::string>();
  if (scheme != "euler" && scheme != "wos") fail("budget.scheme", "expected euler or wos");
  c["budget"] = budget;

  Json tasks = Json::array();
  if (has(scenario, "tasks")) {
    const Json& t = scenario.at("tasks");
    if (!t.is_array()) fail("tasks", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string w = "tasks[" + std::to_string(i) + "]";
      if (!t[i].is_object()) fail(w, "expected an object");
      Json e = {{"kind", as_string(require(t[i], "kind", w), w + ".kind")},
                {"params", t[i].value("params", Json::object())},
                {"tolerances", t[i].value("tolerances", Json::object())}};
      tasks.push_back(e);
    }
  } else if (has(scenario, "task")) {
    tasks.push_back({{"kind", as_string(scenario.at("task"), "task")},
                     {"params", scenario.value("params", Json::object())},
                     {"tolerances", scenario.value("tolerances", Json::object())}});
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string kind = tasks[i]["kind"].get<std::string>();
    if (std::find(task_kinds().begin(), task_kinds().end(), kind) == task_kinds().end())
      fail("tasks[" + std::to_string(i) + "].kind", "unknown task kind '" + kind + "'");
    if (!tasks[i]["params"].is_object()) fail("tasks[" + std::to_string(i) + "].params", "expected an object");
    if (!tasks[i]["tolerances"].is_object()) fail("tasks[" + std::to_string(i) + "].tolerances", "expected an object");
  }
  c["tasks"] = tasks;
  return c;
}

std::uint64_t params_hash(const Json& canonical) { return hash_string(canonical.dump()); }

ScenarioResult run_scenario_config(const Json& scenario, const fs::path& out_dir, const Overrides& overrides) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult res;
  res.id = scenario.is_object() && scenario.contains("id") && scenario["id"].is_string() ? scenario["id"].get<std::string>() : "";
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  Json canonical;
  try {
    canonical = canonicalize(scenario, overrides);
  } catch (const Error& e) {
    res.status = 2;
    res.message = e.what();
    if (valid_id(res.id)) {
      Json report = {{"schema_version", kReportSchemaVersion}, {"id", res.id}, {"status", 2}, {"pass", false}, {"error", e.what()}};
      if (const auto* se = dynamic_cast<const SchemaError*>(&e)) report["field"] = se->field;
      write_text(out_dir / res.id / "report.json", report.dump(2) + "\n");
      res.report = report;
    }
    res.wall_time = elapsed();
    return res;
  }
  res.task = task_list(canonical);
  const std::uint64_t hash = params_hash(canonical);
  const fs::path dir = out_dir / res.id;
  Json report = {{"schema_version", kReportSchemaVersion}, {"id", res.id},           {"params_hash", hex64(hash)},
                 {"seed", canonical["budget"]["seed"]},    {"config", canonical},    {"tasks", Json::array()},
                 {"status", 0},                            {"pass", true}};
  auto flush = [&] { write_text(dir / "report.json", report.dump(2) + "\n"); };
  try {
    Context ctx;
    ctx.id = res.id;
    ctx.process = parse_process(canonical);
    ctx.d = ctx.process.dim();
    const Json& b = canonical["budget"];
    ctx.n = b["n"].get<std::int64_t>();
    ctx.cfg.dt = b["dt"].get<double>();
    ctx.cfg.seed = b["seed"].get<std::uint64_t>();
    ctx.cfg.scheme = b["scheme"].get<std::string>() == "wos" ? Scheme::WalkOnSpheres : Scheme::Euler;
    ctx.cfg.threads = static_cast<int>(b["threads"].get<std::int64_t>());
    ctx.cfg.horizon = b["horizon"].get<double>();
    ctx.geometry = canonical["geometry"];
    ctx.hash = hash;
    fs::create_directories(dir / "tables");
    const Json& tasks = canonical["tasks"];
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::string kind = tasks[i]["kind"].get<std::string>();
      TaskRunner runner(ctx, tasks[i], i);
      const TaskOutput out = runner.run(kind);
      bool pass = true;
      Json checks = Json::array();
      for (const Check& c : out.checks) {
        checks.push_back(check_json(c));
        pass = pass && c.pass;
      }
      report["tasks"].push_back({{"kind", kind}, {"results", out.results}, {"checks", checks}, {"pass", pass}});
      if (!pass) {
        report["pass"] = false;
        report["status"] = 1;
        res.status = 1;
        for (const Check& c : out.checks)
          if (!c.pass) res.message += (res.message.empty() ? "" : "; ") + c.name + "=" + std::to_string(c.value);
      }
      std::string csv = csv_header() + ",seed\n";
      for (const std::string& r : out.rows) csv += r + "\n";
      char name[64];
      std::snprintf(name, sizeof(name), "%02zu_%s.csv", i, kind.c_str());
      write_text(dir / "tables" / name, csv);
      res.n_effective += out.n_effective;
      flush();
    }
    flush();
  } catch (const Error& e) {
    res.status = 2;
    res.message = e.what();
    report["status"] = 2;
    report["pass"] = false;
    report["error"] = e.what();
    flush();
  }
  res.report = report;
  res.wall_time = elapsed();
  return res;
}

ScenarioResult run_scenario(const std::string& source, const fs::path& out_dir, const Overrides& overrides) {
  Json cfg;
  try {
    if (fs::exists(source)) {
      cfg = load_config(source);
    } else {
      const auto names = builtin_names();
      if (std::find(names.begin(), names.end(), source) == names.end()) fail(source, "no such file or built-in scenario");
      cfg = builtin_scenario(source);
    }
  } catch (const Error& e) {
    ScenarioResult r;
    r.status = 2;
    r.message = e.what();
    return r;
  }
  return run_scenario_config(cfg, out_dir, overrides);
}

SuiteResult run_suite(const fs::path& manifest, int jobs, const fs::path& out_dir, const Overrides& overrides) {
  SuiteResult suite;
  std::vector<Json> configs;
  try {
    const Json m = load_config(manifest);
    const Json& list = require(m, "scenarios", manifest.string());
    if (!list.is_array()) fail(manifest.string() + ".scenarios", "expected an array of paths");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string rel = as_string(list[i], "scenarios[" + std::to_string(i) + "]");
      const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : manifest.parent_path() / rel;
      if (!fs::exists(p)) fail("scenarios[" + std::to_string(i) + "]", "no such file " + p.string());
      configs.push_back(load_config(p));
      const std::string id = canonicalize(configs.back(), overrides)["id"].get<std::string>();
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) fail("scenarios[" + std::to_string(i) + "]", "duplicate scenario id '" + id + "'");
      ids.push_back(id);
    }
  } catch (const Error& e) {
    suite.status = 2;
    ScenarioResult r;
    r.status = 2;
    r.message = e.what();
    suite.scenarios.push_back(r);
    return suite;
  }
  suite.scenarios.resize(configs.size());
  std::atomic<std::size_t> next{0};
  const int width = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) suite.scenarios[i] = run_scenario_config(configs[i], out_dir, overrides);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < width; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = "id,task,result,wall_time,n_effective\n";
  for (const ScenarioResult& r : suite.scenarios) {
    const char* verdict = r.status == 0 ? "PASS" : (r.status == 1 ? "FAIL" : "ERROR");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time);
    csv += r.id + ",\"" + r.task + "\"," + verdict + "," + buf + "," + std::to_string(r.n_effective) + "\n";
    suite.status = std::max(suite.status, r.status);
  }
  write_text(out_dir / "summary.csv", csv);
  return suite;
}

int main_cli(int argc, char** argv) {
  CLI::App app{"Monte Carlo potential theory for Levy-type operators"};
  app.require_subcommand(1);
  const char* env = std::getenv("LEVYPOT_OUT_DIR");
  std::string out_dir = env && *env ? env : "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> n;
  std::optional<double> dt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "Output directory (default $LEVYPOT_OUT_DIR or ./results)");
    sub->add_option("--seed", seed, "Override the budget seed");
    sub->add_option("--n", n, "Override the number of paths")->check(CLI::PositiveNumber);
    sub->add_option("--dt", dt, "Override the Euler step")->check(CLI::PositiveNumber);
  };
  std::string config;
  auto* run = app.add_subcommand("run", "Run one scenario (file or built-in name)");
  run->add_option("config", config, "Scenario file (.json or .toml) or built-in name")->required();
  add_common(run);
  std::string manifest;
  int jobs = 1;
  auto* suite = app.add_subcommand("suite", "Run every scenario of a manifest");
  suite->add_option("manifest", manifest, "Manifest file listing scenario files")->required();
  suite->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
  add_common(suite);
  auto* list = app.add_subcommand("list-builtins", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const Overrides ov{seed, n, dt};
  if (list->parsed()) {
    for (const std::string& name : builtin_names()) std::cout << name << "\n";
    return 0;
  }
  if (run->parsed()) {
    const ScenarioResult r = run_scenario(config, out_dir, ov);
    if (r.status == 0) std::cout << r.id << ": PASS\n";
    else std::cerr << (r.id.empty() ? config : r.id) << ": " << (r.status == 1 ? "FAIL " : "ERROR ") << r.message << "\n";
    return r.status;
  }
  const SuiteResult s = run_suite(manifest, jobs, out_dir, ov);
  for (const ScenarioResult& r : s.scenarios) {
    const char* verdict = r.status == 0 ? "PASS" : (r.status == 1 ? "FAIL" : "ERROR");
    std::cout << (r.id.empty() ? "<manifest>" : r.id) << ": " << verdict << (r.message.empty() ? "" : " " + r.message) << "\n";
  }
  return s.status;
}

}  // namespace levypot::cli
