#include "doctest.h"

#include "levypot/bocher_engine.hpp"
#include "levypot/exact_kernels.hpp"

using namespace levypot;

namespace {

Process brownian_process(int d, const std::string& drift = "zero", std::vector<double> params = {}) {
  return {brownian(d, 1.0), make_drift(drift, d, params)};
}
Process stable_process(int d, double s) { return {isotropic_stable(d, s), make_drift("zero", d)}; }

PathConfig wos_config(std::uint64_t seed = 5) {
  PathConfig cfg;
  cfg.scheme = Scheme::WalkOnSpheres;
  cfg.seed = seed;
  return cfg;
}

PathConfig euler_config(double dt, std::uint64_t seed = 5) {
  PathConfig cfg;
  cfg.dt = dt;
  cfg.seed = seed;
  return cfg;
}

ProblemSpec base_spec(Process p, ScalarField u, double v_radius = 0.5) {
  const int d = p.dim();
  ProblemSpec spec{std::move(p), std::move(u), Domain::ball(d, 1.0), Domain::ball(d, v_radius)};
  return spec;
}

}  // namespace

TEST_CASE("projected-gradient NNLS") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 0, 1, 2, 1;
  const Eigen::Vector2d truth(1.5, 0.25);
  const NnlsResult r = nnls_projected_gradient(X, X * truth);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(r.x[1] == doctest::Approx(0.25).epsilon(1e-9));
  // A negative unconstrained optimum is clipped to the best feasible point.
  const Eigen::Vector2d neg(1.0, -2.0);
  const NnlsResult c = nnls_projected_gradient(X, X * neg);
  CHECK(c.x[1] == 0.0);
  const Eigen::VectorXd y = X * neg;
  const double a0 = X.col(0).dot(y) / X.col(0).squaredNorm();
  CHECK(c.x[0] == doctest::Approx(std::max(0.0, a0)).epsilon(1e-9));
  CHECK(nnls_projected_gradient(Eigen::MatrixXd(3, 0), Eigen::VectorXd::Ones(3)).x.size() == 0);
}

TEST_CASE("singularity strength") {
  const Point x0 = make_point({0.1, -0.2, 0.0});
  const std::vector<double> ladder{0.1, 0.05, 0.025, 0.0125};
  auto G = [&](const Point& y) { return riesz_green_free(3, 1.0, y, x0); };
  CHECK(singularity_strength(G, x0, 3, 1.0, ladder) == doctest::Approx(1.0).epsilon(1e-8));
  auto smooth = [](const Point& y) { return 1.0 + y[0] * y[0]; };
  CHECK(std::abs(singularity_strength(smooth, x0, 3, 1.0, ladder)) < 1e-3);
  auto mixed = [&](const Point& y) { return 2.0 * G(y) + 3.0 + y[0] - y[1]; };
  CHECK(singularity_strength(mixed, x0, 3, 1.0, ladder) == doctest::Approx(2.0).epsilon(0.02));
  const Point z = make_point({0.0, 0.0});
  auto Gs = [&](const Point& y) { return riesz_green_free(2, 0.75, y, z); };
  CHECK(singularity_strength(Gs, z, 2, 0.75, ladder) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(singularity_strength(G, x0, 3, 1.0, {0.1, 0.05, 0.06, 0.01}), ArgumentError);
  CHECK_THROWS_AS(singularity_strength(G, x0, 3, 1.0, {0.1, 0.05, 0.01}), ArgumentError);
}

TEST_CASE("decompose: Newtonian singularity in three dimensions") {
  ProblemSpec spec = base_spec(brownian_process(3), [](const Point& y) { return 1.0 / y.norm(); });
  spec.K = {zero_point(3)};
  const BocherDecomposition dec = decompose(spec, 2000, wos_config());
  REQUIRE(dec.atom_coeffs.size() == 1);
  CHECK(dec.atom_coeffs[0].a == doctest::Approx(2.0 * kPi).epsilon(0.05));
  CHECK(dec.residual_rms < 0.03 * dec.central_scale);
  CHECK_FALSE(dec.inconsistent);
  for (const MCEstimate& h : dec.h_values) CHECK(h.value == doctest::Approx(2.0).epsilon(1e-9));
  const double a_local = singularity_strength(spec.u, zero_point(3), 3, 1.0, {0.1, 0.05, 0.025, 0.0125});
  CHECK(std::abs(dec.atom_coeffs[0].a - a_local) < 0.1 * a_local);
}

TEST_CASE("decompose: fractional fundamental profile") {
  const double s = 0.75;
  ProblemSpec spec = base_spec(stable_process(2, s), [s](const Point& y) { return std::pow(y.norm(), 2.0 * s - 2.0); });
  spec.K = {zero_point(2)};
  const BocherDecomposition dec = decompose(spec, 20000, wos_config());
  REQUIRE(dec.atom_coeffs.size() == 1);
  const double expected = 1.0 / riesz_constant(2, s);
  CHECK(dec.atom_coeffs[0].a > 0.0);
  CHECK(std::abs(dec.atom_coeffs[0].a - expected) < 3.0 * dec.atom_coeffs[0].std_error + 0.02 * expected);
  CHECK(dec.residual_rms < 0.05 * dec.central_scale);
  const double a_local = singularity_strength(spec.u, zero_point(2), 2, s, {0.1, 0.05, 0.025, 0.0125});
  CHECK(std::abs(dec.atom_coeffs[0].a - a_local) < 0.1 * a_local);
}

TEST_CASE("decompose: removable singularity gives a vanishing atom") {
  ProblemSpec spec = base_spec(stable_process(2, 0.75), [](const Point& y) { return 2.0 + y[0]; });
  spec.K = {zero_point(2)};
  const BocherDecomposition dec = decompose(spec, 20000, wos_config());
  CHECK(dec.atom_coeffs[0].a <= 3.0 * dec.atom_coeffs[0].std_error + 1e-12);
  CHECK(dec.residual_rms < 4.0 * dec.residual_floor);
}

TEST_CASE("decompose without singular points has residual at the statistical floor") {
  ProblemSpec spec = base_spec(stable_process(2, 0.75), [](const Point& y) { return 2.0 + y[0]; });
  const BocherDecomposition dec = decompose(spec, 20000, wos_config());
  CHECK(dec.atom_coeffs.empty());
  CHECK(dec.residual_rms < 2.0 * dec.residual_floor);
}

TEST_CASE("decompose is scale equivariant under common random numbers") {
  const double s = 0.75;
  auto u = [s](const Point& y) { return std::pow(y.norm(), 2.0 * s - 2.0) + 0.5; };
  ProblemSpec spec = base_spec(stable_process(2, s), u);
  spec.K = {zero_point(2)};
  spec.grid_size = 8;
  const BocherDecomposition a = decompose(spec, 4000, wos_config());
  spec.u = [u](const Point& y) { return 3.0 * u(y); };
  const BocherDecomposition b = decompose(spec, 4000, wos_config());
  CHECK(b.atom_coeffs[0].a == doctest::Approx(3.0 * a.atom_coeffs[0].a).epsilon(1e-9));
  for (std::size_t i = 0; i < a.h_values.size(); ++i)
    CHECK(b.h_values[i].value == doctest::Approx(3.0 * a.h_values[i].value).epsilon(1e-12));
}

TEST_CASE("atom coefficient does not depend on the ball used") {
  const double s = 0.75;
  auto u = [s](const Point& y) { return std::pow(y.norm(), 2.0 * s - 2.0); };
  ProblemSpec small = base_spec(stable_process(2, s), u, 0.5);
  small.K = {zero_point(2)};
  ProblemSpec large = base_spec(stable_process(2, s), u, 0.7);
  large.K = {zero_point(2)};
  const auto a = decompose(small, 10000, wos_config()).atom_coeffs[0];
  const auto b = decompose(large, 10000, wos_config()).atom_coeffs[0];
  CHECK(std::abs(a.a - b.a) < 3.0 * std::hypot(a.std_error, b.std_error) + 1e-3 * a.a);
}

TEST_CASE("grid validation") {
  ProblemSpec spec = base_spec(brownian_process(2), [](const Point&) { return 1.0; });
  spec.K = {zero_point(2)};
  spec.grid = {make_point({0.05, 0.0})};
  CHECK_THROWS_AS(decomposition_grid(spec), GridError);
  spec.grid = {make_point({0.2, 0.0}), make_point({0.0, -0.3})};
  CHECK(decomposition_grid(spec).size() == 2);
  spec.grid = {};
  for (const Point& x : decomposition_grid(spec)) {
    CHECK(x.norm() >= 0.1);
    CHECK(spec.V.signed_distance(x) >= spec.grid_cell);
  }
  ProblemSpec bad = base_spec(brownian_process(2), [](const Point&) { return 1.0; });
  bad.K = {make_point({0.9, 0.0})};
  CHECK_THROWS_AS(validate_problem(bad), DomainError);
  ProblemSpec negative = base_spec(brownian_process(2), [](const Point& y) { return y[0]; });
  CHECK_THROWS_AS(validate_problem(negative), ArgumentError);
}

TEST_CASE("maximum principle margins") {
  SUBCASE("constant u") {
    ProblemSpec spec = base_spec(stable_process(2, 0.5), [](const Point&) { return 2.0; });
    spec.grid_size = 5;
    const MaxPrincipleCheck m = verify_max_principle(spec, 5000, wos_config(), 2000);
    CHECK(m.inf_exterior == 2.0);
    for (const MCEstimate& e : m.margins) CHECK(e.value >= 0.0);
  }
  SUBCASE("local case is drift independent") {
    auto u = [](const Point& y) { return 1.0 / y.norm(); };
    for (const Process& p : {brownian_process(3), brownian_process(3, "constant", {0.5, -0.3, 0.2})}) {
      ProblemSpec spec = base_spec(p, u);
      spec.K = {zero_point(3)};
      const MaxPrincipleCheck m = verify_max_principle(spec, 100, euler_config(1e-3), 2000);
      CHECK(m.inf_exterior == doctest::Approx(1.0).epsilon(2e-3));
      CHECK(m.min_margin >= 0.0);
    }
  }
  SUBCASE("fractional fundamental profile") {
    auto u = [](const Point& y) { return std::pow(y.norm(), -1.0); };
    ProblemSpec spec = base_spec(stable_process(2, 0.5), u);
    spec.K = {zero_point(2)};
    const MaxPrincipleCheck m = verify_max_principle(spec, 5000, wos_config(), 2000);
    CHECK(m.margins.size() == 20);
    CHECK(m.min_margin_z >= -3.0);
  }
  SUBCASE("empty exterior sample") {
    ProblemSpec spec = base_spec(stable_process(2, 0.5), [](const Point&) { return 1.0; }, 1.0);
    CHECK_THROWS_AS(verify_max_principle(spec, 10, wos_config(), 100), ArgumentError);
  }
}

TEST_CASE("representation with kappa1") {
  const Domain D = Domain::interval(-1.0, 1.0), V = Domain::interval(-0.5, 0.5);
  SUBCASE("u = 0") {
    ProblemSpec spec{brownian_process(1), [](const Point&) { return 0.0; }, D, V};
    spec.mu0 = MeasureSpec::zero();
    spec.kappa1 = 1.0;
    spec.grid_size = 4;
    const RepresentationCheck r = representation_check_kappa1(spec, 100, euler_config(1e-3));
    CHECK(r.max_z_score == 0.0);
  }
  SUBCASE("potential of a density") {
    // u = R^{0,V} 1 = 1/4 - x^2 on V, zero outside.
    ProblemSpec spec{brownian_process(1), [](const Point& y) { return std::max(0.0, 0.25 - y[0] * y[0]); }, D, V};
    spec.mu0 = MeasureSpec::lebesgue();
    spec.kappa1 = 1.0;
    spec.grid_size = 5;
    spec.grid_cell = 0.02;
    const RepresentationCheck r = representation_check_kappa1(spec, 5000, euler_config(5e-4));
    CHECK(r.max_z_score < 3.0);
  }
  SUBCASE("harmonic u") {
    ProblemSpec spec{brownian_process(1), [](const Point& y) { return 1.0 + y[0]; }, D, V};
    spec.mu0 = MeasureSpec::zero();
    spec.kappa1 = 2.0;
    spec.grid_size = 5;
    spec.grid_cell = 0.02;
    const RepresentationCheck r = representation_check_kappa1(spec, 5000, euler_config(5e-4));
    CHECK(r.max_z_score < 3.0);
  }
  SUBCASE("kappa1 must exceed kappa0") {
    ProblemSpec spec{brownian_process(1, "sine", {1.0}), [](const Point&) { return 1.0; }, D, V};
    spec.mu0 = MeasureSpec::zero();
    spec.kappa1 = 0.5;
    CHECK_THROWS_AS(representation_check_kappa1(spec, 10, euler_config(1e-3)), ArgumentError);
  }
}
