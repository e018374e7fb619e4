#include "doctest.h"

#include "levypot/exact_kernels.hpp"
#include "levypot/polarity.hpp"

using namespace levypot;

namespace {

Process brownian_process(int d, const std::string& drift = "zero", std::vector<double> params = {}) {
  return {brownian(d, 1.0), make_drift(drift, d, params)};
}
Process stable_process(int d, double s) { return {isotropic_stable(d, s), make_drift("zero", d)}; }

PathConfig wos_config(std::uint64_t seed = 3) {
  PathConfig cfg;
  cfg.scheme = Scheme::WalkOnSpheres;
  cfg.seed = seed;
  return cfg;
}

PathConfig euler_config(double dt, std::uint64_t seed = 3) {
  PathConfig cfg;
  cfg.dt = dt;
  cfg.seed = seed;
  return cfg;
}

std::vector<LadderEntry> synthetic(const std::function<double(double)>& p, std::int64_t n) {
  std::vector<LadderEntry> out;
  for (double e = 0.1; out.size() < 5; e *= 0.5) {
    const double v = p(e);
    out.push_back({e, v, std::sqrt(v * (1.0 - v) / static_cast<double>(n)), n});
  }
  return out;
}

}  // namespace

TEST_CASE("extrapolation on constructed ladders") {
  const PolarityVerdict zero = polar_extrapolate(synthetic([](double) { return 0.0; }, 1000));
  CHECK(zero.verdict == Verdict::Polar);
  const PolarityVerdict root = polar_extrapolate(synthetic([](double e) { return std::sqrt(e); }, 100000));
  CHECK(root.verdict == Verdict::Polar);
  CHECK(root.fitted_exponent == doctest::Approx(0.5).epsilon(0.02));
  const PolarityVerdict flat = polar_extrapolate(synthetic([](double e) { return 0.6 + 0.2 * std::sqrt(e); }, 100000));
  CHECK(flat.verdict == Verdict::Nonpolar);
  CHECK(flat.limit == doctest::Approx(0.6).epsilon(0.05));
  auto three = synthetic([](double e) { return e; }, 100);
  three.resize(3);
  CHECK_THROWS_AS(polar_extrapolate(three), ArgumentError);
  auto unordered = synthetic([](double e) { return e; }, 100);
  std::swap(unordered[1], unordered[2]);
  CHECK_THROWS_AS(polar_extrapolate(unordered), ArgumentError);
}

TEST_CASE("one-dimensional Brownian motion hits points") {
  const Process p = brownian_process(1);
  const Point x = make_point({0.5});
  CHECK_THROWS_AS(hitting_probability(p, Target::ball(zero_point(1), 0.6), x, 10, euler_config(1e-3)), ArgumentError);
  const double eps = 0.05, R = 10.0 * (0.5 - eps);
  const MCEstimate h = hitting_probability(p, Target::ball(zero_point(1), eps), x, 4000, euler_config(1e-3));
  const double oracle = (R - 0.5) / (R - eps);
  CHECK(std::abs(h.value - oracle) < 3.0 * h.std_error + 0.01);
  HittingOptions ho;
  ho.reference_radius = 2.0;
  const auto ladder = hitting_ladder(p, Target::ball(zero_point(1), 0.1), x, default_eps_ladder(x, zero_point(1)),
                                     2000, euler_config(1e-3), ho);
  CHECK(polar_extrapolate(ladder).verdict == Verdict::Nonpolar);
}

TEST_CASE("planar stable ladder scales like eps^(d - 2s)") {
  const Process p = stable_process(2, 0.75);
  const Point x = make_point({0.5, 0.0});
  const auto ladder = hitting_ladder(p, Target::ball(zero_point(2), 0.1), x, default_eps_ladder(x, zero_point(2)),
                                     20000, wos_config());
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i].estimate < ladder[i - 1].estimate);
  const PolarityVerdict v = polar_extrapolate(ladder);
  CHECK(v.verdict == Verdict::Polar);
  CHECK(std::abs(v.fitted_exponent - 0.5) < 0.1);
  // Against the free-space hitting probability with a distant reference sphere.
  HittingOptions far;
  far.reference_radius = 1e4;
  const MCEstimate h = hitting_probability(p, Target::ball(zero_point(2), 0.05), x, 20000, wos_config(), far);
  const double oracle = ball_hitting_probability(2, 0.75, 0.05, x);
  CHECK(std::abs(h.value - oracle) < 3.0 * h.std_error + 0.01 * oracle);
}

TEST_CASE("one-dimensional stable processes") {
  const Point x = make_point({0.5});
  const auto lad_lo = hitting_ladder(stable_process(1, 0.25), Target::ball(zero_point(1), 0.1), x,
                                     default_eps_ladder(x, zero_point(1)), 20000, wos_config());
  CHECK(polar_extrapolate(lad_lo).verdict == Verdict::Polar);
  const auto lad_hi = hitting_ladder(stable_process(1, 0.75), Target::ball(zero_point(1), 0.1), x,
                                     default_eps_ladder(x, zero_point(1)), 20000, wos_config());
  CHECK(polar_extrapolate(lad_hi).verdict == Verdict::Nonpolar);
}

TEST_CASE("LIL singleton test") {
  for (double s : {0.2, 0.5, 0.8}) {
    const LilResult r = lil_singleton_test(IsotropicStable{s}, 2);
    CHECK(r.polar);
    CHECK(r.criterion == "lil");
    CHECK(r.window_lo == doctest::Approx(std::max(2.0 * s, 1.0)));
    CHECK(r.window_hi == 2.0);
  }
  const LilResult low = lil_singleton_test(IsotropicStable{0.25}, 1);
  CHECK(low.polar);
  CHECK_FALSE(low.window_nonempty);
  const LilResult high = lil_singleton_test(IsotropicStable{0.75}, 1);
  CHECK_FALSE(high.polar);
  CHECK_FALSE(high.window_nonempty);
  const LilResult cyl = lil_singleton_test(CylindricalStable{{0.3, 0.9}}, 2);
  CHECK(cyl.polar);
  CHECK(cyl.beta == doctest::Approx(1.8));
  CHECK(cyl.paper_beta == doctest::Approx(0.3));
  CHECK(cyl.paper_window_nonempty);
  CHECK_THROWS_AS(lil_singleton_test(NoJump{}, 2), UnsupportedError);
  CHECK_THROWS_AS(lil_singleton_test(MixedLaplacianStable{0.5}, 2), UnsupportedError);
}

TEST_CASE("Fourier criterion") {
  CHECK(fourier_points_polar(IsotropicStable{0.5}, false, 1));
  CHECK_FALSE(fourier_points_polar(IsotropicStable{0.6}, false, 1));
  CHECK(fourier_points_polar(NoJump{}, true, 2));
  CHECK_FALSE(fourier_points_polar(NoJump{}, true, 1));
  CHECK(fourier_points_polar(CylindricalStable{{0.9, 0.9}}, false, 2));
  CHECK_FALSE(fourier_points_polar(CylindricalStable{{0.9, 0.6}}, false, 1));
}

TEST_CASE("hyperplanes of codimension two") {
  CHECK(hyperplane_polarity(isotropic_stable(3, 0.5), 3, 2).verdict == Verdict::Polar);
  CHECK(hyperplane_polarity(cylindrical_stable({0.4, 0.4, 0.4}), 3, 2).verdict == Verdict::Polar);
  CHECK(hyperplane_polarity(mixed_laplacian_stable(3, 0.5), 3, 2).verdict == Verdict::Polar);
  CHECK_THROWS_AS(hyperplane_polarity(isotropic_stable(3, 0.5), 3, 1), UnsupportedError);
  CHECK_THROWS_AS(hyperplane_polarity(isotropic_stable(2, 0.5), 2, 2), UnsupportedError);

  HyperplaneOptions mc;
  mc.n = 1000;
  mc.cfg = euler_config(1e-3);
  const PolarityVerdict v = hyperplane_polarity(cylindrical_stable({0.4, 0.4, 0.4}), 3, 2, mc);
  REQUIRE(v.evidence.size() == 5);
  CHECK(v.verdict == Verdict::Polar);
  for (std::size_t i = 1; i < v.evidence.size(); ++i)
    CHECK(v.evidence[i].estimate <= v.evidence[i - 1].estimate + 2.0 * v.evidence[i - 1].std_error);
  CHECK(v.evidence.back().estimate < v.evidence.front().estimate);
}

TEST_CASE("verdicts do not depend on kappa or on the drift") {
  const Point x = make_point({0.5, 0.0, 0.0});
  HittingOptions h0, h1;
  h0.reference_radius = h1.reference_radius = 1.5;
  h1.kappa = 1.0;
  const auto eps = default_eps_ladder(x, zero_point(3));
  const Target t = Target::ball(zero_point(3), 0.1);
  const auto a = polar_extrapolate(hitting_ladder(brownian_process(3), t, x, eps, 3000, wos_config(), h0));
  const auto b = polar_extrapolate(hitting_ladder(brownian_process(3), t, x, eps, 3000, euler_config(1e-3), h1));
  const auto c = polar_extrapolate(
      hitting_ladder(brownian_process(3, "constant", {-0.5, 0.2, 0.0}), t, x, eps, 3000, euler_config(1e-3), h0));
  CHECK(a.verdict == Verdict::Polar);
  CHECK(b.verdict == a.verdict);
  CHECK(c.verdict == a.verdict);

  const Point x1 = make_point({0.5});
  HittingOptions k1;
  k1.reference_radius = 2.0;
  k1.kappa = 1.0;
  const auto one = polar_extrapolate(hitting_ladder(brownian_process(1), Target::ball(zero_point(1), 0.1), x1,
                                                    default_eps_ladder(x1, zero_point(1)), 2000, euler_config(1e-3), k1));
  CHECK(one.verdict == Verdict::Nonpolar);
}

TEST_CASE("capacity lower bound") {
  const JumpSpec j = IsotropicStable{0.75};
  CHECK(capacity_estimate(j, 2, 0.1, 0.0, 0.0) == 0.0);
  std::vector<double> logs, loge;
  for (double e : {0.1, 0.05, 0.025, 0.0125}) {
    loge.push_back(std::log(e));
    logs.push_back(std::log(capacity_estimate(j, 2, e, 1.0)));
  }
  for (std::size_t i = 1; i < logs.size(); ++i) {
    CHECK(logs[i] < logs[i - 1]);
    CHECK((logs[i - 1] - logs[i]) / (loge[i - 1] - loge[i]) == doctest::Approx(0.5).epsilon(0.05 / 0.5));
  }
  // Closed form of the centre potential: c d eps^{2s-d} / (2s).
  const double c = riesz_constant(3, 0.5);
  CHECK(capacity_estimate(IsotropicStable{0.5}, 3, 0.2, 0.0) == doctest::Approx(std::pow(0.2, 2.0) / (3.0 * c)).epsilon(1e-9));
  CHECK(capacity_estimate(j, 2, 0.1, 0.0, 2.0) == doctest::Approx(capacity_estimate(j, 2, 0.1, 0.0)).epsilon(1e-12));
  CHECK_THROWS_AS(capacity_estimate(NoJump{}, 3, 0.1, 0.0), UnsupportedError);
}

TEST_CASE("tube complement geometry") {
  const Domain T = Domain::tube_complement(zero_point(3), 1.0, 2, 0.1);
  CHECK(T.contains(make_point({0.5, 0.0, 0.0})));
  CHECK_FALSE(T.contains(make_point({0.05, 0.05, 0.5})));
  CHECK_FALSE(T.contains(make_point({0.9, 0.0, 0.9})));
  CHECK(T.signed_distance(make_point({0.5, 0.0, 0.0})) == doctest::Approx(0.4));
  const Point q = T.project(make_point({0.2, 0.0, 0.3}));
  CHECK(q.head(2).norm() == doctest::Approx(0.1));
  CHECK(q[2] == doctest::Approx(0.3));
  // Volume: unit ball minus a tube slice, checked against Monte Carlo counting on a Halton set.
  int inside = 0;
  const auto pts = halton_points(make_point({-1, -1, -1}), make_point({1, 1, 1}), 200000);
  for (const Point& y : pts) inside += T.contains(y);
  CHECK(T.volume() == doctest::Approx(8.0 * inside / 200000.0).epsilon(3e-3));
}
