#include "doctest.h"

#include "levypot/exact_kernels.hpp"
#include "levypot/path_sim.hpp"
#include "levypot/quadrature.hpp"
#include "levypot/stats.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

using namespace levypot;

namespace {

Process brownian_process(int d, double var = 1.0) { return {brownian(d, var), make_drift("zero", d)}; }
Process stable_process(int d, double s) { return {isotropic_stable(d, s), make_drift("zero", d)}; }

// Equiprobable bin edges of the exit-radius gap under the exact exit law.
std::vector<double> radial_bin_edges(int d, double s, const Point& x, int bins) {
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) {
    const double target = static_cast<double>(k) / bins;
    double lo = 0.0, hi = 1.0;
    while (poisson_ball_radial_cdf(d, s, 1.0, x, hi) < target) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (poisson_ball_radial_cdf(d, s, 1.0, x, mid) < target ? lo : hi) = mid;
    }
    edges.push_back(0.5 * (lo + hi));
  }
  return edges;
}

int bin_of(const std::vector<double>& edges, double g) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), g) - edges.begin());
}

}  // namespace

TEST_CASE("Brownian paths exit by creeping onto the sphere") {
  const Process p = brownian_process(2);
  const Domain V = Domain::ball(2, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  const StreamKey key{7, hash_string("creep")};
  for (int i = 0; i < 200; ++i) {
    Rng rng(key, 0, i);
    const ExitSample e = simulate_until_exit(p, V, zero_point(2), 0.0, cfg, rng);
    CHECK(e.mode == ExitMode::BoundaryCreep);
    CHECK(e.exit_pos.norm() >= 1.0 - 1e-12);
    CHECK(e.exit_pos.norm() <= 1.0 + 1e-6);
    CHECK(e.fk_weight == 1.0);
  }
}

TEST_CASE("argument validation") {
  const Process p = brownian_process(2);
  const Domain V = Domain::ball(2, 1.0);
  Rng rng(StreamKey{1, 2}, 0, 0);
  PathConfig cfg;
  CHECK_THROWS_AS(simulate_until_exit(p, V, make_point({1.5, 0}), 0.0, cfg, rng), DomainError);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(simulate_until_exit(p, V, zero_point(2), 0.0, cfg, rng), ArgumentError);
  CHECK_THROWS_AS(wos_exit_ball(0.5, zero_point(2), 1.0, make_point({1.0, 0.0}), rng), DomainError);
  const Process drifted{brownian(2), make_drift("constant", 2, {0.1, 0.0})};
  CHECK_THROWS_AS(wos_exit(drifted, V, zero_point(2), PathConfig{}, rng), UnsupportedError);
}

TEST_CASE("interval exit time of Brownian motion") {
  // -q''/2 = 1 on (-1, 1) with zero boundary values gives q(0) = 1.
  const Process p = brownian_process(1);
  const Domain V = Domain::interval(-1.0, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  const StreamKey key{11, hash_string("interval")};
  const auto acc = run_paths<MomentAccumulator>(20000, 1, [&](std::int64_t c, std::int64_t i, MomentAccumulator& a) {
    Rng rng(key, c, i);
    a.add(occupation_functional(p, V, zero_point(1), [](const Point&) { return 1.0; }, 0.0, cfg, rng));
  });
  CHECK(acc.mean() == doctest::Approx(brownian_exit_time_interval(0.0, -1.0, 1.0)).epsilon(0.02));
  CHECK(std::abs(acc.mean() - 1.0) < 3.0 * acc.std_error() + 0.005);
}

TEST_CASE("occupation functional: trivial integrands") {
  const Process p = stable_process(2, 0.5);
  const Domain V = Domain::ball(2, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  for (int i = 0; i < 50; ++i) {
    Rng a(StreamKey{3, 4}, 0, i), b(StreamKey{3, 4}, 0, i);
    CHECK(occupation_functional(p, V, zero_point(2), [](const Point&) { return 0.0; }, 0.0, cfg, a) == 0.0);
    const double occ = occupation_functional(p, V, zero_point(2), [](const Point&) { return 1.0; }, 0.0, cfg, b);
    Rng c(StreamKey{3, 4}, 0, i);
    const ExitSample e = simulate_until_exit(p, V, zero_point(2), 0.0, cfg, c);
    CHECK(occ == doctest::Approx(e.exit_time).epsilon(1e-9));
  }
}

TEST_CASE("walk-on-spheres exit radius follows the exact law") {
  const double s = 0.5;
  const Point x = make_point({0.3, 0.0});
  const auto edges = radial_bin_edges(2, s, x, 20);
  const StreamKey key{5, hash_string("wos-radial")};
  std::vector<double> counts(20, 0.0);
  std::vector<double> gaps;
  for (int i = 0; i < 100000; ++i) {
    Rng rng(key, 0, i);
    const ExitSample e = wos_exit_ball(s, zero_point(2), 1.0, x, rng);
    CHECK_FALSE(e.exit_pos.norm() <= 1.0);
    const double g = e.exit_pos.norm() - 1.0;
    counts[bin_of(edges, g)] += 1.0;
    gaps.push_back(g);
  }
  const auto chi = chi_square_test(counts, std::vector<double>(20, 0.05));
  CHECK(chi.p_value > 0.01);
  const double ks = ks_distance(gaps, [&](double g) { return poisson_ball_radial_cdf(2, s, 1.0, x, g); });
  CHECK(ks < 0.01);
}

TEST_CASE("walk-on-spheres from the centre is rotation invariant") {
  std::vector<double> counts(12, 0.0);
  for (int i = 0; i < 24000; ++i) {
    Rng rng(StreamKey{9, 1}, 0, i);
    const ExitSample e = wos_exit_ball(0.75, zero_point(2), 1.0, zero_point(2), rng);
    const double th = std::atan2(e.exit_pos[1], e.exit_pos[0]) + kPi;
    counts[std::min(11, static_cast<int>(th / (2 * kPi) * 12))] += 1.0;
  }
  CHECK(chi_square_test(counts, std::vector<double>(12, 1.0 / 12)).p_value > 0.01);
}

TEST_CASE("strong Markov composition of ball exits") {
  // Exit B_1 directly versus exiting B_{1/2} first and continuing from there.
  const double s = 0.6;
  const Point x = make_point({0.1, 0.05});
  const auto edges = radial_bin_edges(2, s, x, 10);
  std::vector<double> direct(10, 0.0), composed(10, 0.0);
  for (int i = 0; i < 30000; ++i) {
    Rng a(StreamKey{21, 1}, 0, i), b(StreamKey{21, 2}, 0, i);
    direct[bin_of(edges, wos_exit_ball(s, zero_point(2), 1.0, x, a).exit_pos.norm() - 1.0)] += 1;
    Point y = wos_exit_ball(s, zero_point(2), 0.5, x, b).exit_pos;
    if (y.norm() < 1.0) y = wos_exit_ball(s, zero_point(2), 1.0, y, b).exit_pos;
    composed[bin_of(edges, y.norm() - 1.0)] += 1;
  }
  CHECK(chi_square_two_sample(direct, composed).p_value > 0.01);
}

TEST_CASE("Euler and walk-on-spheres exit laws agree for the stable process") {
  const double s = 0.5;
  const Process p = stable_process(2, s);
  const Domain V = Domain::ball(2, 1.0);
  const Point x = make_point({0.3, 0.0});
  const auto edges = radial_bin_edges(2, s, x, 10);
  std::vector<double> euler(10, 0.0), wos(10, 0.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  int overshoot = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    Rng a(StreamKey{31, 1}, 0, i), b(StreamKey{31, 2}, 0, i);
    const ExitSample e = simulate_until_exit(p, V, x, 0.0, cfg, a);
    overshoot += e.mode == ExitMode::JumpOvershoot;
    euler[bin_of(edges, std::max(0.0, e.exit_pos.norm() - 1.0))] += 1;
    wos[bin_of(edges, wos_exit_ball(s, zero_point(2), 1.0, x, b).exit_pos.norm() - 1.0)] += 1;
  }
  CHECK(overshoot > 0.95 * n);
  CHECK(chi_square_two_sample(euler, wos).p_value > 0.01);
}

TEST_CASE("occupation sampler matches the ball Green function") {
  // E_occ[|Y|^2] = int G(0, y) |y|^2 dy / E tau.
  const double s = 0.75;
  const int d = 2;
  MomentAccumulator m;
  for (int i = 0; i < 200000; ++i) {
    Rng rng(StreamKey{41, 1}, 0, i);
    m.add(sample_ball_occupation(d, s, zero_point(d), 1.0, rng).squaredNorm());
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double r) {
    return r < 1e-12 || r >= 1.0 ? 0.0 : 2 * kPi * r * r * r * green_ball(d, s, 1.0, zero_point(d), make_point({r, 0}));
  };
  const double oracle = ts.integrate(f, 0.0, 1.0) / expected_exit_time_ball(d, s, 1.0, zero_point(d));
  CHECK(std::abs(m.mean() - oracle) < 4.0 * m.std_error());
}

TEST_CASE("Brownian walk-on-spheres: exit probabilities and exit time") {
  // Annulus 0.5 < |x| < 2 in three dimensions: P(hit inner) = (1/|x| - 1/2) / (2 - 1/2).
  const Process p = brownian_process(3);
  const Domain A = Domain::annulus(zero_point(3), 0.5, 2.0);
  const Point x = make_point({1.0, 0.0, 0.0});
  PathConfig cfg;
  cfg.scheme = Scheme::WalkOnSpheres;
  MomentAccumulator inner;
  for (int i = 0; i < 20000; ++i) {
    Rng rng(StreamKey{51, 1}, 0, i);
    const ExitSample e = wos_exit(p, A, x, cfg, rng);
    CHECK(e.mode == ExitMode::BoundaryCreep);
    inner.add(e.exit_pos.norm() < 1.0 ? 1.0 : 0.0);
  }
  const double oracle = (1.0 / 1.0 - 1.0 / 2.0) / (1.0 / 0.5 - 1.0 / 2.0);
  CHECK(std::abs(inner.mean() - oracle) < 3.5 * inner.std_error());
  // Expected exit time via exact occupation sampling.
  MomentAccumulator tau;
  const Domain B = Domain::ball(3, 1.0);
  for (int i = 0; i < 20000; ++i) {
    Rng rng(StreamKey{51, 2}, 0, i);
    tau.add(occupation_functional(p, B, make_point({0.3, 0.2, 0.0}), [](const Point&) { return 1.0; }, 0.0, cfg, rng));
  }
  const double expected = expected_exit_time_ball(3, 1.0, 1.0, make_point({0.3, 0.2, 0.0}));
  CHECK(std::abs(tau.mean() - expected) < 3.5 * tau.std_error());
}

TEST_CASE("killing by weight and by per-step coin flips agree") {
  // E e^{-kappa tau} for Brownian motion from 0 on (-1, 1) is 1 / cosh(sqrt(2 kappa)).
  const Process p = brownian_process(1);
  const Domain V = Domain::interval(-1.0, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  for (double kappa : {0.5, 2.0}) {
    MomentAccumulator weighted, killed;
    PathOptions kill;
    kill.weight_mode = WeightMode::PerStepKilling;
    for (int i = 0; i < 10000; ++i) {
      Rng a(StreamKey{61, 1}, 0, i), b(StreamKey{61, 2}, 0, i);
      weighted.add(simulate_until_exit(p, V, zero_point(1), kappa, cfg, a).fk_weight);
      const ExitSample e = simulate_until_exit(p, V, zero_point(1), kappa, cfg, b, kill);
      killed.add(e.mode == ExitMode::Killed ? 0.0 : 1.0);
    }
    const double se = std::hypot(weighted.std_error(), killed.std_error());
    CHECK(std::abs(weighted.mean() - killed.mean()) < 3.0 * se);
    const double oracle = 1.0 / std::cosh(std::sqrt(2.0 * kappa));
    CHECK(std::abs(weighted.mean() - oracle) < 3.0 * weighted.std_error() + 0.003);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const Process p = stable_process(2, 0.5);
  const Domain V = Domain::ball(2, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-2;
  const StreamKey key{71, 3};
  auto run = [&](int threads) {
    return run_paths<MomentAccumulator>(10000, threads, [&](std::int64_t c, std::int64_t i, MomentAccumulator& a) {
      Rng rng(key, c, i);
      a.add(simulate_until_exit(p, V, zero_point(2), 0.3, cfg, rng).exit_pos.norm());
    });
  };
  const auto a = run(1), b = run(3);
  CHECK(a.mean() == b.mean());
  CHECK(a.variance() == b.variance());
  Rng r1(key, 0, 5), r2(key, 0, 5);
  const ExitSample e1 = simulate_until_exit(p, V, zero_point(2), 0.3, cfg, r1);
  const ExitSample e2 = simulate_until_exit(p, V, zero_point(2), 0.3, cfg, r2);
  CHECK(e1.exit_pos == e2.exit_pos);
  CHECK(e1.fk_weight == e2.fk_weight);
}

TEST_CASE("halving dt leaves the stable exit law unchanged") {
  const Process p = stable_process(2, 0.5);
  const Domain V = Domain::ball(2, 1.0);
  const Point x = make_point({0.3, 0.0});
  PathConfig coarse, fine;
  coarse.dt = 2e-3;
  fine.dt = 1e-3;
  MomentAccumulator a, b;
  for (int i = 0; i < 20000; ++i) {
    Rng r1(StreamKey{81, 1}, 0, i), r2(StreamKey{81, 2}, 0, i);
    a.add(std::min(simulate_until_exit(p, V, x, 0.0, coarse, r1).exit_pos.norm(), 3.0));
    b.add(std::min(simulate_until_exit(p, V, x, 0.0, fine, r2).exit_pos.norm(), 3.0));
  }
  CHECK(std::abs(a.mean() - b.mean()) < 3.0 * std::hypot(a.std_error(), b.std_error()));
}

TEST_CASE("censoring at the horizon") {
  const Process p = brownian_process(1);
  const Domain V = Domain::interval(-1.0, 1.0);
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1e-2;
  Rng rng(StreamKey{91, 1}, 0, 0);
  const ExitSample e = simulate_until_exit(p, V, zero_point(1), 1.0, cfg, rng);
  CHECK(e.mode == ExitMode::Censored);
  CHECK(e.exit_time <= cfg.horizon + 1e-12);
  CHECK(e.fk_weight == doctest::Approx(std::exp(-e.exit_time)));
}
