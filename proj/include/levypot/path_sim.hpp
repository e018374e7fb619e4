#pragma once

#include "levypot/core.hpp"
#include "levypot/domain.hpp"
#include "levypot/drift.hpp"
#include "levypot/levy_models.hpp"
#include "levypot/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace levypot {

enum class Scheme { Euler, WalkOnSpheres };
enum class ExitMode { JumpOvershoot, BoundaryCreep, Censored, Killed };

std::string to_string(ExitMode m);
std::string to_string(Scheme s);

struct PathConfig {
  double dt = 1e-3;
  /// Censoring horizon; 0 selects 1e6 times a crude expected exit time.
  double horizon = 0.0;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::Euler;
  int threads = 1;
  /// Walk-on-spheres stops a continuous walk within wos_eps * length_scale of the boundary.
  double wos_eps = 1e-6;
  /// Brownian-bridge test for boundary crossings inside an Euler step.
  bool bridge_test = true;
};

struct ExitSample {
  Point exit_pos;
  double exit_time = 0.0;  // NaN for walk-on-spheres
  ExitMode mode = ExitMode::Censored;
  double fk_weight = 1.0;
  std::int64_t steps = 0;
};

/// The process X' = b(X) + L': a Levy triplet plus a drift field.
struct Process {
  LevyTriplet triplet;
  DriftField drift;

  int dim() const { return triplet.dim(); }
};

/// Throws ConfigError on dimension mismatches or an invalid triplet.
void validate_process(const Process& p);

/// Receives occupation mass along a path: a point, the current time, and the
/// mass (dt times the current weight for Euler, E tau / m for walk-on-spheres).
using OccupationVisitor = std::function<void(const Point& x, double t, double mass)>;

enum class WeightMode {
  /// fk_weight = exp(int potential(X_s) ds), potential defaulting to -kappa.
  Exponential,
  /// Kill with probability 1 - exp(-kappa dt) per step; fk_weight stays 1.
  PerStepKilling,
};

struct PathOptions {
  WeightMode weight_mode = WeightMode::Exponential;
  /// Integrand of the log weight; overrides -kappa when set.
  std::function<double(const Point&)> potential;
  OccupationVisitor visitor;
};

double default_horizon(const Process& p, const Domain& V);

/// Euler scheme to first exit of V. Exact stable increments, bisection of
/// continuous crossings to 1e-8 * length_scale.
ExitSample simulate_until_exit(const Process& p, const Domain& V, const Point& x0, double kappa,
                               const PathConfig& cfg, Rng& rng, const PathOptions& opts = {});

/// Exact exit position from a ball for the isotropic 2s-stable process.
ExitSample wos_exit_ball(double s, const Point& center, double radius, const Point& x0, Rng& rng);

struct WosOptions {
  OccupationVisitor visitor;
  int samples_per_ball = 1;
};

/// Walk-on-spheres in a general domain for b = 0, l = 0 and either an isotropic
/// stable process (Q = 0) or Brownian motion with Q = sigma^2 I. Occupation
/// samples are drawn exactly from each ball's Green function.
ExitSample wos_exit(const Process& p, const Domain& V, const Point& x0, const PathConfig& cfg, Rng& rng,
                    const WosOptions& opts = {});

/// Whether wos_exit supports the process.
bool wos_supported(const Process& p);

/// Dispatches on cfg.scheme; kappa and options apply to Euler only.
ExitSample sample_exit(const Process& p, const Domain& V, const Point& x0, double kappa, const PathConfig& cfg,
                       Rng& rng, const PathOptions& opts = {});

/// Single-path estimate of int_0^tau e^{-kappa t} f(X_t) dt.
double occupation_functional(const Process& p, const Domain& V, const Point& x0,
                             const std::function<double(const Point&)>& f, double kappa, const PathConfig& cfg,
                             Rng& rng);

/// Draws a point from the normalized occupation density of B(center, r) for the
/// process started at the centre (Green function of the ball / E tau).
Point sample_ball_occupation(int d, double s, const Point& center, double r, Rng& rng);

/// Uniform direction on S^{d-1}.
Point random_direction(int d, Rng& rng);

// ---------------------------------------------------------------------------
// Deterministic chunked parallel execution.

inline constexpr std::int64_t kChunkSize = 4096;

/// Runs fn(chunk, index, acc) for index = 0..n-1 split into fixed chunks; each
/// chunk accumulates into its own Acc and chunks merge in order, so the result
/// does not depend on the number of threads.
template <class Acc, class Fn>
Acc run_paths(std::int64_t n, int threads, Fn&& fn, const Acc& init = Acc{}) {
  const std::int64_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<Acc> partial(static_cast<std::size_t>(n_chunks), init);
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        const std::int64_t lo = c * kChunkSize, hi = std::min(n, lo + kChunkSize);
        for (std::int64_t i = lo; i < hi; ++i) fn(c, i, partial[static_cast<std::size_t>(c)]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_chunks;
        return;
      }
    }
  };
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::int64_t>(n_chunks, 1))));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  Acc out = init;
  for (const Acc& a : partial) out.merge(a);
  return out;
}

}  // namespace levypot
