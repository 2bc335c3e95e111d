#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "twistlab/map_core.hpp"

namespace twistlab {

/// A (p, q)-periodic sequence of lifted angles theta_0 .. theta_{q-1} with
/// the closure theta_{j+q} = theta_j + p.
struct Configuration {
  int p = 0;
  int q = 1;
  Eigen::VectorXd thetas;

  /// theta_j for any integer j, using the closure relation.
  double theta(long j) const;
};

/// Validates gcd(p, q) = 1, q >= 1 and the size of `thetas`.
Configuration make_configuration(int p, int q, Eigen::VectorXd thetas);

/// theta_j = phase + j p / q.
Configuration rigid_rotation(int p, int q, double phase);

/// Same orbit, re-indexed so that theta_0 mod 1 is the smallest angle of the
/// cycle, and shifted by an integer so that theta_0 lies in [0, 1).
Configuration canonicalize(const Configuration& c);

/// True when the cyclic order of theta_j mod 1 is that of j p / q mod 1,
/// with angles closer than 1e-9 counted as ties.
bool has_rotation_ordering(const Configuration& c);

/// Symmetric periodic tridiagonal matrix. `upper(j)` couples indices j and
/// j + 1 (mod q); for q <= 2 the couplings accumulate on the same entries.
struct PeriodicTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd upper;

  Eigen::Index size() const { return diag.size(); }
  Eigen::MatrixXd dense() const;
  /// Cyclic Thomas elimination with a Sherman-Morrison correction for the
  /// corner entries; falls back to a dense LU solve for q <= 2 or when the
  /// elimination breaks down.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  double min_eigenvalue() const;
};

struct ActionReport {
  double value = 0.0;
  double gradient_inf_norm = 0.0;
  double hessian_min_eig = 0.0;
  int restarts_used = 0;
  bool ordered = true;
};

double action(const GeneratingFunction& gf, const Configuration& c);
Eigen::VectorXd action_gradient(const GeneratingFunction& gf, const Configuration& c);
PeriodicTridiagonal action_hessian(const GeneratingFunction& gf, const Configuration& c);

struct MinimizeOptions {
  /// Number of rigid-rotation phase seeds; 0 means max(8, q). Seed m starts
  /// at phase m / (restarts q), sweeping one period of the rigid orbit.
  int restarts = 0;
  /// Shifts the seed phases to (m + u) / (restarts q) with u in [0, 1) drawn
  /// from this seed. Zero keeps u = 0.
  std::uint64_t seed = 0;
  int max_iterations = 400;
  double gradient_tolerance = 1e-10;
  /// Extra starting configurations tried in addition to the phase sweep.
  std::vector<Configuration> extra_seeds;
  /// Restarts are independent and may be spread over threads; the result
  /// does not depend on this value.
  unsigned threads = 1;
};

struct MinimizeResult {
  Configuration config;
  ActionReport report;
};

/// Best local minimum of the periodic action over a sweep of seeds.
/// Throws InvalidArgument for bad (p, q) and NoConvergence if no seed
/// reaches the gradient tolerance.
MinimizeResult minimize_periodic(const GeneratingFunction& gf, int p, int q,
                                 const MinimizeOptions& options = {});

/// Seed for (p, q) built from a minimizer of a nearby rotation number: the
/// deviation from rigid rotation is interpolated periodically and resampled
/// at the new rigid-rotation angles.
Configuration continuation_seed(const Configuration& previous, int p, int q);

/// Points (theta_j, r_j) with r_j = -S1(theta_j, theta_{j+1}).
/// Throws NotCritical when the gradient exceeds 1e-8.
std::vector<LiftPoint> configuration_to_orbit(const GeneratingFunction& gf,
                                              const Configuration& c);

/// (x_n - x_0) / n over the whole sequence.
double rotation_number(std::span<const LiftPoint> points);

}  // namespace twistlab
