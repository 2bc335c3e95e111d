#pragma once

#include <optional>
#include <span>

#include "twistlab/action_solver.hpp"
#include "twistlab/map_core.hpp"

namespace twistlab {

/// Slope of a line in the tangent plane: either the finite slope s of
/// {(t, t s)} or the vertical line {0} x R.
class ProjectiveSlope {
 public:
  static ProjectiveSlope finite(double s) { return ProjectiveSlope(false, s); }
  static ProjectiveSlope vertical() { return ProjectiveSlope(true, 0.0); }

  bool is_vertical() const { return vertical_; }
  /// Only meaningful when !is_vertical().
  double value() const { return value_; }

 private:
  ProjectiveSlope(bool vertical, double value) : vertical_(vertical), value_(value) {}
  bool vertical_;
  double value_;
};

/// Denominators below this are treated as a pole of the projective action.
inline constexpr double kVerticalThreshold = 1e-14;

/// Image of the line of slope s under M.
ProjectiveSlope slope_pushforward(const Tangent2x2& m, ProjectiveSlope s);

/// Ordered product T_{q-1} ... T_0 stored as scale * exp(log_scale), with the
/// scaled factor kept bounded so long products do not overflow.
struct Monodromy {
  Tangent2x2 scaled = Tangent2x2::Identity();
  double log_scale = 0.0;

  double trace() const;
  /// log |2 - trace|, accurate when the trace is huge.
  double log_abs_two_minus_trace() const;
};

Monodromy monodromy(const GeneratingFunction& gf, const Configuration& c);

/// Trace of the tangent product around the periodic orbit of a critical
/// configuration. Throws NotCritical.
double monodromy_trace(const GeneratingFunction& gf, const Configuration& c);

struct ResidueRecord {
  int p = 0;
  int q = 1;
  double trace = 2.0;
  double residue = 0.0;
  double mean_residue = 0.0;
  std::optional<double> lambda_max;
};

ResidueRecord residue(double trace, int p, int q);

/// Same as residue(trace, p, q) but takes the mean residue from the log-safe
/// form once |trace| exceeds 1e12.
ResidueRecord residue(const Monodromy& m, int p, int q);

struct GreenPair {
  ProjectiveSlope s_minus = ProjectiveSlope::vertical();
  ProjectiveSlope s_plus = ProjectiveSlope::vertical();
  int depth = 0;

  /// s_plus - s_minus, +infinity when either slope is vertical.
  double width() const;
};

/// Finite-depth Green slopes from explicit tangent sequences: `past` holds
/// the n tangents from f^{-n}x up to the one landing on x, `future` the n
/// tangents from x onward.
GreenPair green_slopes_from_tangents(std::span<const Tangent2x2> past,
                                     std::span<const Tangent2x2> future);

/// s_plus pushes the vertical forward n steps from f^{-n}(center); s_minus
/// pulls the vertical back n steps from f^n(center).
GreenPair green_slopes(const GeneratingFunction& gf, const LiftPoint& center, int n);

/// Green slopes at point `index` of a periodic orbit, cycling its tangents
/// instead of iterating the map (no drift off the orbit).
GreenPair green_slopes_periodic(const GeneratingFunction& gf, const Configuration& c, int index,
                                int n);

/// Dominant finite-time Lyapunov exponent along n forward steps from start.
/// The tangent vector starts on the depth-64 forward Green direction at start
/// and is renormalized every 10 steps. Requires n >= 100.
double lyapunov_exponent(const GeneratingFunction& gf, const LiftPoint& start, long n);

}  // namespace twistlab
