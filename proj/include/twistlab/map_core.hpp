#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "twistlab/errors.hpp"

namespace twistlab {

/// Reduces an angle to [0, 1) with floor-based arithmetic.
double reduce_angle(double x);

/// Signed angular difference a - b wrapped into (-1/2, 1/2].
double wrapped_difference(double a, double b);

/// Distance on the circle R/Z.
inline double circle_distance(double a, double b) {
  double d = wrapped_difference(a, b);
  return d < 0 ? -d : d;
}

/// A point of the annulus T x R. The angle is always stored reduced mod 1.
class AnnulusPoint {
 public:
  AnnulusPoint() = default;
  AnnulusPoint(double theta, double r) : theta_(reduce_angle(theta)), r_(r) {}

  double theta() const { return theta_; }
  double r() const { return r_; }

 private:
  double theta_ = 0.0;
  double r_ = 0.0;
};

/// A point of the universal cover R^2.
struct LiftPoint {
  double x = 0.0;
  double r = 0.0;
};

inline AnnulusPoint project(const LiftPoint& p) { return {p.x, p.r}; }
inline LiftPoint lift(const AnnulusPoint& p) { return {p.theta(), p.r()}; }

/// Euclidean distance on the annulus with the wrapped angular metric.
double annulus_distance(const AnnulusPoint& a, const AnnulusPoint& b);

/// Tangent map acting on (d theta, d r). Rows (a b; c d).
using Tangent2x2 = Eigen::Matrix2d;

/// Inverse of a unit-determinant 2x2 matrix.
inline Tangent2x2 symplectic_inverse(const Tangent2x2& m) {
  Tangent2x2 inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv;
}

/// Generating function S(x, X) of a positive exact symplectic twist map,
/// with its first and second partial derivatives. The map is defined by
/// r = -S1(x, X), R = S2(x, X).
///
/// `twist_bound` is the constant eps with S12 <= -eps everywhere.
/// `forward_closed` / `backward_closed` are optional closed-form fast paths;
/// when present they must agree with the implicit solver.
struct GeneratingFunction {
  using Evaluator = std::function<double(double, double)>;
  using PointMap = std::function<LiftPoint(const LiftPoint&)>;

  std::string name;
  double k = 0.0;
  Evaluator S, S1, S2, S11, S12, S22;
  double twist_bound = 1.0;
  PointMap forward_closed;
  PointMap backward_closed;
};

/// S(x, X) = (X - x)^2 / 2.
GeneratingFunction integrable_family();

/// S(x, X) = (X - x)^2 / 2 - k / (4 pi^2) cos(2 pi x).
GeneratingFunction standard_family(double k);

/// Looks a family up by name ("integrable" or "standard").
GeneratingFunction make_family(const std::string& name, double k);

/// Wraps user supplied evaluators and validates them: periodicity, twist
/// bound and derivative consistency by central differences (step 1e-6,
/// tolerance 1e-5). Throws InvalidGeneratingFunction on failure.
GeneratingFunction custom_generating_function(std::string name,
                                              GeneratingFunction::Evaluator S,
                                              GeneratingFunction::Evaluator S1,
                                              GeneratingFunction::Evaluator S2,
                                              GeneratingFunction::Evaluator S11,
                                              GeneratingFunction::Evaluator S12,
                                              GeneratingFunction::Evaluator S22,
                                              double twist_bound);

void validate_generating_function(const GeneratingFunction& gf);

/// Image of p under the lifted map. Uses the closed form when available.
LiftPoint forward(const GeneratingFunction& gf, const LiftPoint& p);
LiftPoint backward(const GeneratingFunction& gf, const LiftPoint& p);

/// Always goes through the bracketed Newton solve of the implicit relations.
LiftPoint forward_implicit(const GeneratingFunction& gf, const LiftPoint& p);
LiftPoint backward_implicit(const GeneratingFunction& gf, const LiftPoint& p);

/// Tangent map at the segment (x, X) of an orbit.
Tangent2x2 tangent_from_pair(const GeneratingFunction& gf, double x, double X);

/// Tangent map Df at p.
Tangent2x2 tangent(const GeneratingFunction& gf, const LiftPoint& p);

/// |n| + 1 points starting at p; negative n iterates the inverse.
std::vector<LiftPoint> orbit(const GeneratingFunction& gf, const LiftPoint& p, long n);

}  // namespace twistlab
