#pragma once

#include <string>
#include <utility>
#include <vector>

#include "twistlab/action_solver.hpp"
#include "twistlab/spectral.hpp"

namespace twistlab {

/// Irrational rotation number with its continued fraction and convergents.
struct RotationTarget {
  double omega = 0.0;
  std::string label;          // "golden", "cf" or "omega"
  std::vector<long> cf;       // partial quotients a_0, a_1, ...
  std::vector<std::pair<long, long>> convergents;
};

/// First n convergents of [0; 1, 1, 1, ...].
RotationTarget golden_target(int n);

/// First n convergents of a finite partial-quotient list. Throws
/// RationalTarget if the list has fewer than n entries.
RotationTarget convergents_from_cf(std::vector<long> cf, int n);

/// First n convergents from the Euclidean algorithm on omega. Throws
/// RationalTarget when the expansion terminates early or omega sits within
/// 1e-12 of one of the convergents.
RotationTarget convergents_from_omega(double omega, int n);

enum class Verdict { NoInvariantCurve, ConsistentWithCurve, Inconclusive };

const char* to_string(Verdict v);

struct GreeneOptions {
  double sigma = 1.05;
  double margin = 0.05;
  int tail_window = 3;
  /// Convergents with q above this are skipped.
  long q_max = 233;
  /// Seed each convergent from the previous minimizer as well.
  bool continuation = true;
  MinimizeOptions minimize;
};

struct GreeneReport {
  std::string map;
  double k = 0.0;
  RotationTarget target;
  std::vector<ResidueRecord> records;
  std::vector<Configuration> minimizers;   // parallel to records
  std::vector<long> failed;                // q of convergents that did not converge
  std::vector<std::string> failure_messages;
  Verdict verdict = Verdict::Inconclusive;
  std::string verdict_basis;
  double sigma = 1.05;
  double margin = 0.05;
  int tail_window = 3;
};

/// Tail rule on the last `tail_window` mean residues.
Verdict tail_verdict(const std::vector<ResidueRecord>& records, double margin, int tail_window);

GreeneReport greene_scan(const GeneratingFunction& gf, const RotationTarget& target,
                         const GreeneOptions& options = {});

/// Every record with mean residue >= sigma has lambda_max and
/// lambda_max + 1/lambda_max >= 4 sigma^q + 2 (relative slack 1e-6).
bool eigenvalue_bound_check(const GreeneReport& report, double sigma);

/// Smallest mean residue among the tail records.
double tail_min_mean_residue(const GreeneReport& report);

}  // namespace twistlab
