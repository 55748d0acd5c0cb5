#pragma once

#include <cstdint>
#include <string>

#include "platoon/common.hpp"

namespace platoon {

/// Delay-dependent stability question for the follower-coordinate system
///   dx/dt = state x(t) + delay x(t - tau(t)),  0 < tau < delayBound,
///   dtau/dt < derivativeBound < 1.
struct LmiProblem {
  Matrix state;             // 2(n-1) x 2(n-1)
  Matrix delay;             // 2(n-1) x 2(n-1)
  double delayBound = 0.0;  // s
  double derivativeBound = 0.0;

  void validate() const;
};

/// Candidate Lyapunov-Krasovskii weights. `derivWeight` multiplies the
/// derivative-energy integral term, `delayWeight` the delayed-state energy
/// term, `stateWeight` the instantaneous quadratic term. All three must be
/// symmetric positive definite; `margin` is the most-positive eigenvalue of
/// the assembled block matrix and must be below -tol for a certificate.
struct LmiCertificate {
  Matrix derivWeight;
  Matrix delayWeight;
  Matrix stateWeight;
  double margin = 0.0;
};

/// Assembles the 3x3-block stability matrix. With m = rows(state),
/// A = state, B = delay, U = delayBound, d = derivativeBound,
/// Q/S/H the three weights:
///
///   [ U^2 A'QA - Q + S + A'H + HA   U^2 A'QB + HB      Q  ]
///   [ (1,2) block transposed        U^2 B'QB - (1-d)S  0  ]
///   [ Q                             0                  -Q ]
///
/// The result is exactly symmetric. Weights asymmetric beyond 1e-12 are
/// rejected with ValidationError.
Matrix assembleStabilityMatrix(const LmiProblem& problem, const Matrix& derivWeight,
                               const Matrix& delayWeight, const Matrix& stateWeight);

struct DefinitenessResult {
  bool negativeDefinite = false;
  double margin = 0.0;  // largest eigenvalue of the symmetrized input
};

/// Negative-definiteness test with margin. The input is symmetrized, a
/// Cholesky factorization of -(M + tol I) is attempted, and a symmetric
/// eigensolve supplies the margin (and settles borderline factorizations).
/// Non-finite entries raise ValidationError.
DefinitenessResult isNegativeDefinite(const Matrix& m, double tol);

/// Positive definiteness of a symmetric candidate weight.
bool isPositiveDefinite(const Matrix& m, double tol);

struct CertificateSearchResult {
  bool feasible = false;
  LmiCertificate certificate;  // valid when feasible
  double bestMargin = 0.0;     // most-negative margin seen across the search
  int evaluations = 0;
  std::string note;  // "inconclusive" detail when the search fails
};

struct SearchOptions {
  int budget = 64;       // candidate starts
  double tol = 1e-9;     // definiteness margin
  std::uint64_t seed = 0x720575940379u;
};

/// Multistart feasibility search: scaled identities, a Lyapunov-seeded
/// instantaneous weight, and random Gram matrices, each refined by
/// coordinate descent on the three scale factors. Returns the first
/// candidate that verifies, otherwise an inconclusive report carrying the
/// best margin found. A failed search is NOT a proof of infeasibility.
CertificateSearchResult searchCertificate(const LmiProblem& problem,
                                          const SearchOptions& options = {});

/// Dense solve of state' H + H state = -I via vectorization. Returns a
/// symmetric H; positive definite iff `state` is Hurwitz.
Matrix solveLyapunov(const Matrix& state);

}  // namespace platoon
