#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "platoon/common.hpp"

namespace platoon {

/// Vehicle-group parameters shared by every phase.
///
/// Each vehicle is a double integrator augmented with a per-vehicle
/// stabilizing feedback (localA, localB) that acts on the vehicle's error
/// state relative to the current consensus reference. To preserve the
/// position/velocity block structure of the stacked system, localA's first
/// row must be [0, 1] and localB must be [0, 1]^T; the feedback then only
/// contributes the acceleration terms localA(1,0) * posError +
/// localA(1,1) * velError.
struct PlatoonModel {
  int n = 0;
  double gamma = 1.0;     // velocity-error coupling gain, > 0
  Vector spacings;        // desired gap to the reference vehicle, m
  Matrix2 localA = (Matrix2() << 0, 1, 0, 0).finished();
  Vector2 localB = (Vector2() << 0, 1).finished();

  void validate(int leader) const;
};

/// Stacked error state [posErrors; velErrors] at one instant.
struct StackedState {
  double t = 0.0;
  Vector x;  // 2n (or 2(n-1) in follower coordinates)
};

/// The closed-loop matrices of one phase: the delay-free loop, the
/// attacked pair acting on current and delayed state, and the
/// follower-coordinate reduction of that pair.
struct SystemMatrices {
  Matrix nominal;        // 2n x 2n
  Matrix attackedState;  // 2n x 2n
  Matrix attackedDelay;  // 2n x 2n
  Matrix reducedState;   // 2(n-1) x 2(n-1)
  Matrix reducedDelay;   // 2(n-1) x 2(n-1)
};

/// Maps absolute (position, velocity) pairs to stacked error coordinates:
/// posError_i = s_i - s_leader - spacing_i, velError_i = v_i - v_leader.
StackedState errorCoordinates(const std::vector<std::pair<double, double>>& absStates,
                              int leader, const Vector& spacings);

/// [[0, I], [-L, -gamma L]] for a coupling matrix L.
Matrix buildNominal(const PlatoonModel& model, const Matrix& coupling);

/// State/delay pair of the attacked loop:
/// ([[0, I], [-Lf, -gamma Lf]], [[0, 0], [-G, -gamma G]]).
std::pair<Matrix, Matrix> buildAttacked(const PlatoonModel& model, const Matrix& fresh,
                                        const Matrix& delayCoupling);

/// Same block layout in follower coordinates. The delay block keeps a zero
/// upper-right block, matching the reduction of the attacked pair.
std::pair<Matrix, Matrix> buildReduced(const PlatoonModel& model, const Matrix& reducedFresh,
                                       const Matrix& reducedDelayed);

/// Additive contribution of the local stabilizing feedback to a stacked
/// system of m vehicles: [[0, 0], [a21 I, a22 I]].
Matrix localFeedbackBlock(const PlatoonModel& model, int m);

/// Sampled past of a trajectory, interpolated linearly. Samples must be
/// appended with strictly increasing times; the buffer keeps at least
/// `span` seconds behind the newest sample and prunes older entries.
class StateHistory {
 public:
  StateHistory(double span, double step);

  /// Seeds the buffer with a constant state on [t0 - span - 2h, t0].
  void initializeConstant(double t0, const Vector& x);

  void append(double t, const Vector& x);

  /// Linear interpolation at time t. Querying ahead of the newest sample
  /// extrapolates from the last segment; querying behind the buffered span
  /// throws ContractViolation.
  Vector at(double t) const;

  double newestTime() const;
  double oldestTime() const;
  double span() const { return span_; }

 private:
  double span_;
  double step_;
  std::deque<std::pair<double, Vector>> samples_;
};

struct Trajectory {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<Vector> states;  // states[k] is the state at t0 + k h

  double timeAt(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
};

/// Classical fixed-step 4th-order Runge-Kutta on dx/dt = f(t, x).
/// Throws DivergenceError (with the first bad time) if the state stops
/// being finite.
Trajectory integrateFixedStep(const std::function<Vector(double, const Vector&)>& f,
                              const Vector& x0, double tEnd, double h);

/// RK4 on the linear system dx/dt = A x.
Trajectory integrateNominal(const Matrix& a, const Vector& x0, double tEnd, double h);

/// RK4 on the delayed linear system
///   dx/dt = A x(t) + Ad x(t - delay(t)),
/// with the delayed term read from a linearly interpolated history that is
/// seeded with the constant x0 on [-historySpan, 0]. A zero sampled delay
/// uses the current stage state, so the delay-free limit reproduces
/// integrateNominal(A + Ad, ...) exactly.
Trajectory integrateDelayed(const Matrix& a, const Matrix& aDelay, const Vector& x0,
                            const std::function<double(double)>& delay, double tEnd, double h,
                            double historySpan);

}  // namespace platoon
