#pragma once

#include <string>
#include <vector>

#include "platoon/dynamics.hpp"
#include "platoon/topology.hpp"

namespace platoon {

enum class DelayKind { Constant, Ramp, Sinusoidal, Piecewise };

/// A denial-of-service attack modeled as a time-varying transmission delay
/// on every link that carries the victim's state. Inactive (zero) before
/// `onset`. The bounds must hold strictly while the attack is active:
/// 0 < tau(t) < upperBound and dtau/dt < derivativeBound < 1.
struct DelayProfile {
  DelayKind kind = DelayKind::Constant;
  double onset = 0.0;
  double base = 0.0;       // constant value / ramp start / sinusoid center
  double slope = 0.0;      // ramp only, s per s
  double amplitude = 0.0;  // sinusoid only
  double omega = 0.0;      // sinusoid only, rad/s
  std::vector<std::pair<double, double>> points;  // piecewise only, (t, tau)
  double upperBound = 0.0;
  double derivativeBound = 0.0;
  int victim = 0;

  /// Delay at time t; exactly 0 before onset.
  double sample(double t) const;

  /// Analytic derivative for the closed-form kinds, finite differences (step
  /// h) for piecewise data.
  double derivative(double t, double h) const;
};

struct ProfileCheck {
  std::string name;
  bool pass = true;
  double firstViolation = -1.0;  // meaningful when !pass
};

struct ProfileReport {
  std::vector<ProfileCheck> checks;
  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

/// Checks the delay bound structure over [onset, horizon] by dense sampling
/// at step h plus the analytic derivative where available. Violations are
/// report entries, never exceptions.
ProfileReport validate(const DelayProfile& profile, double horizon, double h);

/// Distributed consensus control under attack, one input per vehicle.
///
/// Links carrying current data contribute
///   -a_ij ((pe_i - pe_j) + gamma (ve_i - ve_j))
/// evaluated now; links carrying the victim's state contribute the same
/// relative term evaluated at t - tau(t), read from the absolute-state
/// history (each receiver pairs the stale packet with its own buffered state
/// of the same age, so the relative measurement stays time-consistent).
/// With tau = 0 this is exactly the delay-free consensus law.
///
/// `absNow` is the stacked absolute state [positions; velocities]; `history`
/// buffers the same layout. `spacings` are relative to `leader`.
Vector delayedControl(const PlatoonModel& model, const CommTopology& topology,
                      const Vector& spacings, const Vector& absNow,
                      const StateHistory& history, const DelayProfile& profile, double t);

/// integrateDelayed with the delay function taken from a profile.
Trajectory integrateDelayed(const Matrix& a, const Matrix& aDelay, const Vector& x0,
                            const DelayProfile& profile, double tEnd, double h);

}  // namespace platoon
