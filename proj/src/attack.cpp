#include "platoon/attack.hpp"

#include <algorithm>
#include <cmath>

namespace platoon {

double DelayProfile::sample(double t) const {
  if (t < onset) return 0.0;
  switch (kind) {
    case DelayKind::Constant:
      return base;
    case DelayKind::Ramp:
      return base + slope * (t - onset);
    case DelayKind::Sinusoidal:
      return base + amplitude * std::sin(omega * (t - onset));
    case DelayKind::Piecewise: {
      if (points.empty()) return 0.0;
      if (t <= points.front().first) return points.front().second;
      if (t >= points.back().first) return points.back().second;
      auto it = std::upper_bound(points.begin(), points.end(), t,
                                 [](double v, const auto& p) { return v < p.first; });
      const auto& [t1, x1] = *it;
      const auto& [t0, x0] = *(it - 1);
      const double w = (t - t0) / (t1 - t0);
      return x0 + w * (x1 - x0);
    }
  }
  return 0.0;
}

double DelayProfile::derivative(double t, double h) const {
  if (t < onset) return 0.0;
  switch (kind) {
    case DelayKind::Constant:
      return 0.0;
    case DelayKind::Ramp:
      return slope;
    case DelayKind::Sinusoidal:
      return amplitude * omega * std::cos(omega * (t - onset));
    case DelayKind::Piecewise:
      return (sample(t + h) - sample(std::max(onset, t - h))) /
             (t + h - std::max(onset, t - h));
  }
  return 0.0;
}

ProfileReport validate(const DelayProfile& profile, double horizon, double h) {
  ProfileReport report;
  ProfileCheck positive{"0 < tau(t)"};
  ProfileCheck below{"tau(t) < upper bound"};
  ProfileCheck window{"upper bound + tau(t) < 2 upper bound"};
  ProfileCheck derivative{"dtau/dt < derivative bound"};
  ProfileCheck bounds{"derivative bound < 1"};

  if (!(profile.derivativeBound < 1.0)) {
    bounds.pass = false;
    bounds.firstViolation = profile.onset;
  }
  if (horizon > profile.onset) {
    const auto steps = static_cast<std::size_t>(std::llround((horizon - profile.onset) / h));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = profile.onset + static_cast<double>(k) * h;
      const double tau = profile.sample(t);
      if (positive.pass && !(tau > 0.0)) {
        positive.pass = false;
        positive.firstViolation = t;
      }
      if (below.pass && !(tau < profile.upperBound)) {
        below.pass = false;
        below.firstViolation = t;
      }
      if (window.pass && !(profile.upperBound + tau < 2.0 * profile.upperBound)) {
        window.pass = false;
        window.firstViolation = t;
      }
      if (derivative.pass && !(profile.derivative(t, h) < profile.derivativeBound)) {
        derivative.pass = false;
        derivative.firstViolation = t;
      }
    }
  }
  report.checks = {positive, below, window, derivative, bounds};
  return report;
}

Vector delayedControl(const PlatoonModel& model, const CommTopology& topology,
                      const Vector& spacings, const Vector& absNow,
                      const StateHistory& history, const DelayProfile& profile, double t) {
  const int n = topology.n;
  const double tau = profile.sample(t);
  Vector u = Vector::Zero(n);
  const Vector* stale = nullptr;
  Vector staleStorage;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = topology.adjacency(i, j);
      if (w == 0.0) continue;
      double posDiff, velDiff;
      if (j == profile.victim && tau > 0.0) {
        if (stale == nullptr) {
          staleStorage = history.at(t - tau);
          stale = &staleStorage;
        }
        posDiff = (*stale)(i) - (*stale)(j) - (spacings(i) - spacings(j));
        velDiff = (*stale)(n + i) - (*stale)(n + j);
      } else {
        posDiff = absNow(i) - absNow(j) - (spacings(i) - spacings(j));
        velDiff = absNow(n + i) - absNow(n + j);
      }
      acc -= w * (posDiff + model.gamma * velDiff);
    }
    u(i) = acc;
  }
  return u;
}

Trajectory integrateDelayed(const Matrix& a, const Matrix& aDelay, const Vector& x0,
                            const DelayProfile& profile, double tEnd, double h) {
  return integrateDelayed(
      a, aDelay, x0, [&profile](double t) { return profile.sample(t); }, tEnd, h,
      2.0 * profile.upperBound);
}

}  // namespace platoon
