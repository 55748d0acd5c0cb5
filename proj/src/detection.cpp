#include "platoon/detection.hpp"

#include <algorithm>

namespace platoon {

std::string eventTypeName(DetectorEventType type) {
  switch (type) {
    case DetectorEventType::Detected:
      return "detected";
    case DetectorEventType::Measured:
      return "measured";
    case DetectorEventType::Reset:
      return "reset";
  }
  return "?";
}

namespace {

// Distance from point p to the segment a-b.
double segmentDistance(const Vector2& a, const Vector2& b, const Vector2& p) {
  const Vector2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double w = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (a + w * ab - p).norm();
}

}  // namespace

void detectorStep(DetectorState& det, const DetectorSettings& settings, int vehicle, double t,
                  double h, const Vector2& observed, const Vector2& reference,
                  std::vector<DetectorEvent>& events) {
  switch (det.mode) {
    case DetectorMode::Nominal:
    case DetectorMode::Measured: {
      det.t1 += h;
      det.t2 += h;
      if ((observed - reference).norm() > settings.epsilon) {
        det.mode = DetectorMode::Counting;
        det.latched = reference;
        events.push_back({t, vehicle, DetectorEventType::Detected, det.tauHat});
      }
      break;
    }
    case DetectorMode::Counting: {
      det.t2 += h;
      const Vector2 prev = det.hasPrev ? det.prevObserved : observed;
      if (segmentDistance(prev, observed, det.latched) <= settings.epsilon) {
        det.tauHat = det.t2 - det.t1;
        events.push_back({t, vehicle, DetectorEventType::Measured, det.tauHat});
        const double tau = det.tauHat;
        detectorReset(det);
        det.tauHat = tau;  // keep the measurement readable until the next one
        det.mode = DetectorMode::Measured;
      }
      break;
    }
  }
  det.prevObserved = observed;
  det.hasPrev = true;
}

void detectorReset(DetectorState& det) {
  det.t1 = 0.0;
  det.t2 = 0.0;
  det.mode = DetectorMode::Nominal;
  det.latched.setZero();
  det.tauHat = 0.0;
  det.hasPrev = false;
  det.prevObserved.setZero();
}

DetectorBank::DetectorBank(int n, DetectorSettings settings)
    : settings_(settings), states_(static_cast<std::size_t>(n)) {}

std::vector<DetectorEvent> DetectorBank::step(double t, double h, const Vector& observed,
                                              const Vector& reference) {
  const int n = size();
  std::vector<DetectorEvent> events;
  for (int i = 0; i < n; ++i) {
    const Vector2 obs(observed(i), observed(n + i));
    const Vector2 ref(reference(i), reference(n + i));
    detectorStep(states_[static_cast<std::size_t>(i)], settings_, i, t, h, obs, ref, events);
  }
  return events;
}

void DetectorBank::reset(int vehicle, double t, std::vector<DetectorEvent>& events) {
  auto& det = states_.at(static_cast<std::size_t>(vehicle));
  const bool midCycle = det.mode == DetectorMode::Counting;
  detectorReset(det);
  if (midCycle) {
    events.push_back({t, vehicle, DetectorEventType::Reset, 0.0});
  }
}

}  // namespace platoon
