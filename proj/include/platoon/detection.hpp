#pragma once

#include <string>
#include <vector>

#include "platoon/common.hpp"

namespace platoon {

enum class DetectorEventType { Detected, Measured, Reset };

struct DetectorEvent {
  double t = 0.0;
  int vehicle = 0;
  DetectorEventType type = DetectorEventType::Detected;
  double tauHat = 0.0;
};

std::string eventTypeName(DetectorEventType type);

enum class DetectorMode { Nominal, Counting, Measured };

/// Twin incremental counters for one vehicle.
///
/// Both counters tick in lockstep while the observed (as-transmitted) state
/// tracks the reference model. When the observation leaves the epsilon ball
/// around the reference, counter 1 freezes and the reference value is
/// latched; counter 2 keeps ticking until the observation comes back to the
/// latched value, which for a delayed replay happens exactly one delay
/// later. The difference of the counters is the measured delay, after which
/// both counters reset so the measurement can refresh.
///
/// The return-match is evaluated against the segment swept by the
/// observation during the last step (not just its endpoint): at driving
/// speeds the observation moves several epsilon per step, so an
/// endpoint-only test would skip over the latched value.
struct DetectorState {
  double t1 = 0.0;            // s, frozen on detection
  double t2 = 0.0;            // s, keeps ticking while counting
  DetectorMode mode = DetectorMode::Nominal;
  Vector2 latched = Vector2::Zero();
  double tauHat = 0.0;        // most recent measurement, s
  bool hasPrev = false;
  Vector2 prevObserved = Vector2::Zero();
};

struct DetectorSettings {
  double epsilon = 1e-3;  // combined (position, velocity) norm
};

/// Advances one detector by one step of size h and appends any events.
/// `observed` is the vehicle state as seen on the network, `reference` the
/// lockstep reference-model prediction for the same vehicle.
void detectorStep(DetectorState& det, const DetectorSettings& settings, int vehicle, double t,
                  double h, const Vector2& observed, const Vector2& reference,
                  std::vector<DetectorEvent>& events);

/// Clears counters, latch and measurement; returns the detector to nominal.
void detectorReset(DetectorState& det);

/// One detector per vehicle, stepped by the simulation loop.
class DetectorBank {
 public:
  DetectorBank(int n, DetectorSettings settings);

  /// Steps every vehicle; observed/reference are stacked absolute states
  /// [positions; velocities].
  std::vector<DetectorEvent> step(double t, double h, const Vector& observed,
                                  const Vector& reference);

  /// Resets a single detector, logging a Reset event if it was mid-cycle.
  void reset(int vehicle, double t, std::vector<DetectorEvent>& events);

  const DetectorState& state(int vehicle) const { return states_.at(static_cast<std::size_t>(vehicle)); }
  double tauHat(int vehicle) const { return states_.at(static_cast<std::size_t>(vehicle)).tauHat; }
  int size() const { return static_cast<int>(states_.size()); }

 private:
  DetectorSettings settings_;
  std::vector<DetectorState> states_;
};

}  // namespace platoon
