#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "platoon/attack.hpp"
#include "platoon/detection.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/resilience.hpp"
#include "platoon/stability.hpp"
#include "platoon/topology.hpp"

namespace platoon {

/// One switchable configuration: the graph plus the formation geometry the
/// vehicles hold relative to that phase's leader.
struct PhaseSpec {
  TopologyPhase phase;
  Vector spacings;  // desired gap to the phase leader, m; zero at the leader
};

struct ScenarioConfig {
  int schemaVersion = 1;
  PlatoonModel model;
  Vector initialPositions;
  Vector initialVelocities;
  std::vector<PhaseSpec> phases;
  PhaseRoles roles;
  bool attackEnabled = false;
  DelayProfile attack;
  DetectorSettings detector;
  bool responseEnabled = true;
  ResilienceConfig resilience;
  double timeStep = 1e-3;
  double tEnd = 30.0;
  std::uint64_t seed = 0;  // consumed by randomized tests only

  const PhaseSpec& phaseById(const std::string& id) const;

  /// Cross-validates every invariant, reporting all violations at once.
  void validate() const;
};

/// Parses and cross-validates a config document. `sourceName` labels
/// diagnostics.
ScenarioConfig parseConfig(const std::string& jsonText, const std::string& sourceName);
ScenarioConfig loadConfig(const std::string& path);

struct StepRecord {
  double t = 0.0;
  Vector positions;      // absolute, m
  Vector velocities;     // absolute, m/s
  Vector errPositions;   // relative to the active phase leader
  Vector errVelocities;
  Vector controls;       // applied accelerations
  int phaseIndex = 0;    // into ScenarioTrace::phaseIds
  Vector tauHat;         // per-vehicle measured delay, s
};

struct ScenarioSummary {
  std::optional<double> detectionTime;
  std::optional<int> detectedVehicle;     // 0-based
  std::optional<double> firstMeasurementTime;
  std::optional<double> firstMeasuredDelay;
  std::string responseBranch = "none";    // none | retrieval | stop
  std::optional<double> activationTime;
  std::optional<int> newLeader;           // 0-based
  std::optional<double> recoveredTime;
  std::optional<double> stoppedTime;      // victim at standstill
  double finalMaxSpacingError = 0.0;      // non-leader vehicles
  double finalMaxVelocityError = 0.0;
  double finalMaxSpacingErrorFollowers = 0.0;  // excludes a stopped victim
  double finalMaxVelocityErrorFollowers = 0.0;
  std::optional<double> victimFinalSpeed;
  bool mdadtHolds = true;
  bool stabilityAttempted = false;
  bool stabilityFeasible = false;
  double stabilityMargin = 0.0;
};

struct ScenarioTrace {
  int n = 0;
  double h = 0.0;
  std::vector<std::string> phaseIds;
  std::vector<StepRecord> records;  // one per integration step, plus t = 0
  std::vector<DetectorEvent> events;
  std::vector<SwitchRecord> switches;
  SwitchingSchedule schedule;
  ScenarioSummary summary;
};

/// Executes the full pipeline: nominal run, attack onset, twin-counter
/// detection, the resilient response, and final consensus under the active
/// leader. Deterministic for a fixed config.
ScenarioTrace run(const ScenarioConfig& config);

/// Writes trace.csv, events.csv, switches.csv, summary.json and the SVG
/// charts (positions, velocities, switching signal) into `dir`.
void exportTrace(const ScenarioTrace& trace, const std::string& dir);

/// Re-renders the SVG charts from a previously exported trace.csv.
void renderChartsFromCsv(const std::string& traceCsvPath, const std::string& dir);

/// Builds the delay-dependent stability problem of one phase: the reduced
/// state/delay pair (local feedback folded in) with the delay bounds of the
/// profile.
LmiProblem stabilityProblemForPhase(const ScenarioConfig& config, const std::string& phaseId);

}  // namespace platoon
