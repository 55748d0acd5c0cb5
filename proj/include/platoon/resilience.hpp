#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "platoon/detection.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/topology.hpp"

namespace platoon {

enum class SwitchReason { Detected, RetrievalToggle, Recovered, Stopped };

std::string switchReasonName(SwitchReason reason);

struct SwitchRecord {
  double t = 0.0;
  std::string fromPhase;
  std::string toPhase;
  SwitchReason reason = SwitchReason::Detected;
};

/// Mode-dependent average dwell time parameters: per-mode minimum average
/// dwell (s) and chatter bound, with defaults for unlisted modes.
struct MdadtParams {
  double defaultDwell = 2.0;
  double defaultChatter = 1.0;
  std::map<std::string, double> dwell;
  std::map<std::string, double> chatter;

  double dwellFor(const std::string& mode) const;
  double chatterFor(const std::string& mode) const;
};

/// Append-only log of the switching signal.
struct SwitchingSchedule {
  std::string initialMode;
  double start = 0.0;
  std::vector<SwitchRecord> records;  // strictly increasing t
  MdadtParams params;
};

struct LawCheckResult {
  bool holds = true;
  struct ModeCount {
    std::string mode;
    int switches = 0;       // activations of the mode inside the window
    double residence = 0.0;  // time spent in the mode inside the window, s
    double bound = 0.0;     // chatter + residence / dwell
  };
  std::vector<ModeCount> modes;
};

/// Checks the average-dwell-time law on one window [windowStart, windowEnd):
/// for every mode, the number of activations must not exceed the chatter
/// bound plus the mode's residence time divided by its average dwell.
LawCheckResult switchingLawCheck(const SwitchingSchedule& schedule, double windowStart,
                                 double windowEnd);

/// Runs the law check over every window between consecutive events and over
/// the full span; true when all hold.
bool auditSchedule(const SwitchingSchedule& schedule, double horizonEnd);

/// Picks the vehicle closest in position to the victim (ties to the lowest
/// index) such that the reconfigured topology is rooted at it. Throws
/// ContractViolation when no candidate works.
int electLeader(const CommTopology& reconfigured, const Vector& positions, int victim);

/// Rebuilds every closed-loop matrix for a phase; `delayedSource` marks the
/// vehicle whose outgoing links carry delayed data.
SystemMatrices applyPhase(const TopologyPhase& phase, const PlatoonModel& model,
                          std::optional<int> delayedSource);

struct ResilienceConfig {
  double criticalBound = 15.0;    // s; retrieval below, stop at or above
  double decelRate = 1.0;         // m/s^2 commanded while stopping
  double recoverTolerance = 1e-2; // victim error to new leader for handoff
  double dwellOpen = 2.0;         // s per readmitted-data window
  double dwellClosed = 2.0;       // s per muted window
  MdadtParams mdadt;

  void validate(double delayUpperBound) const;
};

/// Phase roles the engine switches between, as phase ids.
struct PhaseRoles {
  std::string nominal;
  std::string attacked;
  std::string retrievalOpen;
  std::string retrievalClosed;
  std::string recovered;
  std::string stopped;
};

enum class ResponseStage { Idle, Alerted, Retrieval, Stopping, Recovered };

struct ResponseActions {
  std::optional<std::pair<std::string, SwitchReason>> switchTo;
  std::optional<int> commandStop;  // vehicle to decelerate and hold at zero
};

/// Deterministic response state machine. Fed detector events each step;
/// decides between the retrieval branch (measured delay below the critical
/// bound: isolate, re-elect, alternate the two retrieval subsystems under
/// the dwell-time law, hand off once the victim has converged) and the stop
/// branch (decelerate the victim to standstill). A refreshed measurement at
/// or above the critical bound aborts retrieval into the stop branch.
class ResilienceEngine {
 public:
  ResilienceEngine(ResilienceConfig config, PhaseRoles roles, double timeStep);

  /// One step. `events` are this step's detector events; `positions` the
  /// current absolute positions (for the election); `victimError` the
  /// victim's (position, velocity) error norm to the currently configured
  /// retrieval leader, used at toggle boundaries.
  ResponseActions step(long stepIndex, const std::vector<DetectorEvent>& events,
                       const Vector& positions, double victimError);

  ResponseStage stage() const { return stage_; }
  std::optional<int> victim() const { return victim_; }
  double measuredDelay() const { return tauHat_; }
  int electedLeader() const { return electedLeader_; }

  /// Topology of the reconfigured platoon used for the election; must be
  /// supplied before the first measured event arrives.
  void setReconfiguredTopology(CommTopology topology) { reconfigured_ = std::move(topology); }

 private:
  ResponseActions activate(long stepIndex);

  ResilienceConfig config_;
  PhaseRoles roles_;
  double h_;
  long dwellOpenSteps_;
  long dwellClosedSteps_;

  ResponseStage stage_ = ResponseStage::Idle;
  std::optional<int> victim_;
  double tauHat_ = 0.0;
  int electedLeader_ = -1;
  bool openWindow_ = false;  // retrieval: currently in the readmitted mode
  long nextToggleStep_ = 0;
  std::optional<CommTopology> reconfigured_;
  Vector lastPositions_;
};

}  // namespace platoon
