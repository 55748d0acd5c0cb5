#include "platoon/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace platoon {

std::string switchReasonName(SwitchReason reason) {
  switch (reason) {
    case SwitchReason::Detected:
      return "detected";
    case SwitchReason::RetrievalToggle:
      return "retrieval_toggle";
    case SwitchReason::Recovered:
      return "recovered";
    case SwitchReason::Stopped:
      return "stopped";
  }
  return "?";
}

double MdadtParams::dwellFor(const std::string& mode) const {
  const auto it = dwell.find(mode);
  return it == dwell.end() ? defaultDwell : it->second;
}

double MdadtParams::chatterFor(const std::string& mode) const {
  const auto it = chatter.find(mode);
  return it == chatter.end() ? defaultChatter : it->second;
}

LawCheckResult switchingLawCheck(const SwitchingSchedule& schedule, double windowStart,
                                 double windowEnd) {
  LawCheckResult result;
  if (!(windowEnd > windowStart)) return result;

  // walk the piecewise-constant mode signal, accumulating per-mode residence
  // and activation counts inside the window
  std::map<std::string, LawCheckResult::ModeCount> modes;
  auto ensure = [&modes](const std::string& mode) -> LawCheckResult::ModeCount& {
    auto [it, inserted] = modes.try_emplace(mode);
    if (inserted) it->second.mode = mode;
    return it->second;
  };

  std::string mode = schedule.initialMode;
  double segStart = schedule.start;
  auto accumulate = [&](double segEnd) {
    const double lo = std::max(segStart, windowStart);
    const double hi = std::min(segEnd, windowEnd);
    if (hi > lo) ensure(mode).residence += hi - lo;
  };
  for (const auto& rec : schedule.records) {
    accumulate(rec.t);
    if (rec.t >= windowStart && rec.t < windowEnd) ensure(rec.toPhase).switches += 1;
    mode = rec.toPhase;
    segStart = rec.t;
  }
  accumulate(windowEnd);

  for (auto& [name, count] : modes) {
    count.bound = schedule.params.chatterFor(name) +
                  count.residence / schedule.params.dwellFor(name);
    if (count.switches > count.bound + 1e-9) result.holds = false;
    result.modes.push_back(count);
  }
  return result;
}

bool auditSchedule(const SwitchingSchedule& schedule, double horizonEnd) {
  std::vector<double> marks{schedule.start};
  for (const auto& rec : schedule.records) marks.push_back(rec.t);
  marks.push_back(horizonEnd);
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    if (!switchingLawCheck(schedule, marks[i], marks[i + 1]).holds) return false;
  }
  return switchingLawCheck(schedule, schedule.start, horizonEnd).holds;
}

int electLeader(const CommTopology& reconfigured, const Vector& positions, int victim) {
  const int n = reconfigured.n;
  if (victim < 0 || victim >= n) throw ValidationError("electLeader: victim out of range");
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i) {
    if (i != victim) candidates.push_back(i);
  }
  if (candidates.empty()) throw ContractViolation("electLeader: no candidate vehicles");
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const double da = std::abs(positions(a) - positions(victim));
    const double db = std::abs(positions(b) - positions(victim));
    if (da != db) return da < db;
    return a < b;
  });
  for (const int c : candidates) {
    if (hasRootedSpanningTree(reconfigured, c)) return c;
  }
  throw ContractViolation(
      "electLeader: no candidate yields a rooted spanning tree after reconfiguration");
}

SystemMatrices applyPhase(const TopologyPhase& phase, const PlatoonModel& model,
                          std::optional<int> delayedSource) {
  phase.topology.validate();
  const LaplacianFamily family = buildFamily(phase.topology, delayedSource);
  SystemMatrices sys;
  sys.nominal = buildNominal(model, family.full);
  std::tie(sys.attackedState, sys.attackedDelay) =
      buildAttacked(model, family.fresh, family.delayCoupling);
  std::tie(sys.reducedState, sys.reducedDelay) =
      buildReduced(model, family.reducedFresh, family.reducedDelayed);
  return sys;
}

void ResilienceConfig::validate(double delayUpperBound) const {
  if (!(criticalBound > 0.0) || !(criticalBound < delayUpperBound)) {
    throw ValidationError(
        "resilience: critical bound must satisfy 0 < C < attack upper bound (C = " +
        std::to_string(criticalBound) + ", bound = " + std::to_string(delayUpperBound) + ")");
  }
  if (!(decelRate > 0.0)) throw ValidationError("resilience: deceleration rate must be positive");
  if (!(recoverTolerance > 0.0)) {
    throw ValidationError("resilience: recovery tolerance must be positive");
  }
  if (!(dwellOpen > 0.0) || !(dwellClosed > 0.0)) {
    throw ValidationError("resilience: retrieval dwell times must be positive");
  }
}

ResilienceEngine::ResilienceEngine(ResilienceConfig config, PhaseRoles roles, double timeStep)
    : config_(std::move(config)), roles_(std::move(roles)), h_(timeStep) {
  dwellOpenSteps_ = std::llround(config_.dwellOpen / h_);
  dwellClosedSteps_ = std::llround(config_.dwellClosed / h_);
  if (dwellOpenSteps_ < 1 || dwellClosedSteps_ < 1) {
    throw ValidationError("resilience: dwell times must be at least one integration step");
  }
}

ResponseActions ResilienceEngine::activate(long stepIndex) {
  ResponseActions actions;
  if (!reconfigured_.has_value()) {
    throw ContractViolation("resilience: reconfigured topology not supplied before activation");
  }
  electedLeader_ = electLeader(*reconfigured_, lastPositions_, *victim_);
  if (electedLeader_ != reconfigured_->leader) {
    throw ContractViolation("resilience: elected leader " + std::to_string(electedLeader_) +
                            " does not match configured post-attack leader " +
                            std::to_string(reconfigured_->leader));
  }
  if (tauHat_ < config_.criticalBound) {
    stage_ = ResponseStage::Retrieval;
    openWindow_ = false;
    nextToggleStep_ = stepIndex + dwellClosedSteps_;
    actions.switchTo = {roles_.retrievalClosed, SwitchReason::RetrievalToggle};
  } else {
    stage_ = ResponseStage::Stopping;
    actions.switchTo = {roles_.stopped, SwitchReason::Stopped};
    actions.commandStop = *victim_;
  }
  return actions;
}

ResponseActions ResilienceEngine::step(long stepIndex, const std::vector<DetectorEvent>& events,
                                       const Vector& positions, double victimError) {
  lastPositions_ = positions;
  ResponseActions actions;

  for (const auto& ev : events) {
    switch (stage_) {
      case ResponseStage::Idle:
        if (ev.type == DetectorEventType::Detected) {
          stage_ = ResponseStage::Alerted;
          victim_ = ev.vehicle;
          actions.switchTo = {roles_.attacked, SwitchReason::Detected};
        }
        break;
      case ResponseStage::Alerted:
        if (ev.type == DetectorEventType::Measured) {
          victim_ = ev.vehicle;
          tauHat_ = ev.tauHat;
          return activate(stepIndex);
        }
        break;
      case ResponseStage::Retrieval:
        // refreshed measurements can push the victim over the critical bound
        if (ev.type == DetectorEventType::Measured && victim_ && ev.vehicle == *victim_) {
          tauHat_ = ev.tauHat;
          if (tauHat_ >= config_.criticalBound) {
            stage_ = ResponseStage::Stopping;
            actions.switchTo = {roles_.stopped, SwitchReason::Stopped};
            actions.commandStop = *victim_;
            return actions;
          }
        }
        break;
      case ResponseStage::Stopping:
      case ResponseStage::Recovered:
        break;  // response complete; later events are informational
    }
  }

  if (stage_ == ResponseStage::Retrieval) {
    if (stepIndex >= nextToggleStep_) {
      if (victimError < config_.recoverTolerance) {
        stage_ = ResponseStage::Recovered;
        actions.switchTo = {roles_.recovered, SwitchReason::Recovered};
      } else {
        openWindow_ = !openWindow_;
        actions.switchTo = {openWindow_ ? roles_.retrievalOpen : roles_.retrievalClosed,
                            SwitchReason::RetrievalToggle};
        nextToggleStep_ = stepIndex + (openWindow_ ? dwellOpenSteps_ : dwellClosedSteps_);
      }
    }
  }
  return actions;
}

}  // namespace platoon
