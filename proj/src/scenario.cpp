#include "platoon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace platoon {

const PhaseSpec& ScenarioConfig::phaseById(const std::string& id) const {
  for (const auto& spec : phases) {
    if (spec.phase.id == id) return spec;
  }
  throw ValidationError("unknown phase id '" + id + "'");
}

void ScenarioConfig::validate() const {
  std::vector<std::string> issues;
  const int n = model.n;

  try {
    const auto& nominal = phaseById(roles.nominal);
    model.validate(nominal.phase.topology.leader);
  } catch (const ValidationError& e) {
    issues.emplace_back(e.what());
  }
  if (initialPositions.size() != n) issues.push_back("/initial/positions: length must equal n");
  if (initialVelocities.size() != n) issues.push_back("/initial/velocities: length must equal n");

  std::map<std::string, int> seen;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const auto& spec = phases[p];
    const std::string where = "/phases/" + std::to_string(p);
    if (++seen[spec.phase.id] > 1) issues.push_back(where + ": duplicate phase id");
    try {
      if (spec.phase.topology.n != n) {
        throw ValidationError("phase vehicle count differs from platoon n");
      }
      spec.phase.topology.validate();
    } catch (const ValidationError& e) {
      issues.push_back(where + ": " + e.what());
    }
    if (spec.spacings.size() != n) {
      issues.push_back(where + "/spacings: length must equal n");
    } else if (spec.phase.topology.leader >= 0 && spec.phase.topology.leader < n &&
               spec.spacings(spec.phase.topology.leader) != 0.0) {
      issues.push_back(where + "/spacings: leader entry must be zero");
    }
  }

  auto requireRole = [&](const std::string& name, const std::string& id) {
    if (id.empty()) {
      issues.push_back("/roles/" + name + ": required for this scenario");
      return;
    }
    if (!seen.count(id)) issues.push_back("/roles/" + name + ": unknown phase id '" + id + "'");
  };
  requireRole("nominal", roles.nominal);
  if (attackEnabled) {
    requireRole("attacked", roles.attacked);
    if (responseEnabled) {
      requireRole("retrieval_open", roles.retrievalOpen);
      requireRole("retrieval_closed", roles.retrievalClosed);
      requireRole("recovered", roles.recovered);
      requireRole("stopped", roles.stopped);
    }
  }

  if (!(timeStep > 0.0)) issues.push_back("/integration/time_step: must be positive");
  if (!(tEnd > 0.0)) issues.push_back("/integration/t_end: must be positive");
  if (!(detector.epsilon > 0.0)) issues.push_back("/detector/epsilon: must be positive");

  if (attackEnabled) {
    if (attack.victim < 0 || attack.victim >= n) {
      issues.push_back("/attack/victim: index out of range");
    }
    if (!(attack.upperBound > 0.0)) issues.push_back("/attack/upper_bound: must be positive");
    if (!(attack.derivativeBound > 0.0) || !(attack.derivativeBound < 1.0)) {
      issues.push_back("/attack/derivative_bound: must lie in (0, 1)");
    } else if (timeStep > 0.0) {
      const auto report = platoon::validate(attack, tEnd, timeStep);
      for (const auto& check : report.checks) {
        if (!check.pass) {
          std::ostringstream oss;
          oss << "/attack: bound check '" << check.name << "' fails";
          if (check.firstViolation >= 0.0) oss << " first at t = " << check.firstViolation;
          issues.push_back(oss.str());
        }
      }
    }
    if (responseEnabled) {
      try {
        resilience.validate(attack.upperBound);
      } catch (const ValidationError& e) {
        issues.push_back(std::string("/response: ") + e.what());
      }
    }
  }

  if (!issues.empty()) {
    std::ostringstream oss;
    oss << "config validation failed (" << issues.size() << " issue"
        << (issues.size() == 1 ? "" : "s") << "):";
    for (const auto& msg : issues) oss << "\n  - " << msg;
    throw ValidationError(oss.str());
  }
}

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) {
    throw ValidationError(where + ": missing required field '" + name + "'");
  }
  return j.at(name);
}

double numberField(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_number()) throw ValidationError(where + "/" + name + ": must be a number");
  return v.get<double>();
}

int intField(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_number_integer()) throw ValidationError(where + "/" + name + ": must be an integer");
  return v.get<int>();
}

Vector vectorField(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_array()) throw ValidationError(where + "/" + name + ": must be an array");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ValidationError(where + "/" + name + "[" + std::to_string(i) + "]: must be a number");
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Matrix matrixField(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_array() || v.empty()) {
    throw ValidationError(where + "/" + name + ": must be an array of rows");
  }
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) {
      throw ValidationError(where + "/" + name + ": rows must be equal-length arrays");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[i][c].is_number()) {
        throw ValidationError(where + "/" + name + ": entries must be numbers");
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[i][c].get<double>();
    }
  }
  return out;
}

DelayKind parseKind(const std::string& kind, const std::string& where) {
  if (kind == "constant") return DelayKind::Constant;
  if (kind == "ramp") return DelayKind::Ramp;
  if (kind == "sinusoidal") return DelayKind::Sinusoidal;
  if (kind == "piecewise") return DelayKind::Piecewise;
  throw ValidationError(where + "/kind: unknown delay kind '" + kind + "'");
}

}  // namespace

ScenarioConfig parseConfig(const std::string& jsonText, const std::string& sourceName) {
  json doc;
  try {
    doc = json::parse(jsonText);
  } catch (const json::parse_error& e) {
    throw ValidationError(sourceName + ": " + e.what());
  }

  ScenarioConfig cfg;
  cfg.schemaVersion = intField(doc, "schema_version", sourceName);
  if (cfg.schemaVersion != 1) {
    throw ValidationError(sourceName + "/schema_version: unsupported version " +
                          std::to_string(cfg.schemaVersion));
  }

  const json& platoonJ = field(doc, "platoon", sourceName);
  cfg.model.n = intField(platoonJ, "n", "/platoon");
  cfg.model.gamma = numberField(platoonJ, "gamma", "/platoon");
  if (platoonJ.contains("local_feedback")) {
    const json& lf = platoonJ.at("local_feedback");
    const Matrix a = matrixField(lf, "a", "/platoon/local_feedback");
    const Vector b = vectorField(lf, "b", "/platoon/local_feedback");
    if (a.rows() != 2 || a.cols() != 2 || b.size() != 2) {
      throw ValidationError("/platoon/local_feedback: a must be 2x2 and b length 2");
    }
    cfg.model.localA = a;
    cfg.model.localB = b;
  }

  const json& initial = field(doc, "initial", sourceName);
  cfg.initialPositions = vectorField(initial, "positions", "/initial");
  cfg.initialVelocities = vectorField(initial, "velocities", "/initial");

  const json& integration = field(doc, "integration", sourceName);
  cfg.timeStep = numberField(integration, "time_step", "/integration");
  cfg.tEnd = numberField(integration, "t_end", "/integration");

  const json& phasesJ = field(doc, "phases", sourceName);
  if (!phasesJ.is_array() || phasesJ.empty()) {
    throw ValidationError("/phases: must be a non-empty array");
  }
  for (std::size_t p = 0; p < phasesJ.size(); ++p) {
    const std::string where = "/phases/" + std::to_string(p);
    const json& pj = phasesJ[p];
    PhaseSpec spec;
    spec.phase.id = field(pj, "id", where).get<std::string>();
    spec.phase.topology.leader = intField(pj, "leader", where);
    spec.phase.topology.adjacency = matrixField(pj, "adjacency", where);
    spec.phase.topology.n = cfg.model.n;
    spec.spacings = vectorField(pj, "spacings", where);
    cfg.phases.push_back(std::move(spec));
  }
  if (!cfg.phases.empty()) {
    cfg.model.spacings = cfg.phases.front().spacings;
  }

  const json& rolesJ = field(doc, "roles", sourceName);
  auto role = [&rolesJ](const char* name) -> std::string {
    return rolesJ.contains(name) ? rolesJ.at(name).get<std::string>() : std::string{};
  };
  cfg.roles.nominal = role("nominal");
  cfg.roles.attacked = role("attacked");
  cfg.roles.retrievalOpen = role("retrieval_open");
  cfg.roles.retrievalClosed = role("retrieval_closed");
  cfg.roles.recovered = role("recovered");
  cfg.roles.stopped = role("stopped");
  if (!cfg.roles.nominal.empty()) {
    for (const auto& spec : cfg.phases) {
      if (spec.phase.id == cfg.roles.nominal) cfg.model.spacings = spec.spacings;
    }
  }

  if (doc.contains("attack")) {
    const json& aj = doc.at("attack");
    cfg.attackEnabled = aj.contains("enabled") ? aj.at("enabled").get<bool>() : true;
    cfg.attack.victim = intField(aj, "victim", "/attack");
    cfg.attack.kind = parseKind(field(aj, "kind", "/attack").get<std::string>(), "/attack");
    const double rawOnset = numberField(aj, "onset", "/attack");
    // attack onset lands exactly on the integration grid
    cfg.attack.onset = cfg.timeStep > 0.0
                           ? std::llround(rawOnset / cfg.timeStep) * cfg.timeStep
                           : rawOnset;
    cfg.attack.upperBound = numberField(aj, "upper_bound", "/attack");
    cfg.attack.derivativeBound = numberField(aj, "derivative_bound", "/attack");
    switch (cfg.attack.kind) {
      case DelayKind::Constant:
        cfg.attack.base = numberField(aj, "tau0", "/attack");
        break;
      case DelayKind::Ramp:
        cfg.attack.base = numberField(aj, "tau0", "/attack");
        cfg.attack.slope = numberField(aj, "slope", "/attack");
        break;
      case DelayKind::Sinusoidal:
        cfg.attack.base = numberField(aj, "base", "/attack");
        cfg.attack.amplitude = numberField(aj, "amplitude", "/attack");
        cfg.attack.omega = numberField(aj, "omega", "/attack");
        break;
      case DelayKind::Piecewise: {
        const json& pts = field(aj, "points", "/attack");
        if (!pts.is_array()) throw ValidationError("/attack/points: must be an array");
        for (const auto& pt : pts) {
          if (!pt.is_array() || pt.size() != 2) {
            throw ValidationError("/attack/points: entries must be [t, tau] pairs");
          }
          cfg.attack.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        }
        break;
      }
    }
  }

  if (doc.contains("detector")) {
    cfg.detector.epsilon = numberField(doc.at("detector"), "epsilon", "/detector");
  }

  if (doc.contains("response")) {
    const json& rj = doc.at("response");
    cfg.responseEnabled = rj.contains("enabled") ? rj.at("enabled").get<bool>() : true;
    if (rj.contains("critical_bound")) {
      cfg.resilience.criticalBound = numberField(rj, "critical_bound", "/response");
    }
    if (rj.contains("decel_rate")) {
      cfg.resilience.decelRate = numberField(rj, "decel_rate", "/response");
    }
    if (rj.contains("recover_tolerance")) {
      cfg.resilience.recoverTolerance = numberField(rj, "recover_tolerance", "/response");
    }
    if (rj.contains("dwell_open")) {
      cfg.resilience.dwellOpen = numberField(rj, "dwell_open", "/response");
    }
    if (rj.contains("dwell_closed")) {
      cfg.resilience.dwellClosed = numberField(rj, "dwell_closed", "/response");
    }
    if (rj.contains("mdadt")) {
      const json& mj = rj.at("mdadt");
      if (mj.contains("default_dwell")) {
        cfg.resilience.mdadt.defaultDwell = numberField(mj, "default_dwell", "/response/mdadt");
      }
      if (mj.contains("default_chatter")) {
        cfg.resilience.mdadt.defaultChatter =
            numberField(mj, "default_chatter", "/response/mdadt");
      }
      if (mj.contains("dwell")) {
        for (const auto& [key, value] : mj.at("dwell").items()) {
          cfg.resilience.mdadt.dwell[key] = value.get<double>();
        }
      }
      if (mj.contains("chatter")) {
        for (const auto& [key, value] : mj.at("chatter").items()) {
          cfg.resilience.mdadt.chatter[key] = value.get<double>();
        }
      }
    }
  }

  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();

  cfg.validate();
  return cfg;
}

ScenarioConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parseConfig(buffer.str(), path);
}

namespace {

/// Absolute-coordinate platoon simulator. The reference twin runs the same
/// code with the attack disabled and gets rebased onto the plant at every
/// topology switch, so that off-attack the two stay bit-identical.
class PlantSim {
 public:
  PlantSim(const PlatoonModel& model, const Vector& pos0, const Vector& vel0,
           const DelayProfile& profile, bool attackActive, double h, double historySpan)
      : model_(model),
        profile_(profile),
        attackActive_(attackActive),
        h_(h),
        history_(historySpan, h) {
    inactive_ = profile;
    inactive_.onset = std::numeric_limits<double>::infinity();
    state_.resize(2 * model.n);
    state_.head(model.n) = pos0;
    state_.tail(model.n) = vel0;
    history_.initializeConstant(0.0, state_);
  }

  void setPhase(const PhaseSpec* spec) { phase_ = spec; }

  void setStopOverride(int vehicle, double decelRate) {
    stopping_ = vehicle;
    decel_ = decelRate;
    parked_ = false;
  }

  void setState(const Vector& x) { state_ = x; }
  const Vector& state() const { return state_; }
  const StateHistory& history() const { return history_; }
  bool parked() const { return parked_; }

  Vector controls(double t, const Vector& y) const {
    return controlsImpl(t, y, stopContext().first);
  }

  void step(double t) {
    const auto [stopAccel, landing] = stopContext();
    const auto f = [&](double tt, const Vector& y) -> Vector {
      return deriv(tt, y, stopAccel);
    };
    const Vector k1 = f(t, state_);
    const Vector k2 = f(t + 0.5 * h_, state_ + 0.5 * h_ * k1);
    const Vector k3 = f(t + 0.5 * h_, state_ + 0.5 * h_ * k2);
    const Vector k4 = f(t + h_, state_ + h_ * k3);
    state_ += (h_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state_.allFinite()) {
      throw DivergenceError("simulation diverged at t = " + std::to_string(t + h_), t + h_);
    }
    if (landing) {
      state_(model_.n + *stopping_) = 0.0;
      parked_ = true;
    }
    history_.append(t + h_, state_);
  }

 private:
  // commanded acceleration of a stopping vehicle for the current step; the
  // landing step ramps the velocity linearly to exactly zero
  std::pair<double, bool> stopContext() const {
    if (!stopping_ || parked_) return {0.0, false};
    const double v0 = state_(model_.n + *stopping_);
    if (std::abs(v0) <= decel_ * h_) return {-v0 / h_, true};
    return {v0 > 0.0 ? -decel_ : decel_, false};
  }

  Vector controlsImpl(double t, const Vector& y, double stopAccel) const {
    const auto& topo = phase_->phase.topology;
    const int n = model_.n;
    Vector u = delayedControl(model_, topo, phase_->spacings, y, history_,
                              attackActive_ ? profile_ : inactive_, t);
    const int lead = topo.leader;
    for (int i = 0; i < n; ++i) {
      const double posErr = y(i) - y(lead) - phase_->spacings(i);
      const double velErr = y(n + i) - y(n + lead);
      u(i) += model_.localA(1, 0) * posErr + model_.localA(1, 1) * velErr;
    }
    if (stopping_) u(*stopping_) = parked_ ? 0.0 : stopAccel;
    return u;
  }

  Vector deriv(double t, const Vector& y, double stopAccel) const {
    const int n = model_.n;
    Vector dx(2 * n);
    dx.head(n) = y.tail(n);
    dx.tail(n) = controlsImpl(t, y, stopAccel);
    if (stopping_ && parked_) dx(*stopping_) = 0.0;
    return dx;
  }

  PlatoonModel model_;
  DelayProfile profile_;
  DelayProfile inactive_;
  bool attackActive_;
  double h_;
  StateHistory history_;
  Vector state_;
  const PhaseSpec* phase_ = nullptr;
  std::optional<int> stopping_;
  double decel_ = 1.0;
  bool parked_ = false;
};

}  // namespace

LmiProblem stabilityProblemForPhase(const ScenarioConfig& config, const std::string& phaseId) {
  const PhaseSpec& spec = config.phaseById(phaseId);
  const LaplacianFamily family = buildFamily(spec.phase.topology, config.attack.victim);
  const auto [reducedState, reducedDelay] =
      buildReduced(config.model, family.reducedFresh, family.reducedDelayed);
  LmiProblem problem;
  problem.state = reducedState + localFeedbackBlock(config.model, config.model.n - 1);
  problem.delay = reducedDelay;
  problem.delayBound = config.attack.upperBound;
  problem.derivativeBound = config.attack.derivativeBound;
  return problem;
}

ScenarioTrace run(const ScenarioConfig& config) {
  config.validate();
  const int n = config.model.n;
  const double h = config.timeStep;
  const long steps = std::llround(config.tEnd / h);

  ScenarioTrace trace;
  trace.n = n;
  trace.h = h;
  std::map<std::string, int> phaseIndex;
  for (const auto& spec : config.phases) {
    phaseIndex[spec.phase.id] = static_cast<int>(trace.phaseIds.size());
    trace.phaseIds.push_back(spec.phase.id);
  }

  const double historySpan =
      config.attackEnabled ? 2.0 * config.attack.upperBound : 16.0 * h;
  PlantSim plant(config.model, config.initialPositions, config.initialVelocities,
                 config.attack, config.attackEnabled, h, historySpan);
  PlantSim ref(config.model, config.initialPositions, config.initialVelocities, config.attack,
               false, h, historySpan);

  const PhaseSpec* active = &config.phaseById(config.roles.nominal);
  plant.setPhase(active);
  ref.setPhase(active);

  DetectorBank bank(n, config.detector);
  std::optional<ResilienceEngine> engine;
  const PhaseSpec* reconfigured = nullptr;
  if (config.attackEnabled && config.responseEnabled) {
    engine.emplace(config.resilience, config.roles, h);
    reconfigured = &config.phaseById(config.roles.retrievalClosed);
    engine->setReconfiguredTopology(reconfigured->phase.topology);
  }

  trace.schedule.initialMode = config.roles.nominal;
  trace.schedule.start = 0.0;
  trace.schedule.params = config.resilience.mdadt;

  trace.records.reserve(static_cast<std::size_t>(steps) + 1);

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;

    // states as transmitted on the network: the victim's broadcast replays
    // its own trajectory one delay late
    Vector observed = plant.state();
    if (config.attackEnabled) {
      const double tau = config.attack.sample(t);
      if (tau > 0.0) {
        const Vector past = plant.history().at(t - tau);
        observed(config.attack.victim) = past(config.attack.victim);
        observed(n + config.attack.victim) = past(n + config.attack.victim);
      }
    }
    std::vector<DetectorEvent> events = bank.step(t, h, observed, ref.state());

    if (engine) {
      double victimError = std::numeric_limits<double>::infinity();
      if (engine->victim()) {
        const int v = *engine->victim();
        const int lead = reconfigured->phase.topology.leader;
        const double pe =
            plant.state()(v) - plant.state()(lead) - reconfigured->spacings(v);
        const double ve = plant.state()(n + v) - plant.state()(n + lead);
        victimError = std::hypot(pe, ve);
      }
      const ResponseActions actions =
          engine->step(k, events, plant.state().head(n), victimError);
      if (actions.commandStop) {
        plant.setStopOverride(*actions.commandStop, config.resilience.decelRate);
        ref.setStopOverride(*actions.commandStop, config.resilience.decelRate);
      }
      if (actions.switchTo && actions.switchTo->first != active->phase.id) {
        const auto& [toId, reason] = *actions.switchTo;
        SwitchRecord rec{t, active->phase.id, toId, reason};
        trace.switches.push_back(rec);
        trace.schedule.records.push_back(rec);
        active = &config.phaseById(toId);
        plant.setPhase(active);
        ref.setPhase(active);
        ref.setState(plant.state());
        // stale references are meaningless after a switch; the detector of
        // the vehicle under measurement keeps its latch, except when the
        // response has concluded
        const bool terminal =
            reason == SwitchReason::Recovered || reason == SwitchReason::Stopped;
        for (int v = 0; v < n; ++v) {
          if (!terminal && engine->victim() && v == *engine->victim()) continue;
          bank.reset(v, t, events);
        }
      }
    }

    StepRecord rec;
    rec.t = t;
    rec.positions = plant.state().head(n);
    rec.velocities = plant.state().tail(n);
    const int lead = active->phase.topology.leader;
    rec.errPositions = rec.positions.array() - rec.positions(lead) - active->spacings.array();
    rec.errVelocities = rec.velocities.array() - rec.velocities(lead);
    rec.controls = plant.controls(t, plant.state());
    rec.phaseIndex = phaseIndex.at(active->phase.id);
    rec.tauHat.resize(n);
    for (int v = 0; v < n; ++v) rec.tauHat(v) = bank.tauHat(v);
    trace.records.push_back(std::move(rec));
    for (auto& ev : events) trace.events.push_back(ev);

    if (k < steps) {
      plant.step(t);
      ref.step(t);
    }
  }

  // ---- summary ----------------------------------------------------------
  ScenarioSummary& summary = trace.summary;
  for (const auto& ev : trace.events) {
    if (ev.type == DetectorEventType::Detected && !summary.detectionTime) {
      summary.detectionTime = ev.t;
      summary.detectedVehicle = ev.vehicle;
    }
    if (ev.type == DetectorEventType::Measured && !summary.firstMeasurementTime) {
      summary.firstMeasurementTime = ev.t;
      summary.firstMeasuredDelay = ev.tauHat;
    }
  }
  if (engine) {
    switch (engine->stage()) {
      case ResponseStage::Retrieval:
      case ResponseStage::Recovered:
        summary.responseBranch = "retrieval";
        break;
      case ResponseStage::Stopping:
        summary.responseBranch = "stop";
        break;
      default:
        summary.responseBranch = "none";
    }
    if (engine->electedLeader() >= 0) summary.newLeader = engine->electedLeader();
  }
  for (const auto& sw : trace.switches) {
    if ((sw.reason == SwitchReason::RetrievalToggle || sw.reason == SwitchReason::Stopped) &&
        !summary.activationTime) {
      summary.activationTime = sw.t;
    }
    if (sw.reason == SwitchReason::Recovered && !summary.recoveredTime) {
      summary.recoveredTime = sw.t;
    }
  }
  if (summary.responseBranch == "stop" && engine && engine->victim()) {
    const int v = *engine->victim();
    for (const auto& rec : trace.records) {
      if (summary.activationTime && rec.t >= *summary.activationTime &&
          rec.velocities(v) == 0.0) {
        summary.stoppedTime = rec.t;
        break;
      }
    }
    summary.victimFinalSpeed = trace.records.back().velocities(v);
  }

  const StepRecord& last = trace.records.back();
  const int lastLead = config.phaseById(trace.phaseIds[static_cast<std::size_t>(
                                            last.phaseIndex)])
                           .phase.topology.leader;
  double maxPos = 0.0, maxVel = 0.0, maxPosF = 0.0, maxVelF = 0.0;
  const std::optional<int> stoppedVictim =
      summary.responseBranch == "stop" && engine ? engine->victim() : std::nullopt;
  for (int i = 0; i < n; ++i) {
    if (i == lastLead) continue;
    maxPos = std::max(maxPos, std::abs(last.errPositions(i)));
    maxVel = std::max(maxVel, std::abs(last.errVelocities(i)));
    if (stoppedVictim && i == *stoppedVictim) continue;
    maxPosF = std::max(maxPosF, std::abs(last.errPositions(i)));
    maxVelF = std::max(maxVelF, std::abs(last.errVelocities(i)));
  }
  summary.finalMaxSpacingError = maxPos;
  summary.finalMaxVelocityError = maxVel;
  summary.finalMaxSpacingErrorFollowers = maxPosF;
  summary.finalMaxVelocityErrorFollowers = maxVelF;

  summary.mdadtHolds = auditSchedule(trace.schedule, config.tEnd);

  if (config.attackEnabled && !config.roles.retrievalOpen.empty()) {
    const LmiProblem problem = stabilityProblemForPhase(config, config.roles.retrievalOpen);
    const auto search = searchCertificate(problem);
    summary.stabilityAttempted = true;
    summary.stabilityFeasible = search.feasible;
    summary.stabilityMargin = search.feasible ? search.certificate.margin : search.bestMargin;
  }

  return trace;
}

}  // namespace platoon
