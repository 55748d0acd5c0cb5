#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "platoon/resilience.hpp"

using namespace platoon;

namespace {

// retrieval graph of the shipped four-vehicle demo: vehicle 1 leads, the
// victim (3) only receives
CommTopology retrievalClosedTopology() {
  CommTopology t;
  t.n = 4;
  t.leader = 1;
  t.adjacency = Matrix::Zero(4, 4);
  t.adjacency(0, 1) = 1.0;
  t.adjacency(2, 1) = 1.0;
  t.adjacency(3, 2) = 1.0;
  return t;
}

PhaseRoles demoRoles() {
  PhaseRoles roles;
  roles.nominal = "nominal";
  roles.attacked = "attacked";
  roles.retrievalOpen = "retrieval_open";
  roles.retrievalClosed = "retrieval_closed";
  roles.recovered = "recovered";
  roles.stopped = "stopped";
  return roles;
}

}  // namespace

TEST_CASE("two vehicles leave a forced leader choice") {
  CommTopology t;
  t.n = 2;
  t.leader = 1;
  t.adjacency = Matrix::Zero(2, 2);
  t.adjacency(1, 0) = 1.0;  // vehicle 0 can lead the remainder
  const Vector positions = (Vector(2) << 3.0, 10.0).finished();
  CHECK(electLeader(t, positions, 1) == 0);
}

TEST_CASE("demo positions elect vehicle 2 as the new leader") {
  const auto t = retrievalClosedTopology();
  // converged pre-attack geometry: gaps (16, 4, 10) metres to the victim
  const Vector positions = (Vector(4) << 4.0, 16.0, 10.0, 20.0).finished();
  CHECK(electLeader(t, positions, 3) == 1);
}

TEST_CASE("equidistant candidates break the tie toward the lower index") {
  CommTopology t;
  t.n = 3;
  t.leader = 2;
  t.adjacency = Matrix::Zero(3, 3);
  // either survivor could root the pair
  t.adjacency(1, 0) = 1.0;
  t.adjacency(0, 1) = 1.0;
  const Vector positions = (Vector(3) << 7.0, 13.0, 10.0).finished();
  CHECK(electLeader(t, positions, 2) == 0);
}

TEST_CASE("an un-rootable reconfiguration fails the election") {
  CommTopology t;
  t.n = 3;
  t.leader = 2;
  t.adjacency = Matrix::Zero(3, 3);  // no links at all among survivors
  const Vector positions = (Vector(3) << 0.0, 1.0, 2.0).finished();
  CHECK_THROWS_AS(electLeader(t, positions, 2), ContractViolation);
}

TEST_CASE("a single switch is absorbed by the chatter bound") {
  SwitchingSchedule s;
  s.initialMode = "a";
  s.params.defaultChatter = 1.0;
  s.params.defaultDwell = 0.001;
  s.records.push_back({5.0, "a", "b", SwitchReason::RetrievalToggle});
  CHECK(switchingLawCheck(s, 0.0, 10.0).holds);
}

TEST_CASE("five switches in ten seconds violate the dwell-time law") {
  // mode "b" is activated five times within the window while residing only
  // five of the ten seconds: 5 > 1 + 5/3
  SwitchingSchedule s;
  s.initialMode = "a";
  s.params.defaultChatter = 1.0;
  s.params.dwell["b"] = 3.0;
  s.params.dwell["a"] = 0.5;
  for (int k = 0; k < 5; ++k) {
    const double t = 2.0 * static_cast<double>(k);
    s.records.push_back({t, "a", "b", SwitchReason::RetrievalToggle});
    s.records.push_back({t + 1.0, "b", "a", SwitchReason::RetrievalToggle});
  }
  const auto result = switchingLawCheck(s, 0.0, 10.0);
  CHECK_FALSE(result.holds);
  bool sawB = false;
  for (const auto& mode : result.modes) {
    if (mode.mode == "b") {
      sawB = true;
      CHECK(mode.switches == 5);
      CHECK(mode.residence == doctest::Approx(5.0));
      CHECK(mode.bound == doctest::Approx(1.0 + 5.0 / 3.0));
    }
  }
  CHECK(sawB);
}

TEST_CASE("alternating dwell exactly at the average dwell time passes") {
  SwitchingSchedule s;
  s.initialMode = "closed";
  s.params.defaultChatter = 1.0;
  s.params.defaultDwell = 2.0;
  double t = 35.0;
  std::string mode = "closed";
  for (int k = 0; k < 12; ++k) {
    const std::string next = mode == "closed" ? "open" : "closed";
    s.records.push_back({t, mode, next, SwitchReason::RetrievalToggle});
    mode = next;
    t += 2.0;
  }
  CHECK(auditSchedule(s, t + 5.0));
}

TEST_CASE("phase application is idempotent and structured") {
  PlatoonModel model;
  model.n = 4;
  model.gamma = 1.0;
  model.spacings = Vector::Zero(4);

  TopologyPhase phase{"retrieval_closed", retrievalClosedTopology()};
  const auto first = applyPhase(phase, model, 3);
  const auto second = applyPhase(phase, model, 3);
  CHECK((first.nominal - second.nominal).isZero(0.0));
  CHECK((first.attackedState - second.attackedState).isZero(0.0));
  CHECK((first.attackedDelay - second.attackedDelay).isZero(0.0));
  // the victim transmits nothing here, so the delayed coupling vanishes
  CHECK(first.attackedDelay.isZero(0.0));
  CHECK(first.reducedDelay.isZero(0.0));
  // block structure
  CHECK(first.attackedState.topLeftCorner(4, 4).isZero(0.0));
  CHECK((first.attackedState.topRightCorner(4, 4) - Matrix::Identity(4, 4)).isZero(0.0));
}

TEST_CASE("readmitted stale links appear only in the delay blocks") {
  PlatoonModel model;
  model.n = 4;
  model.gamma = 0.9;
  model.spacings = Vector::Zero(4);
  auto open = retrievalClosedTopology();
  open.adjacency(2, 3) = 0.2;  // victim data re-admitted toward vehicle 3
  const auto sys = applyPhase({"retrieval_open", open}, model, 3);
  CHECK_FALSE(sys.attackedDelay.isZero(0.0));
  // current-data coupling excludes the victim's column entirely
  Matrix bottomLeft = sys.attackedState.bottomLeftCorner(4, 4);
  CHECK(bottomLeft.col(3).isZero(0.0));
}

TEST_CASE("engine walks the retrieval branch") {
  ResilienceConfig config;
  config.criticalBound = 15.0;
  config.dwellOpen = 2.0;
  config.dwellClosed = 2.0;
  config.recoverTolerance = 1e-2;
  ResilienceEngine engine(config, demoRoles(), 1e-3);
  engine.setReconfiguredTopology(retrievalClosedTopology());

  const Vector positions = (Vector(4) << 4.0, 16.0, 10.0, 20.0).finished();
  const double big = 1.0;  // victim error above the handoff tolerance

  // detection alert
  auto actions = engine.step(30000, {{30.0, 3, DetectorEventType::Detected, 0.0}}, positions, big);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "attacked");
  CHECK(actions.switchTo->second == SwitchReason::Detected);
  CHECK(engine.stage() == ResponseStage::Alerted);

  // measured below the critical bound: retrieval starts muted
  actions = engine.step(35000, {{35.0, 3, DetectorEventType::Measured, 5.0}}, positions, big);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "retrieval_closed");
  CHECK(engine.stage() == ResponseStage::Retrieval);
  CHECK(engine.electedLeader() == 1);
  CHECK_FALSE(actions.commandStop.has_value());

  // first toggle boundary opens the stale links
  actions = engine.step(37000, {}, positions, big);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "retrieval_open");

  // next boundary mutes them again
  actions = engine.step(39000, {}, positions, big);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "retrieval_closed");

  // once the victim has converged the engine hands off
  actions = engine.step(41000, {}, positions, 1e-3);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "recovered");
  CHECK(actions.switchTo->second == SwitchReason::Recovered);
  CHECK(engine.stage() == ResponseStage::Recovered);

  // later events are informational
  actions = engine.step(50000, {{50.0, 3, DetectorEventType::Measured, 5.0}}, positions, big);
  CHECK_FALSE(actions.switchTo.has_value());
}

TEST_CASE("engine takes the stop branch at or above the critical bound") {
  ResilienceConfig config;
  config.criticalBound = 15.0;
  ResilienceEngine engine(config, demoRoles(), 1e-3);
  engine.setReconfiguredTopology(retrievalClosedTopology());
  const Vector positions = (Vector(4) << 4.0, 16.0, 10.0, 20.0).finished();

  engine.step(30000, {{30.0, 3, DetectorEventType::Detected, 0.0}}, positions, 1.0);
  const auto actions =
      engine.step(50000, {{50.0, 3, DetectorEventType::Measured, 20.0}}, positions, 1.0);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "stopped");
  CHECK(actions.switchTo->second == SwitchReason::Stopped);
  REQUIRE(actions.commandStop.has_value());
  CHECK(*actions.commandStop == 3);
  CHECK(engine.stage() == ResponseStage::Stopping);
}

TEST_CASE("a refreshed measurement over the bound aborts retrieval") {
  ResilienceConfig config;
  config.criticalBound = 15.0;
  ResilienceEngine engine(config, demoRoles(), 1e-3);
  engine.setReconfiguredTopology(retrievalClosedTopology());
  const Vector positions = (Vector(4) << 4.0, 16.0, 10.0, 20.0).finished();

  engine.step(30000, {{30.0, 3, DetectorEventType::Detected, 0.0}}, positions, 1.0);
  engine.step(35000, {{35.0, 3, DetectorEventType::Measured, 5.0}}, positions, 1.0);
  CHECK(engine.stage() == ResponseStage::Retrieval);
  const auto actions =
      engine.step(36000, {{36.0, 3, DetectorEventType::Measured, 16.0}}, positions, 1.0);
  CHECK(engine.stage() == ResponseStage::Stopping);
  REQUIRE(actions.switchTo.has_value());
  CHECK(actions.switchTo->first == "stopped");
  REQUIRE(actions.commandStop.has_value());
}

TEST_CASE("no measurement means no action") {
  ResilienceConfig config;
  ResilienceEngine engine(config, demoRoles(), 1e-3);
  engine.setReconfiguredTopology(retrievalClosedTopology());
  const Vector positions = Vector::Zero(4);
  const auto actions = engine.step(100, {}, positions, 1.0);
  CHECK_FALSE(actions.switchTo.has_value());
  CHECK_FALSE(actions.commandStop.has_value());
  CHECK(engine.stage() == ResponseStage::Idle);
}

TEST_CASE("resilience config bounds") {
  ResilienceConfig config;
  config.criticalBound = 15.0;
  CHECK_NOTHROW(config.validate(16.0));
  CHECK_THROWS_AS(config.validate(15.0), ValidationError);  // C must be < the bound
  config.criticalBound = 0.0;
  CHECK_THROWS_AS(config.validate(16.0), ValidationError);
}
