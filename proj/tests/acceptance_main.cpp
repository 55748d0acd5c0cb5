// Acceptance suite: end-to-end checks of the simulator, detector, response
// machinery and stability tooling at their contractual tolerances. Each
// criterion prints one PASS/FAIL line; the process exit code is the number
// of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "platoon/attack.hpp"
#include "platoon/resilience.hpp"
#include "platoon/scenario.hpp"
#include "platoon/stability.hpp"
#include "platoon/topology.hpp"

using namespace platoon;

namespace {

std::string gConfigDir;
int gFailures = 0;

void criterion(int number, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] %2d. %s%s%s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++gFailures;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ScenarioConfig demoConfig(const std::string& name) {
  return loadConfig(gConfigDir + "/" + name);
}

// randomized single-attack scenario used by the detection-accuracy check:
// the cruising leader is the victim, the response is disabled
ScenarioConfig randomDetectionScenario(std::mt19937_64& rng, double tau0) {
  std::uniform_int_distribution<int> size(4, 6);
  std::uniform_real_distribution<double> speed(8.0, 28.0);
  std::uniform_real_distribution<double> gap(4.0, 12.0);

  ScenarioConfig cfg;
  const int n = size(rng);
  const int leader = n - 1;
  cfg.model.n = n;
  cfg.model.gamma = 1.0;
  cfg.model.localA << 0, 1, -7, -6;
  cfg.model.localB << 0, 1;

  PhaseSpec nominal;
  nominal.phase.id = "nominal";
  nominal.phase.topology = oracles::randomRootedTopology(rng, n, leader);
  nominal.spacings = Vector::Zero(n);
  double offset = 0.0;
  for (int i = n - 2; i >= 0; --i) {
    offset -= gap(rng);
    nominal.spacings(i) = offset;
  }
  PhaseSpec attacked = nominal;
  attacked.phase.id = "attacked";
  cfg.model.spacings = nominal.spacings;
  cfg.phases = {nominal, attacked};
  cfg.roles.nominal = "nominal";
  cfg.roles.attacked = "attacked";

  const double v = speed(rng);
  cfg.initialPositions = Vector::Zero(n);
  cfg.initialVelocities = Vector::Constant(n, v);
  for (int i = 0; i < n; ++i) cfg.initialPositions(i) = 100.0 + nominal.spacings(i);

  cfg.attackEnabled = true;
  cfg.attack.kind = DelayKind::Constant;
  cfg.attack.base = tau0;
  cfg.attack.onset = 1.0;
  cfg.attack.upperBound = tau0 + 1.0;
  cfg.attack.derivativeBound = 0.1;
  cfg.attack.victim = leader;
  cfg.responseEnabled = false;
  cfg.timeStep = 1e-3;
  cfg.tEnd = cfg.attack.onset + tau0 + 1.0;
  return cfg;
}

std::pair<bool, std::string> fmtBool(bool pass, const std::string& detail) {
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <config-dir>\n");
    return 64;
  }
  gConfigDir = argv[1];

  criterion(1, "nominal consensus reaches 1e-2 by t = 30 s within 5 s wall-clock", [] {
    const auto config = demoConfig("demo_nominal.json");
    const auto start = std::chrono::steady_clock::now();
    const auto trace = run(config);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double worst = 0.0;
    const auto& last = trace.records.back();
    const int leader = 3;
    for (int i = 0; i < trace.n; ++i) {
      if (i == leader) continue;
      worst = std::max({worst, std::abs(last.errPositions(i)), std::abs(last.errVelocities(i))});
    }
    std::ostringstream oss;
    oss << "max error " << worst << " m at t = 30, wall " << wall << " s";
    return fmtBool(worst < 1e-2 && wall < 5.0, oss.str());
  });

  criterion(2, "zero-delay attacked integrator matches nominal within 1e-9/step", [] {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 6);
    std::uniform_real_distribution<double> init(-5.0, 5.0);
    std::uniform_real_distribution<double> gammaDist(0.5, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = size(rng);
      const auto topo = oracles::randomRootedTopology(rng, n, 0);
      std::uniform_int_distribution<int> pickVictim(0, n - 1);
      const auto family = buildFamily(topo, pickVictim(rng));
      PlatoonModel model;
      model.n = n;
      model.gamma = gammaDist(rng);
      model.spacings = Vector::Zero(n);
      const auto [state, delay] = buildAttacked(model, family.fresh, family.delayCoupling);
      Vector x0(2 * n);
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = init(rng);
      const auto delayed = integrateDelayed(
          state, delay, x0, [](double) { return 0.0; }, 10.0, 1e-3, 1.0);
      const auto nominal = integrateNominal(state + delay, x0, 10.0, 1e-3);
      for (std::size_t k = 0; k < delayed.states.size(); ++k) {
        worst = std::max(worst,
                         (delayed.states[k] - nominal.states[k]).cwiseAbs().maxCoeff());
      }
    }
    std::ostringstream oss;
    oss << "worst per-step deviation " << worst;
    return fmtBool(worst < 1e-9, oss.str());
  });

  criterion(3, "scalar delayed system matches method-of-steps reference within 1e-5", [] {
    Matrix a(1, 1), b(1, 1);
    a << 0.0;
    b << -1.0;
    Vector x0(1);
    x0 << 1.0;
    const double tau = 0.5, h = 1e-3;
    const auto traj = integrateDelayed(
        a, b, x0, [tau](double) { return tau; }, 3.0 * tau, h, 2.0 * tau);
    const Vector ref = oracles::methodOfStepsReference(a, b, x0, tau, 3.0 * tau, h / 100.0);
    const double err = std::abs(traj.states.back()(0) - ref(0));
    std::ostringstream oss;
    oss << "|x(3 tau) - reference| = " << err;
    return fmtBool(err < 1e-5, oss.str());
  });

  criterion(4, "measured delay within 2 ms of injected 2/5/10 s delays", [] {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (const double tau0 : {2.0, 5.0, 10.0}) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto cfg = randomDetectionScenario(rng, tau0);
        const auto trace = run(cfg);
        if (!trace.summary.firstMeasuredDelay.has_value()) {
          return fmtBool(false, "no measurement for tau0 = " + std::to_string(tau0));
        }
        worst = std::max(worst, std::abs(*trace.summary.firstMeasuredDelay - tau0));
      }
    }
    std::ostringstream oss;
    oss << "worst |tauHat - tau0| = " << worst << " s";
    return fmtBool(worst <= 2e-3, oss.str());
  });

  criterion(5, "recovery: spacings (4, 10, 20) m to vehicle 2 within 1e-2 by end of run", [] {
    const auto config = demoConfig("demo_recovery.json");
    const auto trace = run(config);
    if (trace.summary.responseBranch != "retrieval") {
      return fmtBool(false, "branch = " + trace.summary.responseBranch);
    }
    if (!trace.summary.newLeader || *trace.summary.newLeader != 1) {
      return fmtBool(false, "unexpected new leader");
    }
    if (!trace.summary.recoveredTime) return fmtBool(false, "no recovery handoff");
    const auto& last = trace.records.back();
    const Vector spacings = config.phaseById("recovered").spacings;
    double worstPos = 0.0, worstVel = 0.0;
    for (int i = 0; i < trace.n; ++i) {
      if (i == 1) continue;
      worstPos = std::max(
          worstPos, std::abs(last.positions(i) - last.positions(1) - spacings(i)));
      worstVel = std::max(worstVel, std::abs(last.velocities(i) - last.velocities(1)));
    }
    std::ostringstream oss;
    oss << "spacing error " << worstPos << " m, velocity error " << worstVel
        << " m/s, recovered at t = " << *trace.summary.recoveredTime;
    return fmtBool(worstPos < 1e-2 && worstVel < 1e-2, oss.str());
  });

  criterion(6, "stop branch: victim decelerates monotonically to standstill", [] {
    const auto config = demoConfig("demo_stop.json");
    const auto trace = run(config);
    if (trace.summary.responseBranch != "stop") {
      return fmtBool(false, "branch = " + trace.summary.responseBranch);
    }
    if (!trace.summary.activationTime) return fmtBool(false, "no activation");
    const int victim = config.attack.victim;
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    double boundedness = 0.0;
    for (const auto& rec : trace.records) {
      if (rec.t < *trace.summary.activationTime) continue;
      if (rec.velocities(victim) > prev + 1e-12) monotone = false;
      prev = rec.velocities(victim);
      for (int i = 0; i < trace.n; ++i) {
        if (i == victim || i == 1) continue;
        boundedness = std::max(boundedness, std::abs(rec.errPositions(i)));
      }
    }
    const double victimSpeed = std::abs(trace.records.back().velocities(victim));
    const double followerErr =
        std::max(trace.summary.finalMaxSpacingErrorFollowers,
                 trace.summary.finalMaxVelocityErrorFollowers);
    std::ostringstream oss;
    oss << "victim end speed " << victimSpeed << " m/s, follower end error " << followerErr
        << ", follower transient bound " << boundedness << " m";
    return fmtBool(monotone && victimSpeed < 1e-3 && followerErr < 1e-2 &&
                       boundedness < 1e3,
                   oss.str());
  });

  criterion(7, "dwell-time law holds for emitted schedules and rejects the counterexample", [] {
    auto config = demoConfig("demo_recovery.json");
    const auto trace = run(config);
    const bool scheduleOk = auditSchedule(trace.schedule, config.tEnd);

    SwitchingSchedule bad;
    bad.initialMode = "a";
    bad.params.defaultChatter = 1.0;
    bad.params.dwell["b"] = 3.0;
    bad.params.dwell["a"] = 0.1;
    for (int k = 0; k < 5; ++k) {
      const double t = 2.0 * static_cast<double>(k);
      bad.records.push_back({t, "a", "b", SwitchReason::RetrievalToggle});
      bad.records.push_back({t + 1.0, "b", "a", SwitchReason::RetrievalToggle});
    }
    const bool counterexampleRejected = !switchingLawCheck(bad, 0.0, 10.0).holds;
    std::ostringstream oss;
    oss << "demo schedule " << (scheduleOk ? "holds" : "violates") << " ("
        << trace.switches.size() << " switches), counterexample "
        << (counterexampleRejected ? "rejected" : "accepted");
    return fmtBool(scheduleOk && counterexampleRejected, oss.str());
  });

  criterion(8, "reduced coupling spectrum equals the nonzero Laplacian spectrum (1e-8)", [] {
    std::mt19937_64 rng(512);
    std::uniform_int_distribution<int> size(2, 8);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = size(rng);
      std::uniform_int_distribution<int> pick(0, n - 1);
      const int leader = pick(rng);
      const auto topo = oracles::randomRootedTopology(rng, n, leader);
      const Matrix lap = laplacian(topo.adjacency);
      auto spectrum = oracles::generalSpectrum(lap);
      std::size_t zeroIdx = 0;
      double zeroMag = std::abs(spectrum[0]);
      for (std::size_t i = 1; i < spectrum.size(); ++i) {
        if (std::abs(spectrum[i]) < zeroMag) {
          zeroMag = std::abs(spectrum[i]);
          zeroIdx = i;
        }
      }
      spectrum.erase(spectrum.begin() + static_cast<std::ptrdiff_t>(zeroIdx));
      const Matrix reduced = reduceAboutLeader(lap, leader);
      if (!oracles::spectraMatch(oracles::generalSpectrum(reduced), spectrum, 1e-8)) {
        return fmtBool(false, "mismatch on trial " + std::to_string(trial));
      }
    }
    return fmtBool(true, "50 randomized rooted graphs");
  });

  criterion(9, "definiteness test agrees with the dense eigenvalue oracle 100/100", [] {
    std::mt19937_64 rng(640);
    std::uniform_int_distribution<int> size(2, 30);
    std::uniform_real_distribution<double> shift(-4.0, 4.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int disagreements = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int dim = size(rng);
      Matrix r(dim, dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) r(i, j) = gauss(rng);
      }
      Matrix sym = 0.5 * (r + r.transpose()) + shift(rng) * Matrix::Identity(dim, dim);
      const auto res = isNegativeDefinite(sym, 1e-9);
      const auto eigs = oracles::jacobiEigenvalues(sym);
      if (res.negativeDefinite != (eigs.back() < -1e-9)) ++disagreements;
    }
    return fmtBool(disagreements == 0,
                   std::to_string(disagreements) + " disagreements in 100 trials");
  });

  criterion(10, "certificate round-trip: stable case certified, unstable case inconclusive", [] {
    LmiProblem stable;
    stable.state = (Matrix(1, 1) << -1.0).finished();
    stable.delay = (Matrix(1, 1) << -0.1).finished();
    stable.delayBound = 0.1;
    stable.derivativeBound = 0.1;
    const auto found = searchCertificate(stable);
    if (!found.feasible) return fmtBool(false, "stable scalar system not certified");
    const auto recheck = isNegativeDefinite(
        assembleStabilityMatrix(stable, found.certificate.derivWeight,
                                found.certificate.delayWeight, found.certificate.stateWeight),
        1e-9);
    if (!recheck.negativeDefinite || !isPositiveDefinite(found.certificate.derivWeight, 1e-9) ||
        !isPositiveDefinite(found.certificate.delayWeight, 1e-9) ||
        !isPositiveDefinite(found.certificate.stateWeight, 1e-9)) {
      return fmtBool(false, "certificate failed re-verification");
    }

    // the literal system is stable for every tested delay (its coupling is
    // weaker than its local decay); the divergence threshold is probed on
    // the companion system with the coefficients swapped
    if (!oracles::scalarDdeStable(-1.0, -0.1, 10.0, 120.0)) {
      return fmtBool(false, "unexpected divergence of the robust scalar system");
    }
    const double margin = oracles::bruteForceDelayMargin(-0.1, -1.0, 3.0, 0.1, 60.0);
    if (!(margin < 2.0)) return fmtBool(false, "companion margin not below 2 s");
    LmiProblem unstable;
    unstable.state = (Matrix(1, 1) << -0.1).finished();
    unstable.delay = (Matrix(1, 1) << -1.0).finished();
    unstable.delayBound = 2.0;
    unstable.derivativeBound = 0.1;
    const auto notFound = searchCertificate(unstable);
    std::ostringstream oss;
    oss << "stable margin " << found.certificate.margin << ", companion divergence threshold "
        << margin << " s, search above it "
        << (notFound.feasible ? "FALSELY certified" : "inconclusive");
    return fmtBool(!notFound.feasible, oss.str());
  });

  criterion(11, "two executions of the demo produce byte-identical trace.csv", [] {
    const auto config = demoConfig("demo_recovery.json");
    const auto dirA = std::filesystem::temp_directory_path() / "platoon_accept_a";
    const auto dirB = std::filesystem::temp_directory_path() / "platoon_accept_b";
    std::filesystem::remove_all(dirA);
    std::filesystem::remove_all(dirB);
    exportTrace(run(config), dirA.string());
    exportTrace(run(config), dirB.string());
    const bool identical = slurp(dirA / "trace.csv") == slurp(dirB / "trace.csv") &&
                           !slurp(dirA / "trace.csv").empty();
    return fmtBool(identical, identical ? "byte-identical" : "traces differ");
  });

  if (gFailures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", gFailures);
  }
  return gFailures;
}
