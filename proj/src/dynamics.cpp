#include "platoon/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace platoon {

void PlatoonModel::validate(int leader) const {
  std::ostringstream issues;
  if (n < 2) issues << "vehicle count must be at least 2; ";
  if (!(gamma > 0.0)) issues << "gamma must be positive; ";
  if (spacings.size() != n) {
    issues << "spacings length " << spacings.size() << " != vehicle count " << n << "; ";
  } else if (leader >= 0 && leader < n && spacings(leader) != 0.0) {
    issues << "reference vehicle must have zero spacing; ";
  }
  if (localA(0, 0) != 0.0 || localA(0, 1) != 1.0 || localB(0) != 0.0 || localB(1) != 1.0) {
    issues << "local feedback must keep the kinematic row (A row 0 = [0,1], B = [0,1]); ";
  }
  if (!issues.str().empty()) throw ValidationError("invalid platoon model: " + issues.str());
}

StackedState errorCoordinates(const std::vector<std::pair<double, double>>& absStates,
                              int leader, const Vector& spacings) {
  const int n = static_cast<int>(absStates.size());
  if (leader < 0 || leader >= n) throw ValidationError("errorCoordinates: leader out of range");
  if (spacings.size() != n) throw ValidationError("errorCoordinates: spacings length mismatch");
  StackedState st;
  st.x.resize(2 * n);
  const auto [sLead, vLead] = absStates[static_cast<std::size_t>(leader)];
  for (int i = 0; i < n; ++i) {
    st.x(i) = absStates[static_cast<std::size_t>(i)].first - sLead - spacings(i);
    st.x(n + i) = absStates[static_cast<std::size_t>(i)].second - vLead;
  }
  return st;
}

namespace {

Matrix stateBlocks(double gamma, const Matrix& coupling) {
  const int m = static_cast<int>(coupling.rows());
  Matrix out = Matrix::Zero(2 * m, 2 * m);
  out.topRightCorner(m, m) = Matrix::Identity(m, m);
  out.bottomLeftCorner(m, m) = -coupling;
  out.bottomRightCorner(m, m) = -gamma * coupling;
  return out;
}

Matrix delayBlocks(double gamma, const Matrix& coupling) {
  const int m = static_cast<int>(coupling.rows());
  Matrix out = Matrix::Zero(2 * m, 2 * m);
  out.bottomLeftCorner(m, m) = -coupling;
  out.bottomRightCorner(m, m) = -gamma * coupling;
  return out;
}

}  // namespace

Matrix buildNominal(const PlatoonModel& model, const Matrix& coupling) {
  return stateBlocks(model.gamma, coupling);
}

std::pair<Matrix, Matrix> buildAttacked(const PlatoonModel& model, const Matrix& fresh,
                                        const Matrix& delayCoupling) {
  return {stateBlocks(model.gamma, fresh), delayBlocks(model.gamma, delayCoupling)};
}

std::pair<Matrix, Matrix> buildReduced(const PlatoonModel& model, const Matrix& reducedFresh,
                                       const Matrix& reducedDelayed) {
  return {stateBlocks(model.gamma, reducedFresh), delayBlocks(model.gamma, reducedDelayed)};
}

Matrix localFeedbackBlock(const PlatoonModel& model, int m) {
  Matrix out = Matrix::Zero(2 * m, 2 * m);
  out.bottomLeftCorner(m, m) = model.localA(1, 0) * Matrix::Identity(m, m);
  out.bottomRightCorner(m, m) = model.localA(1, 1) * Matrix::Identity(m, m);
  return out;
}

StateHistory::StateHistory(double span, double step) : span_(span), step_(step) {
  if (!(span_ > 0.0) || !(step_ > 0.0)) {
    throw ValidationError("history: span and step must be positive");
  }
}

void StateHistory::initializeConstant(double t0, const Vector& x) {
  samples_.clear();
  samples_.emplace_back(t0 - span_ - 2.0 * step_, x);
  samples_.emplace_back(t0, x);
}

void StateHistory::append(double t, const Vector& x) {
  if (!samples_.empty() && t <= samples_.back().first) {
    throw ContractViolation("history: sample times must be strictly increasing");
  }
  samples_.emplace_back(t, x);
  const double cutoff = t - span_ - 2.0 * step_;
  while (samples_.size() > 2 && samples_[1].first <= cutoff) {
    samples_.pop_front();
  }
}

Vector StateHistory::at(double t) const {
  if (samples_.empty()) throw ContractViolation("history: empty buffer");
  if (t < samples_.front().first) {
    throw ContractViolation("history: requested time " + std::to_string(t) +
                            " is older than the buffered span");
  }
  if (t >= samples_.back().first) {
    if (samples_.size() == 1 || t == samples_.back().first) return samples_.back().second;
    // extrapolate from the last segment (only reachable for sub-step delays)
    const auto& [t0, x0] = samples_[samples_.size() - 2];
    const auto& [t1, x1] = samples_.back();
    const double w = (t - t0) / (t1 - t0);
    return x0 + w * (x1 - x0);
  }
  // binary search for the segment containing t
  std::size_t lo = 0, hi = samples_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (samples_[mid].first <= t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const auto& [t0, x0] = samples_[lo];
  const auto& [t1, x1] = samples_[hi];
  if (t1 == t0) return x1;
  const double w = (t - t0) / (t1 - t0);
  return x0 + w * (x1 - x0);
}

double StateHistory::newestTime() const {
  if (samples_.empty()) throw ContractViolation("history: empty buffer");
  return samples_.back().first;
}

double StateHistory::oldestTime() const {
  if (samples_.empty()) throw ContractViolation("history: empty buffer");
  return samples_.front().first;
}

Trajectory integrateFixedStep(const std::function<Vector(double, const Vector&)>& f,
                              const Vector& x0, double tEnd, double h) {
  if (!(h > 0.0) || !(tEnd > 0.0)) {
    throw ValidationError("integrate: step size and horizon must be positive");
  }
  Trajectory traj;
  traj.h = h;
  const auto steps = static_cast<std::size_t>(std::llround(tEnd / h));
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw DivergenceError("integration diverged at t = " + std::to_string(t + h),
                            t + h);
    }
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory integrateNominal(const Matrix& a, const Vector& x0, double tEnd, double h) {
  return integrateFixedStep([&a](double, const Vector& x) -> Vector { return a * x; }, x0,
                            tEnd, h);
}

Trajectory integrateDelayed(const Matrix& a, const Matrix& aDelay, const Vector& x0,
                            const std::function<double(double)>& delay, double tEnd, double h,
                            double historySpan) {
  if (!(h > 0.0) || !(tEnd > 0.0)) {
    throw ValidationError("integrate: step size and horizon must be positive");
  }
  StateHistory history(historySpan, h);
  history.initializeConstant(0.0, x0);

  const auto f = [&](double t, const Vector& x) -> Vector {
    const double tau = delay(t);
    if (tau == 0.0) return a * x + aDelay * x;
    return a * x + aDelay * history.at(t - tau);
  };

  Trajectory traj;
  traj.h = h;
  const auto steps = static_cast<std::size_t>(std::llround(tEnd / h));
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw DivergenceError("delayed integration diverged at t = " + std::to_string(t + h),
                            t + h);
    }
    history.append(t + h, x);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace platoon
