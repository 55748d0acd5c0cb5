#include "platoon/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace platoon {

void LmiProblem::validate() const {
  if (state.rows() != state.cols() || delay.rows() != delay.cols() ||
      state.rows() != delay.rows()) {
    throw ValidationError("lmi problem: state/delay matrices must be square and same size");
  }
  if (!(delayBound > 0.0)) throw ValidationError("lmi problem: delay bound must be positive");
  if (!(derivativeBound > 0.0) || !(derivativeBound < 1.0)) {
    throw ValidationError("lmi problem: derivative bound must lie in (0, 1)");
  }
}

namespace {

void requireSymmetric(const Matrix& m, const char* name, double tol) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(name) + " must be square");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw ValidationError(std::string(name) + " must be symmetric within " +
                          std::to_string(tol));
  }
}

}  // namespace

Matrix assembleStabilityMatrix(const LmiProblem& problem, const Matrix& derivWeight,
                               const Matrix& delayWeight, const Matrix& stateWeight) {
  problem.validate();
  const auto m = problem.state.rows();
  if (derivWeight.rows() != m || delayWeight.rows() != m || stateWeight.rows() != m) {
    throw ValidationError("certificate weights must match the system dimension");
  }
  requireSymmetric(derivWeight, "derivative weight", 1e-12);
  requireSymmetric(delayWeight, "delay weight", 1e-12);
  requireSymmetric(stateWeight, "state weight", 1e-12);

  const Matrix& a = problem.state;
  const Matrix& b = problem.delay;
  const double u2 = problem.delayBound * problem.delayBound;

  const Matrix qa = derivWeight * a;
  const Matrix qb = derivWeight * b;
  const Matrix topLeft = u2 * a.transpose() * qa - derivWeight + delayWeight +
                         a.transpose() * stateWeight + stateWeight * a;
  const Matrix cross = u2 * a.transpose() * qb + stateWeight * b;
  const Matrix midMid =
      u2 * b.transpose() * qb - (1.0 - problem.derivativeBound) * delayWeight;

  Matrix out = Matrix::Zero(3 * m, 3 * m);
  out.block(0, 0, m, m) = topLeft;
  out.block(0, m, m, m) = cross;
  out.block(m, 0, m, m) = cross.transpose();
  out.block(m, m, m, m) = midMid;
  out.block(0, 2 * m, m, m) = derivWeight;
  out.block(2 * m, 0, m, m) = derivWeight;
  out.block(2 * m, 2 * m, m, m) = -derivWeight;
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

DefinitenessResult isNegativeDefinite(const Matrix& m, double tol) {
  if (!m.allFinite()) throw ValidationError("definiteness check: non-finite entries");
  requireSymmetric(m, "definiteness input", 1e-10);
  const Matrix sym = 0.5 * (m + m.transpose());
  const auto dim = sym.rows();

  DefinitenessResult result;
  Eigen::LLT<Matrix> llt(Matrix(-sym - tol * Matrix::Identity(dim, dim)));
  result.negativeDefinite = llt.info() == Eigen::Success;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw ContractViolation("definiteness check: eigensolver failed");
  }
  result.margin = eig.eigenvalues().maxCoeff();
  if (result.negativeDefinite != (result.margin < -tol)) {
    // borderline factorization; the eigenvalue settles it
    result.negativeDefinite = result.margin < -tol;
  }
  return result;
}

bool isPositiveDefinite(const Matrix& m, double tol) {
  const auto res = isNegativeDefinite(Matrix(-m), tol);
  return res.negativeDefinite;
}

Matrix solveLyapunov(const Matrix& state) {
  const auto m = state.rows();
  const Matrix eye = Matrix::Identity(m, m);
  Matrix system = Matrix::Zero(m * m, m * m);
  // vec(A' H) = (I kron A') vec(H), vec(H A) = (A' kron I) vec(H)
  for (Eigen::Index bi = 0; bi < m; ++bi) {
    for (Eigen::Index bj = 0; bj < m; ++bj) {
      if (bi == bj) system.block(bi * m, bj * m, m, m) += state.transpose();
      system.block(bi * m, bj * m, m, m) += state(bj, bi) * eye;
    }
  }
  Vector rhs = Vector::Zero(m * m);
  for (Eigen::Index i = 0; i < m; ++i) rhs(i * m + i) = -1.0;
  const Vector sol = system.fullPivLu().solve(rhs);
  Matrix h(m, m);
  for (Eigen::Index j = 0; j < m; ++j) h.col(j) = sol.segment(j * m, m);
  return 0.5 * (h + h.transpose()).eval();
}

namespace {

struct Candidate {
  Matrix derivBase;
  Matrix delayBase;
  Matrix stateBase;
};

double evaluate(const LmiProblem& problem, const Candidate& c, double q, double s, double p) {
  const Matrix lmi =
      assembleStabilityMatrix(problem, q * c.derivBase, s * c.delayBase, p * c.stateBase);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lmi, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

CertificateSearchResult searchCertificate(const LmiProblem& problem,
                                          const SearchOptions& options) {
  problem.validate();
  const auto m = problem.state.rows();
  const Matrix eye = Matrix::Identity(m, m);

  std::vector<Candidate> candidates;
  candidates.push_back({eye, eye, eye});

  const Matrix lyap = solveLyapunov(problem.state);
  if (lyap.allFinite() && isPositiveDefinite(lyap, 1e-12)) {
    candidates.push_back({eye, eye, lyap});
    // damp the delay-energy terms; helps when the delay bound is large
    candidates.push_back({eye / (1.0 + problem.delayBound * problem.delayBound), eye, lyap});
  }

  std::mt19937_64 rng(options.seed ^ static_cast<std::uint64_t>(m));
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(candidates.size()) < options.budget) {
    const auto gram = [&]() {
      Matrix r(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) r(i, j) = gauss(rng);
      }
      Matrix g = r.transpose() * r / static_cast<double>(m);
      g += 0.1 * eye;
      return g;
    };
    candidates.push_back({gram(), gram(), gram()});
  }

  CertificateSearchResult result;
  result.bestMargin = std::numeric_limits<double>::infinity();

  constexpr std::array<double, 5> factors{0.1, 0.316227766016838, 1.0, 3.16227766016838, 10.0};
  for (const auto& cand : candidates) {
    double q = 1.0, s = 1.0, p = 1.0;
    double best = evaluate(problem, cand, q, s, p);
    ++result.evaluations;
    // coordinate descent over multiplicative scale factors
    for (int round = 0; round < 8 && best >= -options.tol; ++round) {
      bool improved = false;
      for (int axis = 0; axis < 3; ++axis) {
        double bestFactor = 1.0;
        for (const double f : factors) {
          if (f == 1.0) continue;
          const double qq = axis == 0 ? q * f : q;
          const double ss = axis == 1 ? s * f : s;
          const double pp = axis == 2 ? p * f : p;
          const double margin = evaluate(problem, cand, qq, ss, pp);
          ++result.evaluations;
          if (margin < best) {
            best = margin;
            bestFactor = f;
            improved = true;
          }
        }
        if (axis == 0) q *= bestFactor;
        if (axis == 1) s *= bestFactor;
        if (axis == 2) p *= bestFactor;
      }
      if (!improved) break;
    }
    result.bestMargin = std::min(result.bestMargin, best);
    if (best < -options.tol) {
      LmiCertificate cert;
      cert.derivWeight = q * cand.derivBase;
      cert.delayWeight = s * cand.delayBase;
      cert.stateWeight = p * cand.stateBase;
      cert.margin = best;
      // re-verify before returning
      const bool weightsPd = isPositiveDefinite(cert.derivWeight, options.tol) &&
                             isPositiveDefinite(cert.delayWeight, options.tol) &&
                             isPositiveDefinite(cert.stateWeight, options.tol);
      const auto check = isNegativeDefinite(
          assembleStabilityMatrix(problem, cert.derivWeight, cert.delayWeight,
                                  cert.stateWeight),
          options.tol);
      if (weightsPd && check.negativeDefinite) {
        cert.margin = check.margin;
        result.feasible = true;
        result.certificate = cert;
        return result;
      }
    }
  }
  result.note =
      "inconclusive: no certificate found within budget (not a proof of infeasibility)";
  return result;
}

}  // namespace platoon
