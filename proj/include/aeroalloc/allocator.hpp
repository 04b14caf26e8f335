#pragma once

// Regularized least-squares control allocation.
//
//   min_u ||y - A - B u||^2 + lambda1 ||u - u_prev||^2 + lambda0 ||u - u_trim||^2
//
// The objective is strictly convex whenever lambda0 + lambda1 > 0, so the
// stationarity condition Q u = c has a unique solution with
//   Q = 2 (B^T B + (lambda0 + lambda1) I)
//   c = 2 (B^T (y - A) + lambda1 u_prev + lambda0 u_trim).

#include "aeroalloc/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>

namespace aeroalloc::alloc {

template <typename Scalar>
struct AllocationProblem {
  Wrench6<Scalar> baseline = Wrench6<Scalar>::Zero();             // A_t
  Effectiveness<Scalar> effectiveness = Effectiveness<Scalar>::Zero();  // B_t
  Wrench6<Scalar> target = Wrench6<Scalar>::Zero();               // y_t
  Control4<Scalar> u_prev = Control4<Scalar>::Zero();
  Control4<Scalar> u_trim = Control4<Scalar>::Zero();
  Scalar lambda0 = Scalar(0.01);  // trim damping
  Scalar lambda1 = Scalar(0.1);   // smoothness
};

template <typename Scalar>
struct NormalEquations {
  Eigen::Matrix<Scalar, 4, 4> Q;
  Control4<Scalar> c;
};

template <typename Scalar>
struct AllocationSolution {
  Control4<Scalar> u_star;     // unconstrained minimizer
  Control4<Scalar> u_applied;  // u_star clamped to the actuator limits
  std::array<bool, 4> clamped{};
  Scalar objective_value{};    // objective at u_star
  Scalar residual_norm{};      // ||y - A - B u_star||

  bool any_clamped() const { return clamped[0] || clamped[1] || clamped[2] || clamped[3]; }
};

template <typename Scalar>
void validate(const AllocationProblem<Scalar>& p) {
  if (p.lambda0 < Scalar(0) || p.lambda1 < Scalar(0))
    throw InvalidParameter("allocation weights must be non-negative");
  if (!(p.lambda0 + p.lambda1 > Scalar(0)))
    throw NotConvexError("lambda0 + lambda1 must be positive for a strictly convex allocation");
  if (!p.baseline.allFinite() || !p.effectiveness.allFinite() || !p.target.allFinite() ||
      !p.u_prev.allFinite() || !p.u_trim.allFinite() || !std::isfinite(p.lambda0) || !std::isfinite(p.lambda1))
    throw NumericalError("allocation problem contains non-finite values");
}

template <typename Scalar>
Scalar objective(const AllocationProblem<Scalar>& p, const Control4<Scalar>& u) {
  const Wrench6<Scalar> r = p.target - p.baseline - p.effectiveness * u;
  return r.squaredNorm() + p.lambda1 * (u - p.u_prev).squaredNorm() + p.lambda0 * (u - p.u_trim).squaredNorm();
}

template <typename Scalar>
NormalEquations<Scalar> build_normal_equations(const AllocationProblem<Scalar>& p) {
  validate(p);
  const auto& B = p.effectiveness;
  NormalEquations<Scalar> eq;
  eq.Q = Scalar(2) * (B.transpose() * B + (p.lambda0 + p.lambda1) * Eigen::Matrix<Scalar, 4, 4>::Identity());
  eq.c = Scalar(2) * (B.transpose() * (p.target - p.baseline) + p.lambda1 * p.u_prev + p.lambda0 * p.u_trim);
  return eq;
}

/// Q is symmetric with smallest eigenvalue at least 2 (lambda0 + lambda1).
template <typename Scalar>
bool pd_certificate(const Eigen::Matrix<Scalar, 4, 4>& Q, Scalar lambda_sum) {
  const Scalar asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(16) * Eigen::NumTraits<Scalar>::epsilon() * std::max(Scalar(1), Q.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 4, 4>> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return false;
  const Scalar floor = Scalar(2) * lambda_sum;
  const Scalar slack = Scalar(64) * Eigen::NumTraits<Scalar>::epsilon() * std::max(Scalar(1), Q.norm());
  return eig.eigenvalues().minCoeff() >= floor - slack;
}

template <typename Scalar>
AllocationSolution<Scalar> solve(const AllocationProblem<Scalar>& p, Scalar limit = Scalar(kActuatorLimitDeg)) {
  const auto eq = build_normal_equations(p);
  Eigen::LLT<Eigen::Matrix<Scalar, 4, 4>> llt(eq.Q);
  if (llt.info() != Eigen::Success) throw NumericalError("allocation normal matrix is not positive definite");

  AllocationSolution<Scalar> sol;
  sol.u_star = llt.solve(eq.c);
  if (!sol.u_star.allFinite()) throw NumericalError("allocation solve produced non-finite command");
  sol.objective_value = objective(p, sol.u_star);
  sol.residual_norm = (p.target - p.baseline - p.effectiveness * sol.u_star).norm();
  for (int j = 0; j < 4; ++j) {
    const Scalar v = sol.u_star(j);
    sol.clamped[static_cast<std::size_t>(j)] = v > limit || v < -limit;
    sol.u_applied(j) = std::clamp(v, -limit, limit);
  }
  return sol;
}

}  // namespace aeroalloc::alloc
