#include "aeroalloc/allocator.hpp"
#include "aeroalloc/tracking.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace aeroalloc;
using Problem = alloc::AllocationProblem<double>;

namespace {

Problem random_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> lam(0.01, 1.0);
  const auto draw = [&](auto m) { return m.unaryExpr([&](double) { return n(rng); }).eval(); };
  Problem p;
  p.baseline = draw(Wrench());
  p.effectiveness = draw(ControlMatrix());
  p.target = draw(Wrench());
  p.u_prev = draw(Control());
  p.u_trim = draw(Control());
  p.lambda0 = lam(rng);
  p.lambda1 = lam(rng);
  return p;
}

}  // namespace

TEST(NormalEquations, DampingOnlyLimit) {
  Problem p;
  p.lambda0 = 1.0;
  p.lambda1 = 0.0;
  p.u_trim = Control(1, -2, 3, -4);
  const auto eq = alloc::build_normal_equations(p);
  EXPECT_EQ(eq.Q, (2.0 * Eigen::Matrix4d::Identity()).eval());
  EXPECT_EQ(eq.c, 2.0 * p.u_trim);
  EXPECT_TRUE(alloc::solve(p).u_star.isApprox(p.u_trim, 1e-15));
}

TEST(NormalEquations, SmoothnessOnlyLimit) {
  Problem p;
  p.lambda0 = 0.0;
  p.lambda1 = 1.0;
  p.u_prev = Control(0.5, 0.25, -7, 3);
  EXPECT_TRUE(alloc::solve(p).u_star.isApprox(p.u_prev, 1e-15));
}

TEST(NormalEquations, MatchesHandMultiplication) {
  auto p = random_problem(1);
  p.lambda0 = p.lambda1 = 0.1;
  const auto eq = alloc::build_normal_equations(p);
  const auto& B = p.effectiveness;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double btb = 0.0;
      for (int i = 0; i < 6; ++i) btb += B(i, r) * B(i, c);
      EXPECT_NEAR(eq.Q(r, c), 2.0 * (btb + (r == c ? 0.2 : 0.0)), 1e-13);
    }
    double bt = 0.0;
    for (int i = 0; i < 6; ++i) bt += B(i, r) * (p.target(i) - p.baseline(i));
    EXPECT_NEAR(eq.c(r), 2.0 * (bt + 0.1 * p.u_prev(r) + 0.1 * p.u_trim(r)), 1e-13);
  }
}

TEST(NormalEquations, RejectsNonConvexWeights) {
  Problem p;
  p.lambda0 = p.lambda1 = 0.0;
  EXPECT_THROW(alloc::build_normal_equations(p), NotConvexError);
  p.lambda0 = -0.5;
  p.lambda1 = 0.2;
  EXPECT_THROW(alloc::build_normal_equations(p), InvalidParameter);
}

TEST(Solve, RejectsNonFiniteInputs) {
  auto p = random_problem(2);
  p.effectiveness(3, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(alloc::solve(p), NumericalError);
  p = random_problem(2);
  p.target(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(alloc::solve(p), NumericalError);
}

TEST(Solve, ZeroResidualFixedPoint) {
  auto p = random_problem(3);
  p.target = p.baseline;
  p.u_prev.setZero();
  p.u_trim.setZero();
  EXPECT_TRUE(alloc::solve(p).u_star.isZero(1e-15));
}

TEST(Solve, MatchesIterativeMinimizer) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = random_problem(seed);
    const auto sol = alloc::solve(p);
    EXPECT_LT((sol.u_star - oracle::descend(p)).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed;
    EXPECT_TRUE(alloc::pd_certificate(alloc::build_normal_equations(p).Q, p.lambda0 + p.lambda1));
  }
}

TEST(Solve, FirstOrderOptimalityProbe) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_problem(seed + 500);
    const auto sol = alloc::solve(p);
    EXPECT_DOUBLE_EQ(sol.objective_value, alloc::objective(p, sol.u_star));
    for (int j = 0; j < 4; ++j) {
      for (double sgn : {-1.0, 1.0}) {
        const Control probe = sol.u_star + sgn * 1e-3 * Control::Unit(j);
        EXPECT_LE(sol.objective_value, alloc::objective(p, probe));
      }
    }
  }
}

TEST(Solve, IsBitwiseRepeatable) {
  const auto p = random_problem(9);
  EXPECT_EQ(alloc::solve(p).u_star, alloc::solve(p).u_star);
}

TEST(Solve, ShiftCovariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_problem(seed + 100);
    const Control d(1.5, -0.5, 2.0, 0.25);
    auto q = p;
    q.target = p.target + p.effectiveness * d;
    q.u_prev = p.u_prev + d;
    q.u_trim = p.u_trim + d;
    EXPECT_TRUE((alloc::solve(q).u_star - alloc::solve(p).u_star - d).isZero(1e-10));
  }
}

TEST(Solve, ClampsAfterTheSolve) {
  Problem p;
  p.lambda0 = 1.0;
  p.lambda1 = 0.0;
  p.u_trim = Control(40, -30, 10, 0);
  const auto sol = alloc::solve(p);
  EXPECT_TRUE(sol.u_star.isApprox(p.u_trim, 1e-14));
  EXPECT_EQ(sol.u_applied(0), 25.0);
  EXPECT_EQ(sol.u_applied(1), -25.0);
  EXPECT_NEAR(sol.u_applied(2), 10.0, 1e-13);
  EXPECT_TRUE(sol.clamped[0] && sol.clamped[1]);
  EXPECT_FALSE(sol.clamped[2] || sol.clamped[3]);
  EXPECT_TRUE(sol.any_clamped());
}

TEST(PdCertificate, RejectsAsymmetricAndSmallEigenvalues) {
  Eigen::Matrix4d Q = 2.0 * Eigen::Matrix4d::Identity();
  EXPECT_TRUE(alloc::pd_certificate(Q, 1.0));
  EXPECT_FALSE(alloc::pd_certificate(Q, 1.5));
  Q(0, 1) = 0.3;
  EXPECT_FALSE(alloc::pd_certificate(Q, 0.5));
}

namespace {

// Static plant: the true wrench is A + B u with fixed (A, B); the model knows
// them exactly.
class StaticPlant : public alloc::TrackingEnvironment {
 public:
  StaticPlant(Wrench a, ControlMatrix b) : a_(std::move(a)), b_(std::move(b)) {}
  Observation observe(std::size_t, const Control&) override { return Observation::Zero(); }
  Wrench achieved(std::size_t, const Control& u) override { return a_ + b_ * u; }

 private:
  Wrench a_;
  ControlMatrix b_;
};

double rmssd_of(const std::vector<alloc::TrackingStep>& steps) {
  double acc = 0.0;
  for (std::size_t t = 1; t < steps.size(); ++t) acc += (steps[t].u - steps[t - 1].u).squaredNorm();
  return std::sqrt(acc / static_cast<double>(4 * (steps.size() - 1)));
}

}  // namespace

TEST(TrackSequence, ConvergesOnConstantAchievableTarget) {
  const auto p = random_problem(12);
  StaticPlant env(p.baseline, p.effectiveness);
  const Control u_goal(3, -2, 5, 1);
  const std::vector<Wrench> targets(200, p.baseline + p.effectiveness * u_goal);
  alloc::TrackingConfig cfg;
  cfg.lambda0 = 0.0;
  cfg.lambda1 = 0.5;
  const auto model = [&](const Observation&, const Control&) {
    return alloc::LocalAffine{p.baseline, p.effectiveness};
  };
  const auto steps = alloc::track_sequence(model, targets, env, cfg);
  ASSERT_EQ(steps.size(), 200u);
  for (std::size_t t = 1; t < steps.size(); ++t) EXPECT_LE(steps[t].tracking_error, steps[t - 1].tracking_error + 1e-12);
  EXPECT_LT(steps.back().tracking_error, 1e-8);
  EXPECT_TRUE(steps.back().u.isApprox(u_goal, 1e-8));
}

TEST(TrackSequence, LargerSmoothnessWeightLowersRmssd) {
  const auto p = random_problem(13);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<Wrench> targets;
  for (int t = 0; t < 300; ++t) targets.push_back(p.baseline + p.effectiveness * Control(n(rng), n(rng), n(rng), n(rng)));
  const auto model = [&](const Observation&, const Control&) {
    return alloc::LocalAffine{p.baseline, p.effectiveness};
  };
  double prev = std::numeric_limits<double>::infinity();
  for (double l1 : {0.01, 0.1, 1.0, 10.0}) {
    StaticPlant env(p.baseline, p.effectiveness);
    alloc::TrackingConfig cfg;
    cfg.lambda1 = l1;
    const double r = rmssd_of(alloc::track_sequence(model, targets, env, cfg));
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(TrackSequence, HaltsOnNonFiniteModel) {
  StaticPlant env(Wrench::Zero(), ControlMatrix::Zero());
  const std::vector<Wrench> targets(3, Wrench::Zero());
  const auto model = [](const Observation&, const Control&) {
    return alloc::LocalAffine{Wrench::Constant(std::numeric_limits<double>::quiet_NaN()), ControlMatrix::Zero()};
  };
  EXPECT_THROW(alloc::track_sequence(model, targets, env, {}), NumericalError);
}

TEST(TrackingLog, HeaderAndClampFlags) {
  alloc::TrackingStep s;
  s.t = 3;
  s.target = s.predicted = s.achieved = Wrench::Zero();
  s.u = Control(25, 0, 0, -25);
  s.clamped = {true, false, false, true};
  std::ostringstream os;
  const std::vector<alloc::TrackingStep> steps{s};
  alloc::write_tracking_log(os, steps);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find(',')), "t");
  EXPECT_NE(text.find("target_Fx"), std::string::npos);
  EXPECT_NE(text.find("achieved_Tz"), std::string::npos);
  EXPECT_NE(text.find("clamped_flags"), std::string::npos);
  EXPECT_NE(text.find(",1001"), std::string::npos);
}
