#include "aeroalloc/plant.hpp"
#include "aeroalloc/probe.hpp"
#include "aeroalloc/protocol.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace aeroalloc;
using probe::CalibrationSample;
using probe::CalibrationTrainConfig;

namespace {

ProbePressures taps(double a, double b, double c, double d, double e) { return (ProbePressures() << a, b, c, d, e).finished(); }

std::vector<CalibrationSample> grid_samples(const plant::Plant& plant, int probe, int repeats, std::uint64_t seed) {
  plant::CalibrationProtocol grid;
  grid.repeats = repeats;
  const auto records = plant::generate_calibration(plant, grid, seed);
  std::vector<CalibrationSample> out;
  for (const auto& r : records[static_cast<std::size_t>(probe)]) out.push_back({r.pressures, r.label});
  return out;
}

class TrainedProbe : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    plant_ = new plant::Plant();
    CalibrationTrainConfig cfg;
    cfg.seed = 42;
    model_ = new probe::Network(probe::train_calibration(grid_samples(*plant_, 0, 8, 1), cfg).model);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete plant_;
  }

  FlowState estimate(double va, double alpha, double beta) const {
    plant::Rng rng(99);
    return probe::estimate_flow(*model_, plant_->probe_pressures({va, alpha, beta}, 0, &rng), AirDensity{});
  }

  static plant::Plant* plant_;
  static probe::Network* model_;
};

plant::Plant* TrainedProbe::plant_ = nullptr;
probe::Network* TrainedProbe::model_ = nullptr;

}  // namespace

TEST(Normalize, DirectEvaluation) {
  const auto np = probe::normalize(taps(100, 80, 60, 40, 20));
  EXPECT_DOUBLE_EQ(np.delta_p, 80.0);
  const double want[5] = {0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(np.cp(i), want[i]);
}

TEST(Normalize, EqualTapsAreNoFlow) {
  EXPECT_THROW(probe::normalize(taps(5, 5, 5, 5, 5)), NoFlowError);
  EXPECT_THROW(probe::normalize(taps(5, 5, 5, 5, 5 + 5e-7)), NoFlowError);
}

TEST(Normalize, ExtremesAreExactlyZeroAndOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-500, 500);
  for (int k = 0; k < 200; ++k) {
    const auto np = probe::normalize(taps(u(rng), u(rng), u(rng), u(rng), u(rng)));
    EXPECT_EQ(np.cp.minCoeff(), 0.0);
    EXPECT_EQ(np.cp.maxCoeff(), 1.0);
    EXPECT_GT(np.delta_p, 0.0);
  }
}

TEST(Normalize, GaugeInvariantOnPlantPressures) {
  const plant::Plant plant;
  plant::Rng rng(5);
  const auto p = plant.probe_pressures({11.0, 4.0, -6.0}, 1, &rng);
  const auto base = probe::normalize(p);
  for (double c : {-101325.0, -3.5, 0.0, 17.25, 2e4}) {
    const auto shifted = probe::normalize((p.array() + c).matrix());
    EXPECT_TRUE(shifted.cp.isApprox(base.cp, 1e-9));
    EXPECT_NEAR(shifted.delta_p, base.delta_p, 1e-9 * base.delta_p);
  }
}

TEST(Normalize, ScaleCovariant) {
  const auto p = taps(310.0, 120.5, 95.0, 140.25, 60.0);
  const auto base = probe::normalize(p);
  for (double s : {0.25, 2.0, 1024.0}) {
    const auto scaled = probe::normalize(s * p);
    EXPECT_EQ(scaled.cp, base.cp);
    EXPECT_EQ(scaled.delta_p, s * base.delta_p);
  }
  const auto odd = probe::normalize(3.7 * p);
  EXPECT_TRUE(odd.cp.isApprox(base.cp, 1e-14));
  EXPECT_NEAR(odd.delta_p, 3.7 * base.delta_p, 1e-12);
}

TEST(Airspeed, DirectEvaluation) {
  EXPECT_DOUBLE_EQ(probe::reconstruct_airspeed(1.0, 61.25, AirDensity{1.225}), 10.0);
  EXPECT_NEAR(probe::reconstruct_airspeed(0.5, 100.0, AirDensity{1.25}), std::sqrt(80.0), 1e-12);
  EXPECT_NEAR(std::sqrt(80.0), 8.9443, 1e-4);
}

TEST(Airspeed, RoundTripAtTwelve) {
  const double cd = probe::pressure_correction(12.0, 37.0, AirDensity{});
  EXPECT_NEAR(probe::reconstruct_airspeed(cd, 37.0, AirDensity{}), 12.0, 4 * 12.0 * 2.2e-16);
}

TEST(Airspeed, RoundTripOnRandomTriples) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> va(0.5, 40), dp(1, 2000), rho(0.5, 1.5);
  for (int k = 0; k < 1000; ++k) {
    const double v = va(rng), d = dp(rng);
    const AirDensity r{rho(rng)};
    const double back = probe::reconstruct_airspeed(probe::pressure_correction(v, d, r), d, r);
    EXPECT_LE(std::abs(back - v), 4 * std::numeric_limits<double>::epsilon() * v);
  }
}

TEST(Airspeed, RejectsNonPositiveInputs) {
  EXPECT_THROW(probe::reconstruct_airspeed(0.0, 10.0, AirDensity{}), InvalidParameter);
  EXPECT_THROW(probe::reconstruct_airspeed(-1.0, 10.0, AirDensity{}), InvalidParameter);
  EXPECT_THROW(probe::reconstruct_airspeed(1.0, 0.0, AirDensity{}), InvalidParameter);
  EXPECT_THROW(probe::reconstruct_airspeed(1.0, 10.0, AirDensity{0.0}), InvalidParameter);
}

TEST(Calibrate, ZeroModelReturnsOutputBias) {
  auto net = probe::Network::zeros(std::vector<int>{5, 32, 32, 3});
  net.mutable_layers().back().bias = Eigen::Vector3d(0.9, -1.0, 2.5);
  const auto out = probe::calibrate(net, probe::normalize(taps(100, 80, 60, 40, 20)));
  EXPECT_EQ(out.cd, 0.9);
  EXPECT_EQ(out.alpha, -1.0);
  EXPECT_EQ(out.beta, 2.5);
}

TEST(Calibrate, RejectsWrongWidths) {
  const auto net = probe::Network::zeros(std::vector<int>{4, 3});
  EXPECT_THROW(probe::calibrate(net, probe::normalize(taps(100, 80, 60, 40, 20))), DimensionError);
}

TEST(EstimateFlow, StillAirSurfacesNoFlow) {
  const plant::Plant plant;
  const auto p = plant.probe_pressures({0.0, 0.0, 0.0}, 0);
  const auto net = probe::Network::zeros(std::vector<int>{5, 3});
  EXPECT_THROW(probe::estimate_flow(net, p, AirDensity{}), NoFlowError);
}

TEST(RegressionLoss, GradientMatchesCentralDifferences) {
  const plant::Plant plant;
  const auto samples = grid_samples(plant, 1, 1, 3);
  Eigen::MatrixXd X(5, 12), T(3, 12);
  for (int k = 0; k < 12; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k * 6)];
    X.col(k) = probe::normalize(s.pressures).cp;
    T.col(k) = probe::calibration_target(s, AirDensity{});
  }
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto net = probe::Network::glorot(std::vector<int>{5, 8, 8, 3}, seed);
    nn::GradientTape<double> grad;
    probe::regression_loss(net, X, T, &grad);
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double fd = oracle::central_difference([&] { return probe::regression_loss(net, X, T); }, net.parameter(i));
      EXPECT_LT(oracle::relative_error(grad.value(i), fd), 1e-4) << "parameter " << i;
    }
  }
}

TEST(TrainCalibration, RejectsEmptyAndDegenerateData) {
  EXPECT_THROW(probe::train_calibration({}, {}), DatasetError);
  const std::vector<CalibrationSample> still(4, CalibrationSample{taps(7, 7, 7, 7, 7), {0, 0, 0}});
  EXPECT_THROW(probe::train_calibration(still, {}), DatasetError);
}

TEST(TrainCalibration, SkipsDegenerateSamples) {
  const plant::Plant plant;
  auto samples = grid_samples(plant, 0, 1, 4);
  samples.push_back({taps(3, 3, 3, 3, 3), {0, 0, 0}});
  CalibrationTrainConfig cfg;
  cfg.epochs = 2;
  EXPECT_EQ(probe::train_calibration(samples, cfg).skipped, 1u);
}

TEST(TrainCalibration, MemorizesSingleSample) {
  const plant::Plant plant;
  const CalibrationSample s{plant.probe_pressures({10.0, 3.0, -2.0}, 0), {10.0, 3.0, -2.0}};
  const std::vector<CalibrationSample> data(16, s);
  CalibrationTrainConfig cfg;
  cfg.epochs = 300;
  const auto result = probe::train_calibration(data, cfg);
  EXPECT_LT(result.loss_history.back(), 1e-6);
  const auto est = probe::estimate_flow(result.model, s.pressures, AirDensity{});
  EXPECT_NEAR(est.airspeed, 10.0, 1e-3);
  EXPECT_NEAR(est.alpha, 3.0, 1e-3);
}

TEST(TrainCalibration, LossDecreasesOverEpochs) {
  const plant::Plant plant;
  CalibrationTrainConfig cfg;
  cfg.epochs = 60;
  const auto result = probe::train_calibration(grid_samples(plant, 0, 2, 6), cfg);
  ASSERT_EQ(result.loss_history.size(), 60u);
  EXPECT_LT(result.loss_history.back(), 0.1 * result.loss_history.front());
}

TEST(TrainCalibration, CanonicalOrderIgnoresSuppliedOrder) {
  const plant::Plant plant;
  auto samples = grid_samples(plant, 1, 1, 7);
  CalibrationTrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 11;
  cfg.canonical_order = true;
  const auto a = probe::train_calibration(samples, cfg).model;
  std::mt19937_64 rng(1);
  std::shuffle(samples.begin(), samples.end(), rng);
  EXPECT_EQ(probe::train_calibration(samples, cfg).model, a);
  EXPECT_EQ(probe::train_calibration(samples, cfg).model, a);
}

TEST_F(TrainedProbe, GridCentreWithinOneDegreeAndThreePercent) {
  const auto est = estimate(10.0, 0.0, 0.0);
  EXPECT_NEAR(est.alpha, 0.0, 1.0);
  EXPECT_NEAR(est.beta, 0.0, 1.0);
  EXPECT_NEAR(est.airspeed, 10.0, 0.3);
}

TEST_F(TrainedProbe, GridCornerWithinOneDegree) {
  const auto est = estimate(12.0, 10.0, -10.0);
  EXPECT_NEAR(est.alpha, 10.0, 1.0);
  EXPECT_NEAR(est.beta, -10.0, 1.0);
}

TEST_F(TrainedProbe, OffGridWithinTwoDegrees) {
  const auto est = estimate(9.0, 2.5, -7.5);
  EXPECT_NEAR(est.alpha, 2.5, 2.0);
  EXPECT_NEAR(est.beta, -7.5, 2.0);
}

TEST_F(TrainedProbe, AnglesDependOnlyOnCoefficients) {
  const auto p = plant_->probe_pressures({10.0, 4.0, 3.0}, 0);
  const auto base = probe::calibrate(*model_, probe::normalize(p));
  for (double s : {0.5, 2.0, 8.0}) {
    const auto out = probe::calibrate(*model_, probe::normalize(s * p));
    EXPECT_EQ(out.alpha, base.alpha);
    EXPECT_EQ(out.beta, base.beta);
  }
}
