#pragma once

// Five-hole probe calibration.
//
// Tap pressures are normalized into range-relative coefficients
// Cp_i = (p_max - p_i) / (p_max - p_min), which depend mainly on flow
// direction. A network maps the five coefficients to a dynamic-pressure
// correction Cd = q / dp and the flow angles; airspeed follows from
// Va = sqrt(2 dp Cd / rho).

#include "aeroalloc/nncore.hpp"
#include "aeroalloc/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aeroalloc::probe {

using Network = nn::Network<double>;

inline constexpr double kDefaultNoFlowThreshold = 1e-6;  // Pa

struct NormalizedPressures {
  Eigen::Matrix<double, 5, 1> cp;
  double delta_p = 0.0;  // Pa
};

struct CalibrationOutput {
  double cd = 0.0;
  double alpha = 0.0;  // deg
  double beta = 0.0;   // deg
};

/// Throws NoFlowError when the tap spread does not exceed `epsilon_dp`.
NormalizedPressures normalize(const ProbePressures& p, double epsilon_dp = kDefaultNoFlowThreshold);

/// Cd = (rho Va^2 / 2) / dp.
double pressure_correction(double airspeed, double delta_p, AirDensity rho);

double reconstruct_airspeed(double cd, double delta_p, AirDensity rho);

CalibrationOutput calibrate(const Network& model, const NormalizedPressures& np);

FlowState estimate_flow(const Network& model, const ProbePressures& p, AirDensity rho,
                        double epsilon_dp = kDefaultNoFlowThreshold);

struct CalibrationSample {
  ProbePressures pressures;
  FlowState truth;
};

struct CalibrationTrainConfig {
  std::vector<int> hidden{32, 32};
  int epochs = 600;
  int batch_size = 32;
  double learning_rate = 3e-3;
  double final_learning_rate = 1e-4;  // geometric decay target
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Sort samples into a canonical order first, so the result does not
  /// depend on the order in which the dataset was supplied.
  bool canonical_order = false;
  AirDensity rho{};
  double epsilon_dp = kDefaultNoFlowThreshold;
};

/// Regression targets (Cd, alpha, beta) of a sample, Cd from its own tap spread.
Eigen::Vector3d calibration_target(const CalibrationSample& sample, AirDensity rho,
                                   double epsilon_dp = kDefaultNoFlowThreshold);

/// Mean squared error over every output of `model` against `targets`
/// (columns are samples). Fills `grad` when non-null. This is the batch
/// objective of train_calibration, which applies it to standardized targets.
double regression_loss(const Network& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       nn::GradientTape<double>* grad = nullptr);

struct CalibrationTrainResult {
  Network model;
  std::vector<double> loss_history;  // per-epoch MSE on (Cd, alpha, beta)
  std::size_t skipped = 0;           // degenerate no-flow samples
};

CalibrationTrainResult train_calibration(std::span<const CalibrationSample> dataset,
                                         const CalibrationTrainConfig& config);

}  // namespace aeroalloc::probe
