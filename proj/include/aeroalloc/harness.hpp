#pragma once

// Experiment orchestration: dataset files, calibration, variant training,
// evaluation across airspeeds, closed-loop tracking and metric reports.

#include "aeroalloc/dynamics.hpp"
#include "aeroalloc/probe.hpp"
#include "aeroalloc/protocol.hpp"
#include "aeroalloc/sensing.hpp"
#include "aeroalloc/tracking.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aeroalloc::harness {

// ---- file formats ---------------------------------------------------------

/// Header p1,p2,p3,p4,p5,Va,alpha_deg,beta_deg
void write_calibration_csv(const std::filesystem::path& path, const std::vector<plant::CalibrationRecord>& records);
std::vector<probe::CalibrationSample> read_calibration_csv(const std::filesystem::path& path);

/// Header Va0,alpha0,beta0,Va1,alpha1,beta1,ps0..ps6,d_la,d_ra,d_el,d_ru,Fx,Fy,Fz,Tx,Ty,Tz
void write_dynamics_csv(const std::filesystem::path& path, const dynamics::DynamicsDataset& data);
dynamics::DynamicsDataset read_dynamics_csv(const std::filesystem::path& path);

/// Ground-truth tunnel conditions alongside a dynamics file.
void write_conditions_csv(const std::filesystem::path& path, const std::vector<plant::DynamicsRecord>& records);

/// FNV-1a over the serialized samples; identifies a train/test split.
std::string dataset_hash(std::span<const dynamics::DynamicsSample> data);

// ---- metrics --------------------------------------------------------------

struct RmssdReport {
  Control per_input = Control::Zero();
  double average = 0.0;
};

/// Root mean square of successive differences per control input.
RmssdReport rmssd(std::span<const Control> series);

// ---- experiments ----------------------------------------------------------

struct CalibrationMetrics {
  double alpha_rmse = 0.0;     // deg
  double beta_rmse = 0.0;      // deg
  double airspeed_rmse_pct = 0.0;
};

struct CalibrationPair {
  std::array<probe::Network, 2> models;
  std::array<CalibrationMetrics, 2> held_out;
};

/// Trains both probes on the grid and scores them on fresh repeats of it.
CalibrationPair calibrate_probes(const plant::Plant& plant, const plant::CalibrationProtocol& grid,
                                 const probe::CalibrationTrainConfig& cfg, std::uint64_t seed);

CalibrationMetrics score_calibration(const probe::Network& model, const std::vector<plant::CalibrationRecord>& test,
                                     AirDensity rho);

struct TrackingScenario {
  std::vector<plant::TunnelCondition> conditions;
  std::vector<Wrench> targets;
};

/// Stage-I flow at the given airspeed with targets the plant can realize:
/// each target is the noiseless wrench under a slowly varying reference
/// command.
TrackingScenario make_tracking_scenario(const plant::Plant& plant, double airspeed, int steps, std::uint64_t seed);

std::vector<alloc::TrackingStep> run_tracking(const dynamics::WrenchModel& model, const TrackingScenario& scenario,
                                              const SensorSuite& sensors, const alloc::TrackingConfig& cfg,
                                              std::uint64_t seed);

alloc::LocalModel local_model(const dynamics::WrenchModel& model);

struct ExperimentConfig {
  std::uint64_t seed = 7;
  plant::PlantParams plant{};
  dynamics::TrainConfig train{};
  std::vector<dynamics::Variant> variants = dynamics::all_variants();
  double train_speed = 10.0;               // in-distribution reference speed
  std::vector<double> train_speeds{8.0, 10.0, 12.0};  // tunnel speeds in the training split
  std::vector<double> eval_speeds{7.0, 9.0, 10.0, 14.0};
  double track_speed = 14.0;
  int train_samples = 6000;
  int test_samples = 1500;
  int track_steps = 600;
  double lambda0 = 0.01;
  double lambda1 = 0.1;
  bool calibrated_probes = true;
  plant::CalibrationProtocol calibration_grid{};
  probe::CalibrationTrainConfig calibration{};

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct VariantMetrics {
  dynamics::Variant variant = dynamics::Variant::AffineSym;
  double validation_rmse = 0.0;
  std::map<double, double> rmse;             // by airspeed
  std::map<double, Wrench> channel_rmse;     // by airspeed
  double inflation_pct = 0.0;                // track speed vs reference speed
  std::optional<double> symmetry_residual;   // affine variants
  RmssdReport rmssd;
  double tracking_rmse = 0.0;
  Wrench tracking_channel_rmse = Wrench::Zero();
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::string split_hash;
  double train_speed = 10.0;
  std::vector<double> train_speeds;
  double track_speed = 14.0;
  std::array<CalibrationMetrics, 2> calibration{};
  std::vector<VariantMetrics> variants;

  const VariantMetrics& at(dynamics::Variant v) const;
};

/// Everything a suite produced, for callers that want the models too.
struct SuiteArtifacts {
  MetricsReport report;
  std::map<dynamics::Variant, dynamics::WrenchModel> models;
  std::map<dynamics::Variant, std::vector<alloc::TrackingStep>> tracking;
  std::optional<std::array<probe::Network, 2>> calibration;
  TrackingScenario scenario;
};

/// Stage-I training data across the configured tunnel speeds, ordered so
/// that a trailing-block split validates on the tail of every run.
dynamics::DynamicsDataset training_split(const plant::Plant& plant, const SensorSuite& sensors,
                                         const ExperimentConfig& cfg);

/// Held-out Stage-I run at one airspeed; the seed depends only on the
/// experiment seed and the speed.
dynamics::DynamicsDataset test_split(const plant::Plant& plant, const SensorSuite& sensors,
                                     const ExperimentConfig& cfg, double airspeed);

std::uint64_t calibration_seed(const ExperimentConfig& cfg);
std::uint64_t tracking_seed(const ExperimentConfig& cfg);
dynamics::TrainConfig train_config(const ExperimentConfig& cfg);
alloc::TrackingConfig tracking_config(const ExperimentConfig& cfg);
TrackingScenario tracking_scenario(const plant::Plant& plant, const ExperimentConfig& cfg);

/// Trains every configured variant on one shared split and evaluates it.
SuiteArtifacts run_ablation_suite(const ExperimentConfig& cfg);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& doc);

/// Aligned text tables in the layout of the usual ablation / shift /
/// smoothness comparisons. The aggregate RMSE mixes N and N*m and is only a
/// comparative figure.
std::string format_report(const MetricsReport& report);

/// Only the estimation table (RMSE by airspeed, inflation, mirror residual).
std::string format_estimation(const MetricsReport& report);

/// Inflation comparison across reports (one per seed) for the named variants.
std::string format_comparison(std::span<const MetricsReport> reports, std::span<const dynamics::Variant> variants);

}  // namespace aeroalloc::harness
