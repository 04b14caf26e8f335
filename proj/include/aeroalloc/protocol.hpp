#pragma once

// Experiment protocols for the synthetic tunnel: the calibration grid and
// the two validation stages (continuously varying flow versus held
// setpoints, both under gusting). Generation is deterministic in the seed.

#include "aeroalloc/plant.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace aeroalloc::plant {

struct CalibrationProtocol {
  std::vector<double> airspeeds{8.0, 10.0, 12.0};
  std::vector<double> alphas{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::vector<double> betas{-10.0, -5.0, 0.0, 5.0, 10.0};
  int repeats = 8;
  bool gust = false;  // validation runs may switch the gust generator on
};

enum class Stage { I, II };

struct DynamicsProtocol {
  Stage stage = Stage::I;
  double airspeed = 10.0;
  int samples = 4000;
  double dt = 0.01;
  double alpha_range = 8.0;
  double beta_range = 8.0;
  double control_range = 20.0;
  double yaw_range = 10.0;
  double amplitude_min = 0.2;  // m/s
  double amplitude_max = 0.6;
  bool gust = true;
  std::vector<std::pair<double, double>> setpoints{{0.0, 0.0}};  // stage II (alpha, beta)
};

struct ProtocolEntry {
  std::string name;
  std::variant<CalibrationProtocol, DynamicsProtocol> spec;
};

struct ProtocolSpec {
  std::uint64_t seed = 0;
  std::vector<ProtocolEntry> datasets;
};

ProtocolSpec protocol_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ProtocolSpec& spec);

struct CalibrationRecord {
  ProbePressures pressures;
  FlowState label;  // tunnel setting
};

struct DynamicsRecord {
  TunnelCondition condition;
  Control u;
  ProbePressures probe0;
  ProbePressures probe1;
  WingPressures wing;
  Wrench wrench;  // force-balance reading
};

/// Per-probe records for the full grid times repeats.
std::array<std::vector<CalibrationRecord>, 2> generate_calibration(const Plant& plant,
                                                                   const CalibrationProtocol& protocol,
                                                                   std::uint64_t seed);

/// Flow conditions and excitation commands of a stage run, without sensing.
struct Trajectory {
  std::vector<TunnelCondition> conditions;
  std::vector<Control> commands;
};

Trajectory generate_trajectory(const DynamicsProtocol& protocol, std::uint64_t seed);

std::vector<DynamicsRecord> generate_dynamics(const Plant& plant, const DynamicsProtocol& protocol,
                                              std::uint64_t seed);

/// Stable per-stream seed derivation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Band-limited bounded random signal: piecewise-constant random targets
/// followed through a first-order lag.
class SmoothSignal {
 public:
  SmoothSignal(double lo, double hi, double hold_min, double hold_max, double time_constant, Rng& rng);
  double next(double dt, Rng& rng);
  double value() const { return value_; }

 private:
  double lo_;
  double hi_;
  double hold_min_;
  double hold_max_;
  double tau_;
  double value_;
  double target_;
  double remaining_;
};

}  // namespace aeroalloc::plant
