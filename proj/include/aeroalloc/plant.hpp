#pragma once

// Synthetic wind-tunnel plant: linear-regime aerodynamics of a small
// fixed-wing airframe, a five-hole probe pressure model, wing surface taps,
// and an upstream gust generator.
//
// Axes: x forward, y right, z up. Fz is positive with lift. A positive
// angle of attack means the relative wind arrives from below; a positive
// sideslip means it arrives from the right. Flaperons use the mirrored
// sign convention: positive left deflection raises lift, positive right
// deflection lowers it, so equal commands roll the airframe.

#include "aeroalloc/types.hpp"

#include <array>
#include <cstdint>
#include <random>

namespace aeroalloc::plant {

using Rng = std::mt19937_64;

enum class GustMode { Off, Shear, Shedding };
enum class Location { Probe0, Probe1, Wing };

const char* to_string(GustMode mode);
GustMode gust_mode_from_string(const std::string& name);

struct GustState {
  GustMode mode = GustMode::Off;
  double yaw_deg = 0.0;        // gust-wing yaw, drives the shear offset
  double amplitude = 0.0;      // shedding velocity amplitude, m/s
  double frequency_hz = 0.0;   // <= 0 selects f = strouhal * Va / chord
  double phase = 0.0;          // rad
};

struct TunnelCondition {
  double airspeed = 10.0;  // m/s
  double alpha = 0.0;      // deg
  double beta = 0.0;       // deg
  GustState gust{};
  double time = 0.0;       // s
};

struct ProbeGeometry {
  double cone_angle_deg = 45.0;
  double sensitivity = 2.0;    // k in q (1 - k sin^2 theta)
  double alpha_mount = 0.0;    // mounting misalignment, deg
  double beta_mount = 0.0;
};

/// Dimensionless aerodynamic derivatives, per degree.
struct DerivativeTable {
  double cl0 = 0.2;
  double cl_alpha = 0.08;
  double cd0 = 0.03;
  double cd_induced = 0.05;  // CD = cd0 + cd_induced * CL^2
  double cy_beta = -0.02;
  double croll_beta = -0.001;
  double cm0 = 0.02;
  double cm_alpha = -0.01;
  double cn_beta = 0.002;
  /// Rows (CX, CY, CL, Cl, Cm, Cn), columns (la, ra, el, ru).
  Eigen::Matrix<double, 6, 4> control;
  /// Additive unsteady loading per degree of wing gust angle.
  Wrench gust;

  DerivativeTable();
};

/// ps_i = q (a_i + b_i alpha_w + c_i d_ra + d_i gust_w). Stations ps0..ps3 run
/// chordwise along the right wing from the leading edge to the flaperon
/// hinge; ps4..ps6 are an outboard row with ps4 on the leading edge.
struct WingTapTable {
  WingPressures a;
  WingPressures b;
  WingPressures c;
  WingPressures d;

  WingTapTable();
};

struct PlantParams {
  double rho = 1.225;
  double wing_area = 0.30;
  double span = 1.2;
  double chord = 0.25;
  double static_pressure = 101325.0;
  DerivativeTable derivatives{};
  WingTapTable wing_taps{};
  std::array<ProbeGeometry, 2> probes{};

  // Gust generator.
  double strouhal = 0.2;
  double shear_gain = 0.5;                         // deg of sideslip per deg of yaw
  std::array<double, 3> gust_weight{1.0, 0.3, 0.7};  // probe0, probe1, wing
  double probe_to_wing = 0.31;                     // m, convective lag distance

  // Sensor noise standard deviations.
  double probe_noise = 0.5;   // Pa
  double wing_noise = 1.0;    // Pa
  double force_noise = 0.05;  // N
  double torque_noise = 0.005;  // N*m

  double envelope_deg = 15.0;

  PlantParams();
  void validate() const;
};

struct GustPerturbation {
  double d_alpha = 0.0;
  double d_beta = 0.0;
};

class Plant {
 public:
  Plant() : Plant(PlantParams{}) {}
  explicit Plant(PlantParams params);

  const PlantParams& params() const { return params_; }

  double dynamic_pressure(double airspeed) const { return 0.5 * params_.rho * airspeed * airspeed; }

  GustPerturbation gust_perturbation(const TunnelCondition& cond, Location where) const;
  FlowState local_flow(const TunnelCondition& cond, Location where) const;

  /// Tap pressures for the given probe in the given local flow. `rng` adds
  /// sensor noise; pass nullptr for the noiseless response.
  ProbePressures probe_pressures(const FlowState& flow, int probe, Rng* rng = nullptr) const;

  WingPressures wing_pressures(const TunnelCondition& cond, const Control& u, Rng* rng = nullptr) const;

  /// Dimensional control effectiveness dy/du at this condition (N/deg, N*m/deg).
  ControlMatrix control_effectiveness(const TunnelCondition& cond) const;

  /// Force-balance reading. Throws OutOfEnvelopeError outside the linear regime.
  Wrench true_wrench(const TunnelCondition& cond, const Control& u, Rng* rng = nullptr) const;

 private:
  /// Scales coefficient rows to dimensional wrench rows (area, reference lengths).
  Wrench reference_scale() const;

  PlantParams params_;
};

/// Mirror residual col(la) + s .* col(ra) of a 6x4 matrix.
Wrench mirror_residual(const ControlMatrix& B, const Wrench& signs);

/// (1, -1, 1, -1, 1, -1)
Wrench default_symmetry_signs();

}  // namespace aeroalloc::plant
