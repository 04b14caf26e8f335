#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace aeroalloc {

// Fixed-size vocabulary shared by every module. Angles are in degrees,
// pressures in Pa, forces in N, torques in N*m.

template <typename Scalar> using Wrench6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Control4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Effectiveness = Eigen::Matrix<Scalar, 6, 4>;

using Wrench = Wrench6<double>;
using Control = Control4<double>;
using ControlMatrix = Effectiveness<double>;

/// Five tap pressures ordered (center, up, down, left, right).
using ProbePressures = Eigen::Matrix<double, 5, 1>;

/// Seven wing-tap pressures ps0..ps6.
using WingPressures = Eigen::Matrix<double, 7, 1>;

/// Va0, alpha0, beta0, Va1, alpha1, beta1, ps0..ps6.
using Observation = Eigen::Matrix<double, 13, 1>;

inline constexpr int kObservationWidth = 13;
inline constexpr int kFlowFeatureWidth = 6;
inline constexpr int kControlWidth = 4;
inline constexpr int kWrenchWidth = 6;

inline constexpr std::array<const char*, 13> kObservationNames = {
    "Va0", "alpha0", "beta0", "Va1", "alpha1", "beta1", "ps0",
    "ps1", "ps2",    "ps3",   "ps4", "ps5",    "ps6"};
inline constexpr std::array<const char*, 4> kControlNames = {"d_la", "d_ra", "d_el", "d_ru"};
inline constexpr std::array<const char*, 6> kWrenchNames = {"Fx", "Fy", "Fz", "Tx", "Ty", "Tz"};

/// Symmetric actuator limit on every surface, degrees.
inline constexpr double kActuatorLimitDeg = 25.0;

struct FlowState {
  double airspeed = 0.0;  // m/s
  double alpha = 0.0;     // deg
  double beta = 0.0;      // deg
};

struct AirDensity {
  double rho = 1.225;  // kg/m^3
};

// Error taxonomy. Callers catch the specific type when the failure mode
// carries meaning (no-flow samples, out-of-envelope conditions).

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoFlowError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NotConvexError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfEnvelopeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double deg2rad(double deg) { return deg * 0.017453292519943295; }
inline double rad2deg(double rad) { return rad * 57.29577951308232; }

}  // namespace aeroalloc
