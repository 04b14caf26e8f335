#include "aeroalloc/plant.hpp"

#include <cmath>
#include <numbers>

namespace aeroalloc::plant {

const char* to_string(GustMode mode) {
  switch (mode) {
    case GustMode::Off: return "off";
    case GustMode::Shear: return "shear";
    case GustMode::Shedding: return "shedding";
  }
  return "off";
}

GustMode gust_mode_from_string(const std::string& name) {
  if (name == "off") return GustMode::Off;
  if (name == "shear") return GustMode::Shear;
  if (name == "shedding") return GustMode::Shedding;
  throw InvalidParameter("unknown gust mode: " + name);
}

DerivativeTable::DerivativeTable() {
  // clang-format off
  control <<
      -0.0008,  0.0008, -0.0005,  0.0,      // CX
       0.0005,  0.0005,  0.0,     0.005,    // CY
       0.015,  -0.015,   0.006,   0.0,      // CL
       0.004,   0.004,   0.0,     0.0006,   // Cl
      -0.003,   0.003,  -0.02,    0.0,      // Cm
       0.0008,  0.0008,  0.0,    -0.012;    // Cn
  gust << 0.0, 0.003, 0.01, 0.004, -0.002, 0.001;
  // clang-format on
}

WingTapTable::WingTapTable() {
  a << -0.8, -0.4, -0.2, -0.1, -0.8, -0.4, -0.2;
  b << -0.05, -0.03, -0.015, -0.005, -0.05, -0.03, -0.015;
  c << 0.0, -0.01, -0.02, -0.03, 0.0, -0.005, -0.015;
  d << -0.06, -0.01, -0.005, -0.003, -0.05, -0.01, -0.005;
}

PlantParams::PlantParams() { probes[1].sensitivity = 1.95; }

void PlantParams::validate() const {
  if (!(rho > 0.0) || !(wing_area > 0.0) || !(chord > 0.0) || !(span > 0.0))
    throw InvalidParameter("plant geometry and density must be positive");
  if (!derivatives.control.allFinite() || !derivatives.gust.allFinite())
    throw InvalidParameter("derivative table must be finite");
  if (probe_noise < 0.0 || wing_noise < 0.0 || force_noise < 0.0 || torque_noise < 0.0)
    throw InvalidParameter("noise levels must be non-negative");
  if (!(strouhal > 0.0)) throw InvalidParameter("strouhal number must be positive");
}

Plant::Plant(PlantParams params) : params_(std::move(params)) { params_.validate(); }

GustPerturbation Plant::gust_perturbation(const TunnelCondition& cond, Location where) const {
  const auto& gust = cond.gust;
  const double w = params_.gust_weight[static_cast<std::size_t>(where)];
  GustPerturbation out;
  switch (gust.mode) {
    case GustMode::Off:
      break;
    case GustMode::Shear:
      out.d_beta = w * params_.shear_gain * gust.yaw_deg;
      break;
    case GustMode::Shedding: {
      if (gust.amplitude < 0.0) throw InvalidParameter("shedding amplitude must be non-negative");
      if (cond.airspeed <= 1e-9 || gust.amplitude == 0.0) break;
      const double f = gust.frequency_hz > 0.0 ? gust.frequency_hz : params_.strouhal * cond.airspeed / params_.chord;
      const double lag = where == Location::Wing ? params_.probe_to_wing / cond.airspeed : 0.0;
      const double theta = 2.0 * std::numbers::pi * f * (cond.time - lag) + gust.phase;
      const double angle = rad2deg(std::atan2(gust.amplitude, cond.airspeed));
      out.d_alpha = w * angle * std::sin(theta);
      out.d_beta = w * 0.5 * angle * std::cos(theta);
      break;
    }
  }
  return out;
}

FlowState Plant::local_flow(const TunnelCondition& cond, Location where) const {
  const auto g = gust_perturbation(cond, where);
  return FlowState{cond.airspeed, cond.alpha + g.d_alpha, cond.beta + g.d_beta};
}

ProbePressures Plant::probe_pressures(const FlowState& flow, int probe, Rng* rng) const {
  if (probe < 0 || probe > 1) throw InvalidParameter("probe index must be 0 or 1");
  if (flow.airspeed < 0.0) throw InvalidParameter("airspeed must be non-negative");
  const auto& geo = params_.probes[static_cast<std::size_t>(probe)];
  const double a = deg2rad(flow.alpha + geo.alpha_mount);
  const double b = deg2rad(flow.beta + geo.beta_mount);
  // Unit vector pointing upstream, into the relative wind.
  const Eigen::Vector3d v(std::cos(a) * std::cos(b), std::sin(b), -std::sin(a) * std::cos(b));
  const double cone = deg2rad(geo.cone_angle_deg);
  const double cc = std::cos(cone);
  const double sc = std::sin(cone);
  const std::array<Eigen::Vector3d, 5> taps = {
      Eigen::Vector3d(1.0, 0.0, 0.0),  // center
      Eigen::Vector3d(cc, 0.0, sc),    // up
      Eigen::Vector3d(cc, 0.0, -sc),   // down
      Eigen::Vector3d(cc, -sc, 0.0),   // left
      Eigen::Vector3d(cc, sc, 0.0),    // right
  };
  const double q = dynamic_pressure(flow.airspeed);
  std::normal_distribution<double> noise(0.0, params_.probe_noise);
  ProbePressures p;
  for (int i = 0; i < 5; ++i) {
    const double c = std::clamp(v.dot(taps[static_cast<std::size_t>(i)]), -1.0, 1.0);
    const double sin2 = 1.0 - c * c;
    p(i) = q * (1.0 - geo.sensitivity * sin2) + params_.static_pressure;
    if (rng != nullptr && params_.probe_noise > 0.0) p(i) += noise(*rng);
  }
  return p;
}

WingPressures Plant::wing_pressures(const TunnelCondition& cond, const Control& u, Rng* rng) const {
  const auto g = gust_perturbation(cond, Location::Wing);
  const double alpha_w = cond.alpha + g.d_alpha;
  const double gust_w = g.d_alpha + g.d_beta;
  const double q = dynamic_pressure(cond.airspeed);
  const auto& t = params_.wing_taps;
  WingPressures ps = q * (t.a.array() + t.b.array() * alpha_w + t.c.array() * u(1) + t.d.array() * gust_w).matrix();
  if (rng != nullptr && params_.wing_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, params_.wing_noise);
    for (int i = 0; i < 7; ++i) ps(i) += noise(*rng);
  }
  return ps;
}

Wrench Plant::reference_scale() const {
  Wrench s;
  s << 1.0, 1.0, 1.0, params_.span, params_.chord, params_.span;
  return params_.wing_area * s;
}

ControlMatrix Plant::control_effectiveness(const TunnelCondition& cond) const {
  const double q = dynamic_pressure(cond.airspeed);
  return q * reference_scale().asDiagonal() * params_.derivatives.control;
}

Wrench Plant::true_wrench(const TunnelCondition& cond, const Control& u, Rng* rng) const {
  const auto wing = local_flow(cond, Location::Wing);
  if (std::abs(wing.alpha) > params_.envelope_deg || std::abs(wing.beta) > params_.envelope_deg)
    throw OutOfEnvelopeError("flow angles outside the plant's linear envelope");
  if (cond.airspeed < 0.0) throw InvalidParameter("airspeed must be non-negative");

  const auto& d = params_.derivatives;
  const double cl = d.cl0 + d.cl_alpha * wing.alpha;
  const double cd = d.cd0 + d.cd_induced * cl * cl;
  const double ar = deg2rad(wing.alpha);
  Wrench coeff;
  coeff << -cd * std::cos(ar) + cl * std::sin(ar),  // CX
      d.cy_beta * wing.beta,                        // CY
      cl * std::cos(ar) + cd * std::sin(ar),         // CZ (lift-positive)
      d.croll_beta * wing.beta,                      // Cl
      d.cm0 + d.cm_alpha * wing.alpha,               // Cm
      d.cn_beta * wing.beta;                         // Cn

  const auto g = gust_perturbation(cond, Location::Wing);
  coeff += d.gust * (g.d_alpha + g.d_beta);
  coeff += d.control * u;

  const double q = dynamic_pressure(cond.airspeed);
  Wrench y = q * reference_scale().cwiseProduct(coeff);
  if (rng != nullptr) {
    std::normal_distribution<double> force(0.0, params_.force_noise);
    std::normal_distribution<double> torque(0.0, params_.torque_noise);
    for (int i = 0; i < 3; ++i) y(i) += params_.force_noise > 0.0 ? force(*rng) : 0.0;
    for (int i = 3; i < 6; ++i) y(i) += params_.torque_noise > 0.0 ? torque(*rng) : 0.0;
  }
  return y;
}

Wrench mirror_residual(const ControlMatrix& B, const Wrench& signs) {
  return B.col(0) + signs.cwiseProduct(B.col(1));
}

Wrench default_symmetry_signs() {
  Wrench s;
  s << 1.0, -1.0, 1.0, -1.0, 1.0, -1.0;
  return s;
}

}  // namespace aeroalloc::plant
