#include "aeroalloc/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace aeroalloc::plant {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SmoothSignal::SmoothSignal(double lo, double hi, double hold_min, double hold_max, double time_constant, Rng& rng)
    : lo_(lo), hi_(hi), hold_min_(hold_min), hold_max_(hold_max), tau_(time_constant) {
  if (hi < lo || hold_max < hold_min || !(hold_min > 0.0) || !(time_constant > 0.0))
    throw InvalidParameter("invalid smooth signal bounds");
  std::uniform_real_distribution<double> level(lo_, hi_);
  std::uniform_real_distribution<double> hold(hold_min_, hold_max_);
  value_ = level(rng);
  target_ = value_;
  remaining_ = hold(rng);
}

double SmoothSignal::next(double dt, Rng& rng) {
  remaining_ -= dt;
  if (remaining_ <= 0.0) {
    std::uniform_real_distribution<double> level(lo_, hi_);
    std::uniform_real_distribution<double> hold(hold_min_, hold_max_);
    target_ = level(rng);
    remaining_ += hold(rng);
  }
  value_ += (target_ - value_) * (1.0 - std::exp(-dt / tau_));
  return value_;
}

std::array<std::vector<CalibrationRecord>, 2> generate_calibration(const Plant& plant,
                                                                   const CalibrationProtocol& protocol,
                                                                   std::uint64_t seed) {
  if (protocol.airspeeds.empty() || protocol.alphas.empty() || protocol.betas.empty() || protocol.repeats < 1)
    throw InvalidParameter("calibration grid must be non-empty");
  Rng noise(derive_seed(seed, 11));
  Rng gust_rng(derive_seed(seed, 12));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.141592653589793);
  std::uniform_real_distribution<double> amp(0.2, 0.6);

  std::array<std::vector<CalibrationRecord>, 2> out;
  double t = 0.0;
  for (double va : protocol.airspeeds) {
    for (double alpha : protocol.alphas) {
      for (double beta : protocol.betas) {
        for (int r = 0; r < protocol.repeats; ++r) {
          TunnelCondition cond{va, alpha, beta, {}, t};
          if (protocol.gust) {
            cond.gust.mode = GustMode::Shedding;
            cond.gust.amplitude = amp(gust_rng);
            cond.gust.phase = phase(gust_rng);
          }
          for (int probe = 0; probe < 2; ++probe) {
            const auto where = probe == 0 ? Location::Probe0 : Location::Probe1;
            const auto flow = plant.local_flow(cond, where);
            out[static_cast<std::size_t>(probe)].push_back({plant.probe_pressures(flow, probe, &noise), {va, alpha, beta}});
          }
          t += 0.01;
        }
      }
    }
  }
  return out;
}

Trajectory generate_trajectory(const DynamicsProtocol& p, std::uint64_t seed) {
  if (p.samples < 1 || !(p.dt > 0.0) || p.airspeed < 0.0) throw InvalidParameter("invalid dynamics protocol");
  if (p.stage == Stage::II && p.setpoints.empty()) throw InvalidParameter("stage II needs at least one setpoint");
  Rng rng(derive_seed(seed, 21));

  SmoothSignal alpha(-p.alpha_range, p.alpha_range, 1.0, 3.0, 0.4, rng);
  SmoothSignal beta(-p.beta_range, p.beta_range, 1.0, 3.0, 0.4, rng);
  SmoothSignal yaw(-p.yaw_range, p.yaw_range, 0.5, 2.0, 0.3, rng);
  SmoothSignal amplitude(p.amplitude_min, p.amplitude_max, 0.5, 2.0, 0.3, rng);
  std::vector<SmoothSignal> surfaces;
  for (int j = 0; j < 4; ++j) surfaces.emplace_back(-p.control_range, p.control_range, 0.2, 1.0, 0.05, rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> segment(2.0, 5.0);
  GustMode mode = GustMode::Shedding;
  double segment_left = segment(rng);

  Trajectory traj;
  traj.conditions.reserve(static_cast<std::size_t>(p.samples));
  traj.commands.reserve(static_cast<std::size_t>(p.samples));
  const std::size_t per_setpoint =
      (static_cast<std::size_t>(p.samples) + p.setpoints.size() - 1) / std::max<std::size_t>(1, p.setpoints.size());

  for (int k = 0; k < p.samples; ++k) {
    const double t = k * p.dt;
    TunnelCondition cond;
    cond.airspeed = p.airspeed;
    cond.time = t;
    const double a = alpha.next(p.dt, rng);
    const double b = beta.next(p.dt, rng);
    if (p.stage == Stage::I) {
      cond.alpha = a;
      cond.beta = b;
    } else {
      const auto& sp = p.setpoints[std::min(p.setpoints.size() - 1, static_cast<std::size_t>(k) / per_setpoint)];
      cond.alpha = sp.first;
      cond.beta = sp.second;
    }

    segment_left -= p.dt;
    if (segment_left <= 0.0) {
      const double draw = unit(rng);
      if (p.stage == Stage::II) {
        mode = draw < 0.35 ? GustMode::Shear : GustMode::Shedding;
      } else {
        mode = draw < 0.2 ? GustMode::Off : (draw < 0.5 ? GustMode::Shear : GustMode::Shedding);
      }
      segment_left += segment(rng);
    }
    const double y = yaw.next(p.dt, rng);
    const double amp = amplitude.next(p.dt, rng);
    if (p.gust) {
      cond.gust.mode = mode;
      cond.gust.yaw_deg = y;
      cond.gust.amplitude = amp;
    }

    Control u;
    for (int j = 0; j < 4; ++j) u(j) = surfaces[static_cast<std::size_t>(j)].next(p.dt, rng);
    traj.conditions.push_back(cond);
    traj.commands.push_back(u);
  }
  return traj;
}

std::vector<DynamicsRecord> generate_dynamics(const Plant& plant, const DynamicsProtocol& protocol,
                                              std::uint64_t seed) {
  const auto traj = generate_trajectory(protocol, seed);
  Rng noise(derive_seed(seed, 22));
  std::vector<DynamicsRecord> out;
  out.reserve(traj.conditions.size());
  for (std::size_t k = 0; k < traj.conditions.size(); ++k) {
    const auto& cond = traj.conditions[k];
    const auto& u = traj.commands[k];
    DynamicsRecord rec;
    rec.condition = cond;
    rec.u = u;
    rec.probe0 = plant.probe_pressures(plant.local_flow(cond, Location::Probe0), 0, &noise);
    rec.probe1 = plant.probe_pressures(plant.local_flow(cond, Location::Probe1), 1, &noise);
    rec.wing = plant.wing_pressures(cond, u, &noise);
    rec.wrench = plant.true_wrench(cond, u, &noise);
    out.push_back(rec);
  }
  return out;
}

namespace {

template <typename T>
void read_if(const nlohmann::json& doc, const char* key, T& value) {
  if (doc.contains(key)) value = doc.at(key).get<T>();
}

}  // namespace

ProtocolSpec protocol_from_json(const nlohmann::json& doc) {
  ProtocolSpec spec;
  read_if(doc, "seed", spec.seed);
  if (!doc.contains("datasets") || !doc.at("datasets").is_array())
    throw InvalidParameter("protocol must list its datasets");
  for (const auto& entry : doc.at("datasets")) {
    ProtocolEntry out;
    out.name = entry.at("name").get<std::string>();
    if (out.name.empty() || out.name.find('/') != std::string::npos)
      throw InvalidParameter("dataset names must be plain file stems");
    const auto kind = entry.at("kind").get<std::string>();
    if (kind == "calibration") {
      CalibrationProtocol c;
      read_if(entry, "airspeeds", c.airspeeds);
      read_if(entry, "alphas", c.alphas);
      read_if(entry, "betas", c.betas);
      read_if(entry, "repeats", c.repeats);
      read_if(entry, "gust", c.gust);
      out.spec = c;
    } else if (kind == "stage1" || kind == "stage2") {
      DynamicsProtocol d;
      d.stage = kind == "stage1" ? Stage::I : Stage::II;
      read_if(entry, "airspeed", d.airspeed);
      read_if(entry, "samples", d.samples);
      read_if(entry, "dt", d.dt);
      read_if(entry, "alpha_range", d.alpha_range);
      read_if(entry, "beta_range", d.beta_range);
      read_if(entry, "control_range", d.control_range);
      read_if(entry, "yaw_range", d.yaw_range);
      read_if(entry, "amplitude_min", d.amplitude_min);
      read_if(entry, "amplitude_max", d.amplitude_max);
      read_if(entry, "gust", d.gust);
      if (entry.contains("setpoints")) {
        d.setpoints.clear();
        for (const auto& sp : entry.at("setpoints")) {
          const auto v = sp.get<std::vector<double>>();
          if (v.size() != 2) throw InvalidParameter("setpoints are [alpha, beta] pairs");
          d.setpoints.emplace_back(v[0], v[1]);
        }
      }
      if (d.control_range > kActuatorLimitDeg) throw InvalidParameter("control excitation exceeds actuator limits");
      out.spec = d;
    } else {
      throw InvalidParameter("unknown dataset kind: " + kind);
    }
    spec.datasets.push_back(std::move(out));
  }
  return spec;
}

nlohmann::json to_json(const ProtocolSpec& spec) {
  nlohmann::json doc;
  doc["seed"] = spec.seed;
  auto list = nlohmann::json::array();
  for (const auto& entry : spec.datasets) {
    nlohmann::json e;
    e["name"] = entry.name;
    if (const auto* c = std::get_if<CalibrationProtocol>(&entry.spec)) {
      e["kind"] = "calibration";
      e["airspeeds"] = c->airspeeds;
      e["alphas"] = c->alphas;
      e["betas"] = c->betas;
      e["repeats"] = c->repeats;
      e["gust"] = c->gust;
    } else {
      const auto& d = std::get<DynamicsProtocol>(entry.spec);
      e["kind"] = d.stage == Stage::I ? "stage1" : "stage2";
      e["airspeed"] = d.airspeed;
      e["samples"] = d.samples;
      e["dt"] = d.dt;
      e["alpha_range"] = d.alpha_range;
      e["beta_range"] = d.beta_range;
      e["control_range"] = d.control_range;
      e["yaw_range"] = d.yaw_range;
      e["amplitude_min"] = d.amplitude_min;
      e["amplitude_max"] = d.amplitude_max;
      e["gust"] = d.gust;
      auto sps = nlohmann::json::array();
      for (const auto& [a, b] : d.setpoints) sps.push_back({a, b});
      e["setpoints"] = sps;
    }
    list.push_back(std::move(e));
  }
  doc["datasets"] = list;
  return doc;
}

}  // namespace aeroalloc::plant
