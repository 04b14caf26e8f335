#include "aeroalloc/sensing.hpp"

namespace aeroalloc::harness {

FlowState SensorSuite::estimate(const plant::TunnelCondition& cond, const ProbePressures& p, int probe,
                                plant::Rng& rng) const {
  if (calibration) {
    return probe::estimate_flow((*calibration)[static_cast<std::size_t>(probe)], p, AirDensity{plant->params().rho});
  }
  const auto where = probe == 0 ? plant::Location::Probe0 : plant::Location::Probe1;
  const auto flow = plant->local_flow(cond, where);
  std::normal_distribution<double> speed(0.0, speed_noise);
  std::normal_distribution<double> angle(0.0, angle_noise);
  return {flow.airspeed + speed(rng), flow.alpha + angle(rng), flow.beta + angle(rng)};
}

Observation SensorSuite::observe(const plant::DynamicsRecord& record, plant::Rng& rng) const {
  if (plant == nullptr) throw InvalidParameter("sensor suite has no plant");
  const auto f0 = estimate(record.condition, record.probe0, 0, rng);
  const auto f1 = estimate(record.condition, record.probe1, 1, rng);
  Observation o;
  o << f0.airspeed, f0.alpha, f0.beta, f1.airspeed, f1.alpha, f1.beta, record.wing;
  return o;
}

Observation SensorSuite::observe(const plant::TunnelCondition& cond, const Control& u, plant::Rng& rng) const {
  if (plant == nullptr) throw InvalidParameter("sensor suite has no plant");
  plant::DynamicsRecord rec;
  rec.condition = cond;
  rec.u = u;
  rec.probe0 = plant->probe_pressures(plant->local_flow(cond, plant::Location::Probe0), 0, &rng);
  rec.probe1 = plant->probe_pressures(plant->local_flow(cond, plant::Location::Probe1), 1, &rng);
  rec.wing = plant->wing_pressures(cond, u, &rng);
  return observe(rec, rng);
}

dynamics::DynamicsDataset assemble_dataset(const std::vector<plant::DynamicsRecord>& records,
                                           const SensorSuite& sensors, std::uint64_t seed) {
  plant::Rng rng(plant::derive_seed(seed, 31));
  dynamics::DynamicsDataset out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back({sensors.observe(rec, rng), rec.u, rec.wrench});
  return out;
}

PlantEnvironment::PlantEnvironment(const SensorSuite& sensors, std::vector<plant::TunnelCondition> conditions,
                                   std::uint64_t seed)
    : sensors_(sensors), conditions_(std::move(conditions)), rng_(plant::derive_seed(seed, 41)) {}

Observation PlantEnvironment::observe(std::size_t step, const Control& applied) {
  return sensors_.observe(conditions_.at(step), applied, rng_);
}

Wrench PlantEnvironment::achieved(std::size_t step, const Control& applied) {
  return sensors_.plant->true_wrench(conditions_.at(step), applied, &rng_);
}

}  // namespace aeroalloc::harness
