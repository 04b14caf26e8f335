#pragma once

// Observation assembly: probe flow estimates plus wing taps, either through
// trained calibration networks or through a noisy oracle stand-in.

#include "aeroalloc/dynamics.hpp"
#include "aeroalloc/plant.hpp"
#include "aeroalloc/probe.hpp"
#include "aeroalloc/protocol.hpp"
#include "aeroalloc/tracking.hpp"

#include <array>
#include <optional>

namespace aeroalloc::harness {

struct SensorSuite {
  const plant::Plant* plant = nullptr;
  std::optional<std::array<probe::Network, 2>> calibration;
  // Oracle estimator noise, used only without calibration networks.
  double speed_noise = 0.1;  // m/s
  double angle_noise = 0.3;  // deg

  Observation observe(const plant::DynamicsRecord& record, plant::Rng& rng) const;
  Observation observe(const plant::TunnelCondition& cond, const Control& u, plant::Rng& rng) const;

 private:
  FlowState estimate(const plant::TunnelCondition& cond, const ProbePressures& p, int probe,
                     plant::Rng& rng) const;
};

dynamics::DynamicsDataset assemble_dataset(const std::vector<plant::DynamicsRecord>& records,
                                           const SensorSuite& sensors, std::uint64_t seed);

/// Drives the plant along a fixed condition sequence; the applied command
/// feeds back into the wing taps and the force balance.
class PlantEnvironment : public alloc::TrackingEnvironment {
 public:
  PlantEnvironment(const SensorSuite& sensors, std::vector<plant::TunnelCondition> conditions, std::uint64_t seed);

  Observation observe(std::size_t step, const Control& applied) override;
  Wrench achieved(std::size_t step, const Control& applied) override;

 private:
  const SensorSuite& sensors_;
  std::vector<plant::TunnelCondition> conditions_;
  plant::Rng rng_;
};

}  // namespace aeroalloc::harness
