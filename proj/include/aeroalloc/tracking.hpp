#pragma once

// Closed-loop wrench tracking: at every step the model's local affine
// prediction feeds the allocator, and the previous command is threaded in
// as the smoothness anchor.

#include "aeroalloc/allocator.hpp"
#include "aeroalloc/types.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace aeroalloc::alloc {

struct LocalAffine {
  Wrench baseline;
  ControlMatrix effectiveness;
};

/// (A_t, B_t) at an observation; `u_prev` is the linearization point for
/// models that are not affine in u.
using LocalModel = std::function<LocalAffine(const Observation& o, const Control& u_prev)>;

/// What the loop can see of the world: sensors and the force balance.
class TrackingEnvironment {
 public:
  virtual ~TrackingEnvironment() = default;
  virtual Observation observe(std::size_t step, const Control& applied) = 0;
  virtual Wrench achieved(std::size_t step, const Control& applied) = 0;
};

struct TrackingConfig {
  double lambda0 = 0.01;
  double lambda1 = 0.1;
  Control u_trim = Control::Zero();
  Control u_initial = Control::Zero();
  double limit = kActuatorLimitDeg;
};

struct TrackingStep {
  std::size_t t = 0;
  Wrench target;
  Wrench predicted;
  Wrench achieved;
  Control u;
  std::array<bool, 4> clamped{};
  double tracking_error = 0.0;  // ||target - achieved||
};

std::vector<TrackingStep> track_sequence(const LocalModel& model, std::span<const Wrench> targets,
                                         TrackingEnvironment& env, const TrackingConfig& cfg);

/// t, target_*, predicted_*, achieved_*, d_*, clamped_flags ("0100" style).
void write_tracking_log(std::ostream& os, std::span<const TrackingStep> steps);

}  // namespace aeroalloc::alloc
