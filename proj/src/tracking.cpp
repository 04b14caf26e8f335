#include "aeroalloc/tracking.hpp"

#include "aeroalloc/csv.hpp"

#include <ostream>

namespace aeroalloc::alloc {

std::vector<TrackingStep> track_sequence(const LocalModel& model, std::span<const Wrench> targets,
                                         TrackingEnvironment& env, const TrackingConfig& cfg) {
  AllocationProblem<double> problem;
  problem.u_trim = cfg.u_trim;
  problem.lambda0 = cfg.lambda0;
  problem.lambda1 = cfg.lambda1;
  validate(problem);

  std::vector<TrackingStep> steps;
  steps.reserve(targets.size());
  Control u_prev = cfg.u_initial;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Observation o = env.observe(t, u_prev);
    if (!o.allFinite()) throw NumericalError("non-finite observation at step " + std::to_string(t));
    const LocalAffine local = model(o, u_prev);

    problem.baseline = local.baseline;
    problem.effectiveness = local.effectiveness;
    problem.target = targets[t];
    problem.u_prev = u_prev;
    const auto sol = solve(problem, cfg.limit);

    TrackingStep step;
    step.t = t;
    step.target = targets[t];
    step.u = sol.u_applied;
    step.clamped = sol.clamped;
    step.predicted = local.baseline + local.effectiveness * step.u;
    step.achieved = env.achieved(t, step.u);
    if (!step.achieved.allFinite()) throw NumericalError("non-finite plant response at step " + std::to_string(t));
    step.tracking_error = (step.target - step.achieved).norm();
    steps.push_back(step);
    u_prev = step.u;
  }
  return steps;
}

void write_tracking_log(std::ostream& os, std::span<const TrackingStep> steps) {
  std::vector<std::string> header{"t"};
  for (const char* prefix : {"target_", "predicted_", "achieved_"}) {
    for (const char* name : kWrenchNames) header.push_back(std::string(prefix) + name);
  }
  for (const char* name : kControlNames) header.emplace_back(name);
  header.emplace_back("clamped_flags");
  csv::write_header(os, header);

  for (const auto& s : steps) {
    os << s.t;
    for (const Wrench* w : {&s.target, &s.predicted, &s.achieved}) {
      for (int i = 0; i < 6; ++i) os << ',' << csv::format((*w)(i));
    }
    for (int j = 0; j < 4; ++j) os << ',' << csv::format(s.u(j));
    os << ',';
    for (bool c : s.clamped) os << (c ? '1' : '0');
    os << '\n';
  }
}

}  // namespace aeroalloc::alloc
