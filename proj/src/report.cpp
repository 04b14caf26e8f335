#include "aeroalloc/harness.hpp"

#include <iomanip>
#include <sstream>

namespace aeroalloc::harness {

namespace {

constexpr int kLabelWidth = 20;
constexpr int kCellWidth = 20;

void row(std::ostringstream& os, const std::string& label, const std::vector<std::string>& cells) {
  os << std::left << std::setw(kLabelWidth) << label;
  for (const auto& c : cells) os << std::right << std::setw(kCellWidth) << c;
  os << '\n';
}

std::string num(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

std::string format_report(const MetricsReport& report) {
  std::ostringstream os;
  os << "seed " << report.seed << ", training split " << report.split_hash << "\n";
  os << "RMSE is a comparative aggregate over the 6D wrench (N and N*m mixed).\n\n";

  os << "Probe calibration, held-out grid repeats\n";
  row(os, "", {"alpha RMSE (deg)", "beta RMSE (deg)", "Va RMSE (%)"});
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = report.calibration[k];
    row(os, "probe " + std::to_string(k), {num(c.alpha_rmse), num(c.beta_rmse), num(c.airspeed_rmse_pct)});
  }
  os << '\n';

  os << format_estimation(report) << '\n';

  std::vector<std::string> names;
  for (const auto& m : report.variants) names.push_back(dynamics::to_string(m.variant));
  os << "Closed-loop tracking at " << num(report.track_speed, 1) << " m/s\n";
  row(os, "", names);
  {
    std::vector<std::string> cells;
    for (const auto& m : report.variants) cells.push_back(num(m.tracking_rmse));
    row(os, "tracking RMSE", cells);
  }
  for (int j = 0; j < 4; ++j) {
    std::vector<std::string> cells;
    for (const auto& m : report.variants) cells.push_back(num(m.rmssd.per_input(j)));
    row(os, std::string("RMSSD ") + kControlNames[static_cast<std::size_t>(j)], cells);
  }
  {
    std::vector<std::string> cells;
    for (const auto& m : report.variants) cells.push_back(num(m.rmssd.average));
    row(os, "RMSSD average", cells);
  }
  return os.str();
}

std::string format_estimation(const MetricsReport& report) {
  std::ostringstream os;
  std::vector<std::string> names;
  for (const auto& m : report.variants) names.push_back(dynamics::to_string(m.variant));

  os << "Estimation RMSE by airspeed (trained at";
  for (double v : report.train_speeds) os << ' ' << num(v, 1);
  os << " m/s; inflation relative to " << num(report.train_speed, 1) << " m/s)\n";
  row(os, "airspeed", names);
  if (!report.variants.empty()) {
    for (const auto& [speed, unused] : report.variants.front().rmse) {
      std::vector<std::string> cells;
      for (const auto& m : report.variants) cells.push_back(num(m.rmse.at(speed)));
      row(os, num(speed, 1) + " m/s", cells);
    }
  }
  {
    std::vector<std::string> cells;
    for (const auto& m : report.variants) cells.push_back(num(m.inflation_pct, 1) + "%");
    row(os, "inflation @" + num(report.track_speed, 0), cells);
  }
  {
    std::vector<std::string> cells;
    for (const auto& m : report.variants) cells.push_back(m.symmetry_residual ? num(*m.symmetry_residual, 4) : "-");
    row(os, "mirror residual", cells);
  }

  return os.str();
}

std::string format_comparison(std::span<const MetricsReport> reports, std::span<const dynamics::Variant> variants) {
  std::ostringstream os;
  std::vector<std::string> names;
  for (auto v : variants) names.push_back(dynamics::to_string(v) + " infl.");
  for (auto v : variants) names.push_back(dynamics::to_string(v) + " RMSSD");
  os << "Shift inflation (train speed -> track speed) and closed-loop RMSSD\n";
  row(os, "seed", names);
  for (const auto& r : reports) {
    std::vector<std::string> cells;
    for (auto v : variants) cells.push_back(num(r.at(v).inflation_pct, 1) + "%");
    for (auto v : variants) cells.push_back(num(r.at(v).rmssd.average));
    row(os, std::to_string(r.seed), cells);
  }
  return os.str();
}

}  // namespace aeroalloc::harness
