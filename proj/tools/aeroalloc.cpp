// aeroalloc: dataset generation, probe calibration, wrench-model training,
// evaluation, closed-loop tracking and reports on the synthetic tunnel.
//
// Artifacts live under an output root (--out, else $AEROALLOC_OUT, else
// ./aeroalloc_out):
//   data/     calibration and dynamics CSV files
//   models/   probe0.json, probe1.json, <variant>.json
//   reports/  JSON metrics and text tables
//   logs/     closed-loop tracking logs

#include "aeroalloc/csv.hpp"
#include "aeroalloc/harness.hpp"
#include "aeroalloc/nncore_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace aeroalloc;

namespace {

struct Options {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string protocol;
  std::string variant;
  std::string data;
  std::string speeds;
  std::string compare;
  std::vector<std::string> runs;
  std::optional<double> lambda_sym;
  std::optional<double> lambda0;
  std::optional<double> lambda1;
  bool suite = false;
};

class Workspace {
 public:
  explicit Workspace(const Options& opt) : root_(resolve_root(opt.out)) {
    for (const char* d : {"data", "models", "reports", "logs"}) fs::create_directories(root_ / d);
  }

  fs::path data(const std::string& name) const { return root_ / "data" / name; }
  fs::path model(const std::string& name) const { return root_ / "models" / (name + ".json"); }
  fs::path report(const std::string& name) const { return root_ / "reports" / name; }
  fs::path log(const std::string& name) const { return root_ / "logs" / name; }

 private:
  static fs::path resolve_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("AEROALLOC_OUT"); env && *env) return env;
    return "aeroalloc_out";
  }

  fs::path root_;
};

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open " + path.string());
  return nlohmann::json::parse(is);
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("cannot open " + path.string() + " for writing");
  os << text;
}

std::vector<double> parse_speeds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v > 0.0)) throw InvalidParameter("bad airspeed '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidParameter("empty airspeed list");
  return out;
}

std::vector<dynamics::Variant> parse_variants(const std::string& text) {
  std::vector<dynamics::Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(dynamics::variant_from_string(item));
  if (out.empty()) throw InvalidParameter("empty variant list");
  return out;
}

std::string speed_label(double v) { return csv::format(v); }

harness::ExperimentConfig load_config(const Options& opt) {
  auto cfg = opt.config.empty() ? harness::ExperimentConfig{}
                                : harness::experiment_config_from_json(read_json(opt.config));
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.lambda_sym) cfg.train.symmetry.lambda = *opt.lambda_sym;
  if (opt.lambda0) cfg.lambda0 = *opt.lambda0;
  if (opt.lambda1) cfg.lambda1 = *opt.lambda1;
  cfg.validate();
  return cfg;
}

// Sensor suite backed by the probe networks in models/, or the oracle
// stand-in when the configuration disables calibrated probes.
harness::SensorSuite load_sensors(const Workspace& ws, const plant::Plant& plant, const harness::ExperimentConfig& cfg) {
  harness::SensorSuite sensors{&plant, std::nullopt};
  if (!cfg.calibrated_probes) return sensors;
  std::array<probe::Network, 2> nets;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto path = ws.model("probe" + std::to_string(k));
    if (!fs::exists(path)) throw DatasetError("missing " + path.string() + "; run train-calib first");
    nets[k] = nn::network_from_json(read_json(path));
  }
  sensors.calibration = std::move(nets);
  return sensors;
}

std::vector<dynamics::Variant> trained_variants(const Workspace& ws, const Options& opt) {
  if (!opt.variant.empty()) return parse_variants(opt.variant);
  std::vector<dynamics::Variant> out;
  for (auto v : dynamics::all_variants()) {
    if (fs::exists(ws.model(dynamics::to_string(v)))) out.push_back(v);
  }
  if (out.empty()) throw DatasetError("no trained models found; run train-dyn first");
  return out;
}

plant::ProtocolSpec default_protocol(const harness::ExperimentConfig& cfg) {
  plant::ProtocolSpec spec;
  spec.seed = cfg.seed;
  spec.datasets.push_back({"calib", cfg.calibration_grid});
  return spec;
}

// ---- subcommands ------------------------------------------------------------

void gen_data(const Options& opt) {
  const Workspace ws(opt);
  auto cfg = load_config(opt);
  auto spec = opt.protocol.empty() ? default_protocol(cfg) : plant::protocol_from_json(read_json(opt.protocol));
  if (!opt.seed && !opt.protocol.empty()) cfg.seed = spec.seed;
  const plant::Plant plant(cfg.plant);

  std::optional<harness::SensorSuite> sensors;
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    const auto& entry = spec.datasets[i];
    if (const auto* grid = std::get_if<plant::CalibrationProtocol>(&entry.spec)) {
      const auto seed = plant::derive_seed(harness::calibration_seed(cfg), 1 + 1000 * static_cast<std::uint64_t>(i));
      const auto records = plant::generate_calibration(plant, *grid, seed);
      for (std::size_t k = 0; k < 2; ++k) {
        const auto path = ws.data(entry.name + "_probe" + std::to_string(k) + ".csv");
        harness::write_calibration_csv(path, records[k]);
        std::cout << "wrote " << path.string() << " (" << records[k].size() << " rows)\n";
      }
    } else {
      const auto& proto = std::get<plant::DynamicsProtocol>(entry.spec);
      if (!sensors) sensors = load_sensors(ws, plant, cfg);
      const auto seed = plant::derive_seed(cfg.seed, 300 + i);
      const auto records = plant::generate_dynamics(plant, proto, seed);
      const auto path = ws.data(entry.name + ".csv");
      harness::write_dynamics_csv(path, harness::assemble_dataset(records, *sensors, seed));
      harness::write_conditions_csv(ws.data(entry.name + "_conditions.csv"), records);
      std::cout << "wrote " << path.string() << " (" << records.size() << " rows)\n";
    }
  }
}

void train_calib(const Options& opt) {
  const Workspace ws(opt);
  const auto cfg = load_config(opt);
  const plant::Plant plant(cfg.plant);
  const std::string stem = opt.data.empty() ? "calib" : opt.data;

  plant::CalibrationProtocol held_out = cfg.calibration_grid;
  held_out.repeats = std::max(1, held_out.repeats / 4);
  const auto test = plant::generate_calibration(plant, held_out, plant::derive_seed(harness::calibration_seed(cfg), 2));

  nlohmann::json report = nlohmann::json::array();
  for (std::size_t k = 0; k < 2; ++k) {
    const auto samples = harness::read_calibration_csv(ws.data(stem + "_probe" + std::to_string(k) + ".csv"));
    auto c = cfg.calibration;
    c.seed = plant::derive_seed(harness::calibration_seed(cfg), 10 + k);
    c.rho = AirDensity{plant.params().rho};
    const auto result = probe::train_calibration(samples, c);
    write_json(ws.model("probe" + std::to_string(k)), nn::to_json(result.model));
    const auto m = harness::score_calibration(result.model, test[k], c.rho);
    report.push_back({{"probe", k},
                      {"alpha_rmse_deg", m.alpha_rmse},
                      {"beta_rmse_deg", m.beta_rmse},
                      {"airspeed_rmse_pct", m.airspeed_rmse_pct},
                      {"skipped", result.skipped},
                      {"loss_history", result.loss_history}});
    std::cout << "probe " << k << ": alpha " << m.alpha_rmse << " deg, beta " << m.beta_rmse << " deg, Va "
              << m.airspeed_rmse_pct << " %\n";
  }
  write_json(ws.report("calibration.json"), report);
}

void train_dyn(const Options& opt) {
  const Workspace ws(opt);
  auto cfg = load_config(opt);
  if (!opt.speeds.empty()) cfg.train_speeds = parse_speeds(opt.speeds);
  const auto variants = opt.variant.empty() || opt.variant == "all" ? dynamics::all_variants()
                                                                     : parse_variants(opt.variant);

  dynamics::DynamicsDataset data;
  if (!opt.data.empty()) {
    data = harness::read_dynamics_csv(opt.data);
  } else {
    const plant::Plant plant(cfg.plant);
    const auto sensors = load_sensors(ws, plant, cfg);
    data = harness::training_split(plant, sensors, cfg);
    harness::write_dynamics_csv(ws.data("train.csv"), data);
  }
  const auto hash = harness::dataset_hash(data);

  for (auto v : variants) {
    const auto name = dynamics::to_string(v);
    const auto model = dynamics::train_dynamics(data, harness::train_config(cfg), v);
    model.save(ws.model(name));
    write_json(ws.report("train_" + name + ".json"), {{"variant", name},
                                                       {"split_hash", hash},
                                                       {"samples", data.size()},
                                                       {"train_speeds", cfg.train_speeds},
                                                       {"validation_rmse", model.validation_rmse},
                                                       {"loss_history", model.loss_history}});
    std::cout << name << ": validation RMSE " << model.validation_rmse << " (split " << hash << ")\n";
  }
}

harness::MetricsReport evaluate(const Options& opt, const Workspace& ws, const harness::ExperimentConfig& cfg) {
  const plant::Plant plant(cfg.plant);
  const auto sensors = load_sensors(ws, plant, cfg);
  std::vector<double> speeds = opt.speeds.empty() ? cfg.eval_speeds : parse_speeds(opt.speeds);
  for (double v : {cfg.train_speed, cfg.track_speed}) {
    if (std::find(speeds.begin(), speeds.end(), v) == speeds.end()) speeds.push_back(v);
  }
  std::map<double, dynamics::DynamicsDataset> tests;
  for (double v : speeds) {
    tests[v] = harness::test_split(plant, sensors, cfg, v);
    harness::write_dynamics_csv(ws.data("test_" + speed_label(v) + ".csv"), tests[v]);
  }

  harness::MetricsReport report;
  report.seed = cfg.seed;
  report.train_speed = cfg.train_speed;
  report.train_speeds = cfg.train_speeds;
  report.track_speed = cfg.track_speed;
  for (auto v : trained_variants(ws, opt)) {
    const auto model = dynamics::WrenchModel::load(ws.model(dynamics::to_string(v)));
    const auto train_doc = read_json(ws.report("train_" + dynamics::to_string(v) + ".json"));
    report.split_hash = train_doc.at("split_hash").get<std::string>();
    report.train_speeds = train_doc.at("train_speeds").get<std::vector<double>>();
    harness::VariantMetrics m;
    m.variant = v;
    m.validation_rmse = model.validation_rmse;
    for (const auto& [speed, data] : tests) {
      m.rmse[speed] = dynamics::eval_rmse(model, data);
      m.channel_rmse[speed] = dynamics::eval_channel_rmse(model, data);
    }
    m.inflation_pct = 100.0 * (m.rmse.at(cfg.track_speed) / m.rmse.at(cfg.train_speed) - 1.0);
    if (const auto* affine = model.affine())
      m.symmetry_residual =
          dynamics::mean_symmetry_residual(*affine, tests.at(cfg.train_speed), model.symmetry().signs);
    report.variants.push_back(m);
  }
  return report;
}

void eval(const Options& opt) {
  const Workspace ws(opt);
  const auto cfg = load_config(opt);
  const auto report = evaluate(opt, ws, cfg);
  write_json(ws.report("eval.json"), harness::to_json(report));
  const auto text = harness::format_estimation(report);
  write_text(ws.report("eval.txt"), text);
  std::cout << text;
}

void track(const Options& opt) {
  const Workspace ws(opt);
  const auto cfg = load_config(opt);
  const plant::Plant plant(cfg.plant);
  const auto sensors = load_sensors(ws, plant, cfg);
  const auto scenario = harness::tracking_scenario(plant, cfg);
  const auto tc = harness::tracking_config(cfg);

  for (auto v : trained_variants(ws, opt)) {
    const auto name = dynamics::to_string(v);
    const auto model = dynamics::WrenchModel::load(ws.model(name));
    const auto steps = harness::run_tracking(model, scenario, sensors, tc, harness::tracking_seed(cfg));
    {
      std::ofstream os(ws.log("track_" + name + ".csv"), std::ios::binary);
      alloc::write_tracking_log(os, steps);
    }
    std::vector<Control> us;
    Wrench acc = Wrench::Zero();
    for (const auto& s : steps) {
      us.push_back(s.u);
      acc += (s.target - s.achieved).cwiseAbs2();
    }
    const auto r = harness::rmssd(us);
    const double n = static_cast<double>(steps.size());
    const Wrench channel = (acc / n).cwiseSqrt();
    write_json(ws.report("track_" + name + ".json"),
               {{"variant", name},
                {"airspeed", cfg.track_speed},
                {"lambda0", tc.lambda0},
                {"lambda1", tc.lambda1},
                {"rmssd", std::vector<double>(r.per_input.data(), r.per_input.data() + 4)},
                {"rmssd_average", r.average},
                {"tracking_rmse", std::sqrt(acc.sum() / (6.0 * n))},
                {"tracking_channel_rmse", std::vector<double>(channel.data(), channel.data() + 6)}});
    std::cout << name << ": RMSSD " << r.average << " deg, tracking RMSE " << std::sqrt(acc.sum() / (6.0 * n))
              << '\n';
  }
}

void write_suite(const Workspace& ws, const harness::SuiteArtifacts& art) {
  for (const auto& [v, model] : art.models) model.save(ws.model(dynamics::to_string(v)));
  if (art.calibration) {
    for (std::size_t k = 0; k < 2; ++k) write_json(ws.model("probe" + std::to_string(k)), nn::to_json((*art.calibration)[k]));
  }
  for (const auto& [v, steps] : art.tracking) {
    std::ofstream os(ws.log("track_" + dynamics::to_string(v) + ".csv"), std::ios::binary);
    alloc::write_tracking_log(os, steps);
  }
}

void report(const Options& opt) {
  const Workspace ws(opt);
  if (!opt.compare.empty()) {
    const auto variants = parse_variants(opt.compare);
    std::vector<harness::MetricsReport> reports;
    if (opt.runs.empty()) {
      reports.push_back(harness::metrics_from_json(read_json(ws.report("metrics.json"))));
    } else {
      for (const auto& run : opt.runs) reports.push_back(harness::metrics_from_json(read_json(fs::path(run) / "reports" / "metrics.json")));
    }
    const auto text = harness::format_comparison(reports, variants);
    write_text(ws.report("comparison.txt"), text);
    std::cout << text;
    return;
  }

  const auto cfg = load_config(opt);
  harness::MetricsReport metrics;
  if (opt.suite) {
    const auto art = harness::run_ablation_suite(cfg);
    write_suite(ws, art);
    write_json(ws.report("config.json"), harness::to_json(cfg));
    metrics = art.report;
  } else {
    metrics = harness::metrics_from_json(read_json(ws.report("eval.json")));
    if (fs::exists(ws.report("calibration.json"))) {
      const auto calib = read_json(ws.report("calibration.json"));
      for (std::size_t k = 0; k < 2 && k < calib.size(); ++k)
        metrics.calibration[k] = {calib[k].at("alpha_rmse_deg").get<double>(), calib[k].at("beta_rmse_deg").get<double>(),
                                  calib[k].at("airspeed_rmse_pct").get<double>()};
    }
    for (auto& m : metrics.variants) {
      const auto path = ws.report("track_" + dynamics::to_string(m.variant) + ".json");
      if (!fs::exists(path)) continue;
      const auto doc = read_json(path);
      const auto per_input = doc.at("rmssd").get<std::vector<double>>();
      const auto channel = doc.at("tracking_channel_rmse").get<std::vector<double>>();
      m.rmssd.per_input = Eigen::Map<const Control>(per_input.data());
      m.rmssd.average = doc.at("rmssd_average").get<double>();
      m.tracking_rmse = doc.at("tracking_rmse").get<double>();
      m.tracking_channel_rmse = Eigen::Map<const Wrench>(channel.data());
    }
  }
  write_json(ws.report("metrics.json"), harness::to_json(metrics));
  const auto text = harness::format_report(metrics);
  write_text(ws.report("report.txt"), text);
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-tunnel wrench modeling and control allocation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--out", opt.out, "Output root (default $AEROALLOC_OUT or ./aeroalloc_out)");
  app.add_option("--config", opt.config, "Experiment configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Experiment seed");

  auto* gen = app.add_subcommand("gen-data", "Generate calibration and dynamics datasets");
  gen->add_option("--protocol", opt.protocol, "Protocol JSON")->check(CLI::ExistingFile);

  auto* calib = app.add_subcommand("train-calib", "Train both probe calibration networks");
  calib->add_option("--data", opt.data, "Calibration dataset stem under data/ (default calib)");

  auto* dyn = app.add_subcommand("train-dyn", "Train wrench models");
  dyn->add_option("--variant", opt.variant, "Variant name, comma list or 'all'");
  dyn->add_option("--speeds", opt.speeds, "Training airspeeds, comma separated");
  dyn->add_option("--lambda-sym", opt.lambda_sym, "Symmetry prior weight");
  dyn->add_option("--data", opt.data, "Train on this dynamics CSV instead of a generated split")
      ->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "Evaluate trained models across airspeeds");
  ev->add_option("--variant", opt.variant, "Variants to evaluate (default: all trained)");
  ev->add_option("--speeds", opt.speeds, "Test airspeeds, comma separated");

  auto* tr = app.add_subcommand("track", "Closed-loop wrench tracking with the allocator");
  tr->add_option("--variant", opt.variant, "Variants to run (default: all trained)");
  tr->add_option("--lambda0", opt.lambda0, "Trim damping weight");
  tr->add_option("--lambda1", opt.lambda1, "Smoothness weight");

  auto* rep = app.add_subcommand("report", "Assemble metrics into report tables");
  rep->add_option("--compare", opt.compare, "Inflation/RMSSD comparison for these variants");
  rep->add_option("--runs", opt.runs, "Output roots to compare (default: this one)");
  rep->add_flag("--suite", opt.suite, "Run the full ablation suite first");
  rep->add_option("--lambda-sym", opt.lambda_sym, "Symmetry prior weight (with --suite)");
  rep->add_option("--lambda0", opt.lambda0, "Trim damping weight (with --suite)");
  rep->add_option("--lambda1", opt.lambda1, "Smoothness weight (with --suite)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) gen_data(opt);
    else if (*calib) train_calib(opt);
    else if (*dyn) train_dyn(opt);
    else if (*ev) eval(opt);
    else if (*tr) track(opt);
    else if (*rep) report(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
