#include "aeroalloc/harness.hpp"

#include "aeroalloc/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace aeroalloc::harness {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("cannot open " + path.string() + " for writing");
  return os;
}

std::vector<std::string> dynamics_header() {
  std::vector<std::string> h(kObservationNames.begin(), kObservationNames.end());
  h.insert(h.end(), kControlNames.begin(), kControlNames.end());
  h.insert(h.end(), kWrenchNames.begin(), kWrenchNames.end());
  return h;
}

}  // namespace

void write_calibration_csv(const std::filesystem::path& path, const std::vector<plant::CalibrationRecord>& records) {
  auto os = open_out(path);
  csv::write_header(os, {"p1", "p2", "p3", "p4", "p5", "Va", "alpha_deg", "beta_deg"});
  for (const auto& r : records) {
    const auto& p = r.pressures;
    csv::write_row(os, {p(0), p(1), p(2), p(3), p(4), r.label.airspeed, r.label.alpha, r.label.beta});
  }
}

std::vector<probe::CalibrationSample> read_calibration_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  std::array<std::size_t, 8> col{};
  const std::array<const char*, 8> names{"p1", "p2", "p3", "p4", "p5", "Va", "alpha_deg", "beta_deg"};
  for (std::size_t i = 0; i < names.size(); ++i) col[i] = table.column(names[i]);
  std::vector<probe::CalibrationSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    probe::CalibrationSample s;
    for (int i = 0; i < 5; ++i) s.pressures(i) = row[col[static_cast<std::size_t>(i)]];
    s.truth = {row[col[5]], row[col[6]], row[col[7]]};
    out.push_back(s);
  }
  return out;
}

void write_dynamics_csv(const std::filesystem::path& path, const dynamics::DynamicsDataset& data) {
  auto os = open_out(path);
  csv::write_header(os, dynamics_header());
  std::vector<double> row(23);
  for (const auto& s : data) {
    for (int i = 0; i < 13; ++i) row[static_cast<std::size_t>(i)] = s.o(i);
    for (int j = 0; j < 4; ++j) row[static_cast<std::size_t>(13 + j)] = s.u(j);
    for (int c = 0; c < 6; ++c) row[static_cast<std::size_t>(17 + c)] = s.y(c);
    csv::write_row(os, row);
  }
}

dynamics::DynamicsDataset read_dynamics_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto header = dynamics_header();
  std::vector<std::size_t> col;
  for (const auto& name : header) col.push_back(table.column(name));
  dynamics::DynamicsDataset out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    dynamics::DynamicsSample s;
    for (int i = 0; i < 13; ++i) s.o(i) = row[col[static_cast<std::size_t>(i)]];
    for (int j = 0; j < 4; ++j) s.u(j) = row[col[static_cast<std::size_t>(13 + j)]];
    for (int c = 0; c < 6; ++c) s.y(c) = row[col[static_cast<std::size_t>(17 + c)]];
    if (!s.o.allFinite() || !s.u.allFinite() || !s.y.allFinite()) throw DatasetError("non-finite value in dataset");
    out.push_back(s);
  }
  return out;
}

void write_conditions_csv(const std::filesystem::path& path, const std::vector<plant::DynamicsRecord>& records) {
  auto os = open_out(path);
  csv::write_header(os, {"t", "Va", "alpha_deg", "beta_deg", "gust_mode", "gust_yaw_deg", "gust_amplitude"});
  for (const auto& r : records) {
    const auto& c = r.condition;
    csv::write_row(os, {c.time, c.airspeed, c.alpha, c.beta, static_cast<double>(static_cast<int>(c.gust.mode)),
                        c.gust.yaw_deg, c.gust.amplitude});
  }
}

std::string dataset_hash(std::span<const dynamics::DynamicsSample> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](double v) {
    const auto s = csv::format(v);
    for (char ch : s) {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
    h ^= ',';
    h *= 0x100000001b3ULL;
  };
  for (const auto& s : data) {
    for (int i = 0; i < 13; ++i) mix(s.o(i));
    for (int j = 0; j < 4; ++j) mix(s.u(j));
    for (int c = 0; c < 6; ++c) mix(s.y(c));
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

RmssdReport rmssd(std::span<const Control> series) {
  if (series.size() < 2) throw DatasetError("RMSSD needs at least two steps");
  Control acc = Control::Zero();
  for (std::size_t t = 1; t < series.size(); ++t) acc += (series[t] - series[t - 1]).cwiseAbs2();
  RmssdReport r;
  r.per_input = (acc / static_cast<double>(series.size() - 1)).cwiseSqrt();
  r.average = r.per_input.mean();
  return r;
}

CalibrationMetrics score_calibration(const probe::Network& model, const std::vector<plant::CalibrationRecord>& test,
                                     AirDensity rho) {
  if (test.empty()) throw DatasetError("calibration test set is empty");
  double sa = 0.0, sb = 0.0, sv = 0.0;
  for (const auto& r : test) {
    const auto est = probe::estimate_flow(model, r.pressures, rho);
    sa += std::pow(est.alpha - r.label.alpha, 2);
    sb += std::pow(est.beta - r.label.beta, 2);
    sv += std::pow((est.airspeed - r.label.airspeed) / r.label.airspeed, 2);
  }
  const double n = static_cast<double>(test.size());
  return {std::sqrt(sa / n), std::sqrt(sb / n), 100.0 * std::sqrt(sv / n)};
}

CalibrationPair calibrate_probes(const plant::Plant& plant, const plant::CalibrationProtocol& grid,
                                 const probe::CalibrationTrainConfig& cfg, std::uint64_t seed) {
  const auto train = plant::generate_calibration(plant, grid, plant::derive_seed(seed, 1));
  plant::CalibrationProtocol held_out = grid;
  held_out.repeats = std::max(1, grid.repeats / 4);
  const auto test = plant::generate_calibration(plant, held_out, plant::derive_seed(seed, 2));

  CalibrationPair pair;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<probe::CalibrationSample> samples;
    samples.reserve(train[k].size());
    for (const auto& r : train[k]) samples.push_back({r.pressures, r.label});
    auto c = cfg;
    c.seed = plant::derive_seed(seed, 10 + k);
    c.rho = AirDensity{plant.params().rho};
    pair.models[k] = probe::train_calibration(samples, c).model;
    pair.held_out[k] = score_calibration(pair.models[k], test[k], c.rho);
  }
  return pair;
}

TrackingScenario make_tracking_scenario(const plant::Plant& plant, double airspeed, int steps, std::uint64_t seed) {
  plant::DynamicsProtocol proto;
  proto.airspeed = airspeed;
  proto.samples = steps;
  const auto traj = plant::generate_trajectory(proto, plant::derive_seed(seed, 1));

  plant::Rng rng(plant::derive_seed(seed, 2));
  std::vector<plant::SmoothSignal> reference;
  for (int j = 0; j < 4; ++j) reference.emplace_back(-8.0, 8.0, 1.0, 3.0, 0.3, rng);

  TrackingScenario s;
  s.conditions = traj.conditions;
  s.targets.reserve(traj.conditions.size());
  for (const auto& cond : traj.conditions) {
    Control u_ref;
    for (int j = 0; j < 4; ++j) u_ref(j) = reference[static_cast<std::size_t>(j)].next(proto.dt, rng);
    s.targets.push_back(plant.true_wrench(cond, u_ref));
  }
  return s;
}

alloc::LocalModel local_model(const dynamics::WrenchModel& model) {
  return [&model](const Observation& o, const Control& u_prev) {
    const auto p = model.local_affine(o, u_prev);
    return alloc::LocalAffine{p.A, p.B};
  };
}

std::vector<alloc::TrackingStep> run_tracking(const dynamics::WrenchModel& model, const TrackingScenario& scenario,
                                              const SensorSuite& sensors, const alloc::TrackingConfig& cfg,
                                              std::uint64_t seed) {
  PlantEnvironment env(sensors, scenario.conditions, seed);
  return alloc::track_sequence(local_model(model), scenario.targets, env, cfg);
}

void ExperimentConfig::validate() const {
  if (train_speeds.empty()) throw InvalidParameter("training airspeed list is empty");
  if (eval_speeds.empty()) throw InvalidParameter("evaluation airspeed list is empty");
  if (variants.empty()) throw InvalidParameter("no variants selected");
  if (train_samples < 100 || test_samples < 1 || track_steps < 2) throw InvalidParameter("sample counts too small");
  if (lambda0 < 0.0 || lambda1 < 0.0 || !(lambda0 + lambda1 > 0.0))
    throw NotConvexError("allocation weights must be non-negative with a positive sum");
  train.symmetry.validate();
}

namespace {

template <typename T>
void read_if(const nlohmann::json& doc, const char* key, T& value) {
  if (doc.contains(key)) value = doc.at(key).get<T>();
}

Wrench wrench_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw DimensionError("expected a 6-vector");
  return Eigen::Map<const Wrench>(v.data());
}

std::vector<double> to_vec(const Eigen::Ref<const Eigen::VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

std::string speed_key(double v) { return csv::format(v); }

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  read_if(doc, "seed", cfg.seed);
  read_if(doc, "train_speed", cfg.train_speed);
  read_if(doc, "train_speeds", cfg.train_speeds);
  read_if(doc, "eval_speeds", cfg.eval_speeds);
  read_if(doc, "track_speed", cfg.track_speed);
  read_if(doc, "train_samples", cfg.train_samples);
  read_if(doc, "test_samples", cfg.test_samples);
  read_if(doc, "track_steps", cfg.track_steps);
  read_if(doc, "lambda0", cfg.lambda0);
  read_if(doc, "lambda1", cfg.lambda1);
  read_if(doc, "calibrated_probes", cfg.calibrated_probes);
  read_if(doc, "lambda_sym", cfg.train.symmetry.lambda);
  if (doc.contains("delta")) cfg.train.symmetry.delta = wrench_from(doc.at("delta"));
  if (doc.contains("signs")) cfg.train.symmetry.signs = wrench_from(doc.at("signs"));
  read_if(doc, "epochs", cfg.train.epochs);
  read_if(doc, "batch_size", cfg.train.batch_size);
  read_if(doc, "learning_rate", cfg.train.learning_rate);
  read_if(doc, "final_learning_rate", cfg.train.final_learning_rate);
  read_if(doc, "hidden", cfg.train.arch.hidden);
  read_if(doc, "calibration_epochs", cfg.calibration.epochs);
  read_if(doc, "calibration_repeats", cfg.calibration_grid.repeats);
  if (doc.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : doc.at("variants")) cfg.variants.push_back(dynamics::variant_from_string(v.get<std::string>()));
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  doc["seed"] = cfg.seed;
  doc["train_speed"] = cfg.train_speed;
  doc["train_speeds"] = cfg.train_speeds;
  doc["eval_speeds"] = cfg.eval_speeds;
  doc["track_speed"] = cfg.track_speed;
  doc["train_samples"] = cfg.train_samples;
  doc["test_samples"] = cfg.test_samples;
  doc["track_steps"] = cfg.track_steps;
  doc["lambda0"] = cfg.lambda0;
  doc["lambda1"] = cfg.lambda1;
  doc["calibrated_probes"] = cfg.calibrated_probes;
  doc["lambda_sym"] = cfg.train.symmetry.lambda;
  doc["delta"] = to_vec(cfg.train.symmetry.delta);
  doc["signs"] = to_vec(cfg.train.symmetry.signs);
  doc["epochs"] = cfg.train.epochs;
  doc["batch_size"] = cfg.train.batch_size;
  doc["learning_rate"] = cfg.train.learning_rate;
  doc["final_learning_rate"] = cfg.train.final_learning_rate;
  doc["hidden"] = cfg.train.arch.hidden;
  doc["calibration_epochs"] = cfg.calibration.epochs;
  doc["calibration_repeats"] = cfg.calibration_grid.repeats;
  auto vs = nlohmann::json::array();
  for (auto v : cfg.variants) vs.push_back(dynamics::to_string(v));
  doc["variants"] = vs;
  return doc;
}

const VariantMetrics& MetricsReport::at(dynamics::Variant v) const {
  for (const auto& m : variants) {
    if (m.variant == v) return m;
  }
  throw InvalidParameter("variant " + dynamics::to_string(v) + " missing from report");
}

dynamics::DynamicsDataset training_split(const plant::Plant& plant, const SensorSuite& sensors,
                                         const ExperimentConfig& cfg) {
  // One Stage-I run per tunnel speed. Each run contributes its leading 80%
  // to the front of the dataset and its trailing 20% to the back, so the
  // contiguous split used by training holds out the tail of every run.
  std::vector<dynamics::DynamicsDataset> runs;
  const int per_speed = cfg.train_samples / static_cast<int>(cfg.train_speeds.size());
  for (std::size_t i = 0; i < cfg.train_speeds.size(); ++i) {
    plant::DynamicsProtocol proto;
    proto.airspeed = cfg.train_speeds[i];
    proto.samples = per_speed;
    const auto seed = plant::derive_seed(cfg.seed, 2 + 1000 * static_cast<std::uint64_t>(i));
    runs.push_back(assemble_dataset(plant::generate_dynamics(plant, proto, seed), sensors, seed));
  }
  dynamics::DynamicsDataset head, tail;
  for (const auto& run : runs) {
    const auto [train, val] = dynamics::split_contiguous(run, cfg.train.validation_fraction);
    head.insert(head.end(), train.begin(), train.end());
    tail.insert(tail.end(), val.begin(), val.end());
  }
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

dynamics::DynamicsDataset test_split(const plant::Plant& plant, const SensorSuite& sensors,
                                     const ExperimentConfig& cfg, double airspeed) {
  plant::DynamicsProtocol proto;
  proto.airspeed = airspeed;
  proto.samples = cfg.test_samples;
  const auto seed = plant::derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(std::llround(airspeed * 1000)));
  return assemble_dataset(plant::generate_dynamics(plant, proto, seed), sensors, seed);
}

std::uint64_t calibration_seed(const ExperimentConfig& cfg) { return plant::derive_seed(cfg.seed, 1); }

std::uint64_t tracking_seed(const ExperimentConfig& cfg) { return plant::derive_seed(cfg.seed, 6); }

dynamics::TrainConfig train_config(const ExperimentConfig& cfg) {
  auto tc = cfg.train;
  tc.seed = plant::derive_seed(cfg.seed, 5);
  return tc;
}

alloc::TrackingConfig tracking_config(const ExperimentConfig& cfg) {
  alloc::TrackingConfig tc;
  tc.lambda0 = cfg.lambda0;
  tc.lambda1 = cfg.lambda1;
  return tc;
}

TrackingScenario tracking_scenario(const plant::Plant& plant, const ExperimentConfig& cfg) {
  return make_tracking_scenario(plant, cfg.track_speed, cfg.track_steps, plant::derive_seed(cfg.seed, 4));
}

SuiteArtifacts run_ablation_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  const plant::Plant plant(cfg.plant);
  SensorSuite sensors{&plant, std::nullopt};

  SuiteArtifacts out;
  auto& report = out.report;
  report.seed = cfg.seed;
  report.train_speed = cfg.train_speed;
  report.train_speeds = cfg.train_speeds;
  report.track_speed = cfg.track_speed;

  if (cfg.calibrated_probes) {
    auto pair = calibrate_probes(plant, cfg.calibration_grid, cfg.calibration, calibration_seed(cfg));
    report.calibration = pair.held_out;
    sensors.calibration = std::move(pair.models);
    out.calibration = sensors.calibration;
  }

  const auto train_data = training_split(plant, sensors, cfg);
  report.split_hash = dataset_hash(train_data);

  std::vector<double> speeds = cfg.eval_speeds;
  for (double v : {cfg.train_speed, cfg.track_speed}) {
    if (std::find(speeds.begin(), speeds.end(), v) == speeds.end()) speeds.push_back(v);
  }
  std::map<double, dynamics::DynamicsDataset> tests;
  for (double v : speeds) tests[v] = test_split(plant, sensors, cfg, v);

  out.scenario = tracking_scenario(plant, cfg);
  const auto& scenario = out.scenario;
  const auto track_cfg = tracking_config(cfg);

  for (auto variant : cfg.variants) {
    const auto tc = train_config(cfg);
    auto model = dynamics::train_dynamics(train_data, tc, variant);

    VariantMetrics m;
    m.variant = variant;
    m.validation_rmse = model.validation_rmse;
    for (const auto& [speed, data] : tests) {
      m.rmse[speed] = dynamics::eval_rmse(model, data);
      m.channel_rmse[speed] = dynamics::eval_channel_rmse(model, data);
    }
    m.inflation_pct = 100.0 * (m.rmse.at(cfg.track_speed) / m.rmse.at(cfg.train_speed) - 1.0);
    if (const auto* affine = model.affine())
      m.symmetry_residual = dynamics::mean_symmetry_residual(*affine, tests.at(cfg.train_speed), tc.symmetry.signs);

    auto steps = run_tracking(model, scenario, sensors, track_cfg, tracking_seed(cfg));
    std::vector<Control> us;
    Wrench acc = Wrench::Zero();
    for (const auto& s : steps) {
      us.push_back(s.u);
      acc += (s.target - s.achieved).cwiseAbs2();
    }
    m.rmssd = rmssd(us);
    m.tracking_channel_rmse = (acc / static_cast<double>(steps.size())).cwiseSqrt();
    m.tracking_rmse = std::sqrt(acc.sum() / static_cast<double>(6 * steps.size()));

    report.variants.push_back(m);
    out.models.emplace(variant, std::move(model));
    out.tracking.emplace(variant, std::move(steps));
  }
  return out;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json doc;
  doc["version"] = "aeroalloc-report-v1";
  doc["seed"] = report.seed;
  doc["split_hash"] = report.split_hash;
  doc["train_speed"] = report.train_speed;
  doc["train_speeds"] = report.train_speeds;
  doc["track_speed"] = report.track_speed;
  doc["rmse_note"] = "comparative aggregate: RMSE over the concatenated wrench mixes N and N*m";
  auto calib = nlohmann::json::array();
  for (const auto& c : report.calibration)
    calib.push_back({{"alpha_rmse_deg", c.alpha_rmse}, {"beta_rmse_deg", c.beta_rmse},
                     {"airspeed_rmse_pct", c.airspeed_rmse_pct}});
  doc["calibration"] = calib;
  auto vs = nlohmann::json::array();
  for (const auto& m : report.variants) {
    nlohmann::json j;
    j["variant"] = dynamics::to_string(m.variant);
    j["validation_rmse"] = m.validation_rmse;
    nlohmann::json rmse = nlohmann::json::object();
    nlohmann::json channels = nlohmann::json::object();
    for (const auto& [speed, v] : m.rmse) rmse[speed_key(speed)] = v;
    for (const auto& [speed, w] : m.channel_rmse) channels[speed_key(speed)] = to_vec(w);
    j["rmse"] = rmse;
    j["channel_rmse"] = channels;
    j["inflation_pct"] = m.inflation_pct;
    if (m.symmetry_residual) j["symmetry_residual"] = *m.symmetry_residual;
    j["rmssd"] = to_vec(m.rmssd.per_input);
    j["rmssd_average"] = m.rmssd.average;
    j["tracking_rmse"] = m.tracking_rmse;
    j["tracking_channel_rmse"] = to_vec(m.tracking_channel_rmse);
    vs.push_back(j);
  }
  doc["variants"] = vs;
  return doc;
}

MetricsReport metrics_from_json(const nlohmann::json& doc) {
  if (doc.value("version", std::string{}) != "aeroalloc-report-v1") throw InvalidParameter("not a metrics report");
  MetricsReport r;
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.split_hash = doc.at("split_hash").get<std::string>();
  r.train_speed = doc.at("train_speed").get<double>();
  r.train_speeds = doc.at("train_speeds").get<std::vector<double>>();
  r.track_speed = doc.at("track_speed").get<double>();
  const auto& calib = doc.at("calibration");
  for (std::size_t k = 0; k < 2 && k < calib.size(); ++k) {
    r.calibration[k] = {calib[k].at("alpha_rmse_deg").get<double>(), calib[k].at("beta_rmse_deg").get<double>(),
                        calib[k].at("airspeed_rmse_pct").get<double>()};
  }
  for (const auto& j : doc.at("variants")) {
    VariantMetrics m;
    m.variant = dynamics::variant_from_string(j.at("variant").get<std::string>());
    m.validation_rmse = j.at("validation_rmse").get<double>();
    for (const auto& [key, v] : j.at("rmse").items()) m.rmse[std::stod(key)] = v.get<double>();
    for (const auto& [key, v] : j.at("channel_rmse").items()) m.channel_rmse[std::stod(key)] = wrench_from(v);
    m.inflation_pct = j.at("inflation_pct").get<double>();
    if (j.contains("symmetry_residual")) m.symmetry_residual = j.at("symmetry_residual").get<double>();
    const auto rm = j.at("rmssd").get<std::vector<double>>();
    if (rm.size() != 4) throw DimensionError("rmssd needs 4 entries");
    m.rmssd.per_input = Eigen::Map<const Control>(rm.data());
    m.rmssd.average = j.at("rmssd_average").get<double>();
    m.tracking_rmse = j.at("tracking_rmse").get<double>();
    m.tracking_channel_rmse = wrench_from(j.at("tracking_channel_rmse"));
    r.variants.push_back(m);
  }
  return r;
}

}  // namespace aeroalloc::harness
