#include "aeroalloc/csv.hpp"
#include "aeroalloc/harness.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace aeroalloc;
using harness::rmssd;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "aeroalloc_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

dynamics::DynamicsDataset small_dataset(std::uint64_t seed) {
  static const plant::Plant plant;
  harness::SensorSuite sensors{&plant, std::nullopt};
  plant::DynamicsProtocol proto;
  proto.samples = 40;
  return harness::assemble_dataset(plant::generate_dynamics(plant, proto, seed), sensors, seed);
}

}  // namespace

TEST(Rmssd, ConstantSeriesIsZero) {
  const std::vector<Control> u(10, Control(3, -1, 2, 7));
  const auto r = rmssd(u);
  EXPECT_TRUE(r.per_input.isZero(0));
  EXPECT_EQ(r.average, 0.0);
}

TEST(Rmssd, AlternatingUnitSeriesIsTwo) {
  std::vector<Control> u;
  for (int t = 0; t < 11; ++t) u.push_back(Control::Constant(t % 2 == 0 ? 1.0 : -1.0));
  const auto r = rmssd(u);
  EXPECT_TRUE(r.per_input.isApprox(Control::Constant(2.0), 1e-15));
  EXPECT_DOUBLE_EQ(r.average, 2.0);
}

TEST(Rmssd, FiveStepHandFixture) {
  // differences in input 0: 1, 2, -2, 3 -> mean square 18 / 4
  std::vector<Control> u{Control(0, 0, 0, 0), Control(1, 0, 0, 0), Control(3, 0, 0, 0), Control(1, 0, 0, 4),
                         Control(4, 0, 0, 4)};
  const auto r = rmssd(u);
  EXPECT_NEAR(r.per_input(0), std::sqrt(4.5), 1e-15);
  EXPECT_NEAR(r.per_input(3), 2.0, 1e-15);
  EXPECT_NEAR(r.average, (std::sqrt(4.5) + 2.0) / 4.0, 1e-15);
}

TEST(Rmssd, TranslationInvariantAndScaleCovariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 4.0);
  std::vector<Control> u, shifted, scaled;
  const Control c(10, -20, 5, 0.5);
  for (int t = 0; t < 50; ++t) {
    u.push_back(Control(g(rng), g(rng), g(rng), g(rng)));
    shifted.push_back(u.back() + c);
    scaled.push_back(3.0 * u.back());
  }
  EXPECT_TRUE(rmssd(shifted).per_input.isApprox(rmssd(u).per_input, 1e-12));
  EXPECT_NEAR(rmssd(scaled).average, 3.0 * rmssd(u).average, 1e-12);
}

TEST(Rmssd, NeedsTwoSteps) {
  EXPECT_THROW(rmssd(std::vector<Control>(1, Control::Zero())), DatasetError);
  EXPECT_THROW(rmssd(std::vector<Control>{}), DatasetError);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(csv::format(0.1), "0.1");
  EXPECT_EQ(csv::format(-2.0), "-2");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng);
    EXPECT_EQ(std::stod(csv::format(v)), v);
  }
}

TEST(Csv, RejectsMalformedRows) {
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(csv::parse(ragged), DatasetError);
  std::istringstream text("a,b\n1,x\n");
  EXPECT_THROW(csv::parse(text), DatasetError);
  std::istringstream ok("a,b\n1,2\n");
  EXPECT_THROW(csv::parse(ok).column("c"), DatasetError);
}

TEST(DynamicsCsv, RoundTripIsExact) {
  const auto data = small_dataset(5);
  const auto path = scratch("dyn.csv");
  harness::write_dynamics_csv(path, data);
  const auto back = harness::read_dynamics_csv(path);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    EXPECT_EQ(back[k].o, data[k].o);
    EXPECT_EQ(back[k].u, data[k].u);
    EXPECT_EQ(back[k].y, data[k].y);
  }
  EXPECT_EQ(harness::dataset_hash(back), harness::dataset_hash(data));
  const auto text = slurp(path);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "Va0,alpha0,beta0,Va1,alpha1,beta1,ps0,ps1,ps2,ps3,ps4,ps5,ps6,d_la,d_ra,d_el,d_ru,Fx,Fy,Fz,Tx,Ty,Tz");
}

TEST(DynamicsCsv, SameSeedGivesIdenticalBytes) {
  harness::write_dynamics_csv(scratch("a.csv"), small_dataset(9));
  harness::write_dynamics_csv(scratch("b.csv"), small_dataset(9));
  EXPECT_EQ(slurp(scratch("a.csv")), slurp(scratch("b.csv")));
  EXPECT_NE(harness::dataset_hash(small_dataset(9)), harness::dataset_hash(small_dataset(10)));
}

TEST(DynamicsCsv, MissingFileRaises) {
  EXPECT_THROW(harness::read_dynamics_csv(scratch("does_not_exist.csv")), DatasetError);
}

TEST(CalibrationCsv, RoundTripsLabelsAndPressures) {
  const plant::Plant plant;
  plant::CalibrationProtocol grid;
  grid.repeats = 1;
  const auto records = plant::generate_calibration(plant, grid, 4)[0];
  const auto path = scratch("cal.csv");
  harness::write_calibration_csv(path, records);
  const auto back = harness::read_calibration_csv(path);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].pressures, records[k].pressures);
    EXPECT_EQ(back[k].truth.alpha, records[k].label.alpha);
    EXPECT_EQ(back[k].truth.airspeed, records[k].label.airspeed);
  }
}

TEST(ExperimentConfig, JsonRoundTrip) {
  harness::ExperimentConfig cfg;
  cfg.seed = 99;
  cfg.train_speeds = {9.0, 11.0};
  cfg.lambda1 = 2.5;
  cfg.train.symmetry.lambda = 10.0;
  cfg.variants = {dynamics::Variant::Affine, dynamics::Variant::Unstructured};
  const auto back = harness::experiment_config_from_json(nlohmann::json::parse(harness::to_json(cfg).dump()));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.train_speeds, cfg.train_speeds);
  EXPECT_EQ(back.lambda1, 2.5);
  EXPECT_EQ(back.train.symmetry.lambda, 10.0);
  EXPECT_EQ(back.variants, cfg.variants);
}

TEST(ExperimentConfig, RejectsInvalidSettings) {
  EXPECT_THROW(harness::experiment_config_from_json({{"lambda0", 0.0}, {"lambda1", 0.0}}), NotConvexError);
  EXPECT_THROW(harness::experiment_config_from_json({{"train_speeds", nlohmann::json::array()}}), InvalidParameter);
  EXPECT_THROW(harness::experiment_config_from_json({{"variants", {"bogus"}}}), InvalidParameter);
  EXPECT_THROW(harness::experiment_config_from_json({{"lambda_sym", -1.0}}), InvalidParameter);
}

TEST(TrainingSplit, ValidationTailsFollowTrainingHeads) {
  const plant::Plant plant;
  harness::SensorSuite sensors{&plant, std::nullopt};
  harness::ExperimentConfig cfg;
  cfg.train_samples = 300;
  cfg.train_speeds = {8.0, 12.0};
  const auto data = harness::training_split(plant, sensors, cfg);
  ASSERT_EQ(data.size(), 300u);
  // observation 0 is probe-0 airspeed; the first half of each block comes
  // from 8 m/s and the second from 12 m/s
  const auto near = [](double v, double target) { return std::abs(v - target) < 2.5; };
  EXPECT_TRUE(near(data[0].o(0), 8.0));
  EXPECT_TRUE(near(data[239].o(0), 12.0));
  EXPECT_TRUE(near(data[240].o(0), 8.0));
  EXPECT_TRUE(near(data[299].o(0), 12.0));
}
