#pragma once

// Control-affine wrench models y = A(o) + B(o) u.
//
// A shared tanh backbone feeds two linear heads: a 6-wide baseline head and
// a 24-wide effectiveness head reshaped row-major into the 6x4 matrix B
// (entry (i, j) is head output 4 i + j). Training adds a soft mirror prior
// on the flaperon columns, Huber-penalizing B[:,0] + s .* B[:,1].

#include "aeroalloc/nncore.hpp"
#include "aeroalloc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aeroalloc::dynamics {

using Network = nn::Network<double>;
using Tape = nn::GradientTape<double>;

enum class Variant { AffineSym, Affine, AffineNoWs, Unstructured, UnstructuredNoWs };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
bool is_affine(Variant v);
bool uses_wing_sensors(Variant v);
const std::vector<Variant>& all_variants();

struct SymmetryConfig {
  Wrench signs = (Wrench() << 1.0, -1.0, 1.0, -1.0, 1.0, -1.0).finished();
  double lambda = 0.1;
  Wrench delta = Wrench::Constant(0.5);

  void validate() const;
};

/// B[:,0] + s .* B[:,1]
Wrench symmetry_residual(const ControlMatrix& B, const Wrench& signs);

/// lambda * sum_i huber_{delta_i}(residual_i)
double symmetry_loss(const ControlMatrix& B, const SymmetryConfig& cfg);

/// d symmetry_loss / dB; only the flaperon columns are non-zero.
ControlMatrix symmetry_loss_gradient(const ControlMatrix& B, const SymmetryConfig& cfg);

/// Per-feature affine standardization fitted on a training split.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer identity(Eigen::Index width);
  static Standardizer fit(const Eigen::MatrixXd& columns);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& columns) const;
};

struct DynamicsSample {
  Observation o;
  Control u;
  Wrench y;
};
using DynamicsDataset = std::vector<DynamicsSample>;

struct Architecture {
  std::vector<int> hidden{64, 64};
};

/// Observation entries consumed by a model: all 13, or the six probe
/// features when wing sensors are ablated.
std::vector<int> feature_indices(bool with_wing_sensors);

struct AffineModel {
  std::vector<int> features;
  Standardizer input;
  Network backbone;
  Network a_head;
  Network b_head;

  struct Prediction {
    Wrench A;
    ControlMatrix B;
  };

  static AffineModel create(const Architecture& arch, bool with_wing_sensors, std::uint64_t seed);

  Prediction predict(const Observation& o) const;
  Wrench predict_wrench(const Observation& o, const Control& u) const;
};

/// Plain regression baseline on the concatenated (o, u) features.
struct UnstructuredModel {
  std::vector<int> features;
  Standardizer input;  // over features followed by the 4 controls
  Network net;

  static UnstructuredModel create(const Architecture& arch, bool with_wing_sensors, std::uint64_t seed);

  Wrench predict_wrench(const Observation& o, const Control& u) const;

  /// Local affine model around `u_lin`: B is the Jacobian dy/du there and
  /// A = y(u_lin) - B u_lin.
  AffineModel::Prediction linearize(const Observation& o, const Control& u_lin) const;
};

struct AffineGradients {
  Tape backbone;
  Tape a_head;
  Tape b_head;
};

/// Mean squared wrench error (over samples and the six channels) plus the
/// batch mean of the symmetry loss. Fills `grad` when non-null.
double training_loss(const AffineModel& model, std::span<const DynamicsSample> batch, const SymmetryConfig& cfg,
                     AffineGradients* grad = nullptr);

double training_loss(const UnstructuredModel& model, std::span<const DynamicsSample> batch,
                     Tape* grad = nullptr);

struct TrainConfig {
  Architecture arch{};
  int epochs = 150;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double final_learning_rate = 1e-4;
  double validation_fraction = 0.2;  // trailing contiguous block
  std::uint64_t seed = 0;
  bool shuffle = true;
  SymmetryConfig symmetry{};
};

/// A trained model of either family plus its provenance.
class WrenchModel {
 public:
  WrenchModel() = default;
  WrenchModel(Variant variant, AffineModel model, SymmetryConfig symmetry);
  WrenchModel(Variant variant, UnstructuredModel model);

  Variant variant() const { return variant_; }
  const SymmetryConfig& symmetry() const { return symmetry_; }
  const AffineModel* affine() const { return affine_ ? &*affine_ : nullptr; }
  const UnstructuredModel* unstructured() const { return unstructured_ ? &*unstructured_ : nullptr; }

  Wrench predict_wrench(const Observation& o, const Control& u) const;

  /// (A, B) for allocation. Affine models ignore `u_lin`.
  AffineModel::Prediction local_affine(const Observation& o, const Control& u_lin) const;

  nlohmann::json to_json() const;
  static WrenchModel from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static WrenchModel load(const std::filesystem::path& path);

  double validation_rmse = 0.0;
  std::vector<double> loss_history;

 private:
  Variant variant_ = Variant::AffineSym;
  SymmetryConfig symmetry_{};
  std::optional<AffineModel> affine_;
  std::optional<UnstructuredModel> unstructured_;
};

/// Splits the dataset into leading train and trailing validation blocks.
std::pair<std::span<const DynamicsSample>, std::span<const DynamicsSample>> split_contiguous(
    std::span<const DynamicsSample> data, double validation_fraction);

AffineModel train_affine(std::span<const DynamicsSample> train, const TrainConfig& cfg, bool with_wing_sensors,
                         const SymmetryConfig& symmetry, std::vector<double>* history = nullptr);

UnstructuredModel train_unstructured(std::span<const DynamicsSample> train, const TrainConfig& cfg,
                                     bool with_wing_sensors, std::vector<double>* history = nullptr);

/// Trains the given variant on the leading block and reports RMSE on the
/// trailing validation block. The symmetry prior is active only for
/// AffineSym. Throws DatasetError for fewer than 100 samples.
WrenchModel train_dynamics(const DynamicsDataset& dataset, const TrainConfig& cfg, Variant variant);

/// sqrt(mean over samples and six channels of squared error).
double eval_rmse(const WrenchModel& model, std::span<const DynamicsSample> data);
Wrench eval_channel_rmse(const WrenchModel& model, std::span<const DynamicsSample> data);

/// Mean over observations of ||B[:,0] + s .* B[:,1]|| for an affine model.
double mean_symmetry_residual(const AffineModel& model, std::span<const DynamicsSample> data, const Wrench& signs);

}  // namespace aeroalloc::dynamics
