#include "aeroalloc/dynamics.hpp"

#include "aeroalloc/nncore_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace aeroalloc::dynamics {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct BatchMatrices {
  Eigen::MatrixXd features;  // raw selected observation features
  Eigen::MatrixXd controls;  // 4 x N
  Eigen::MatrixXd wrenches;  // 6 x N
};

BatchMatrices gather(std::span<const DynamicsSample> data, const std::vector<int>& features) {
  const auto n = static_cast<Eigen::Index>(data.size());
  BatchMatrices m;
  m.features.resize(static_cast<Eigen::Index>(features.size()), n);
  m.controls.resize(4, n);
  m.wrenches.resize(6, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = data[static_cast<std::size_t>(k)];
    for (std::size_t f = 0; f < features.size(); ++f) m.features(static_cast<Eigen::Index>(f), k) = s.o(features[f]);
    m.controls.col(k) = s.u;
    m.wrenches.col(k) = s.y;
  }
  return m;
}

ControlMatrix reshape_b(const Eigen::Ref<const Eigen::VectorXd>& head) {
  ControlMatrix B;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) B(i, j) = head(4 * i + j);
  return B;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  return out;
}

// Loss on standardized inputs; the workhorse behind training_loss and the
// training loop.
double affine_loss(const AffineModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& controls,
                   const Eigen::MatrixXd& wrenches, const SymmetryConfig& cfg, AffineGradients* grad) {
  const Eigen::Index n = inputs.cols();
  Network::Trace tb, ta, tB;
  const Eigen::MatrixXd hidden = model.backbone.forward(inputs, grad ? &tb : nullptr);
  const Eigen::MatrixXd a_out = model.a_head.forward(hidden, grad ? &ta : nullptr);
  const Eigen::MatrixXd b_out = model.b_head.forward(hidden, grad ? &tB : nullptr);

  const double inv_data = 1.0 / static_cast<double>(6 * n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double data_term = 0.0;
  double sym_term = 0.0;
  Eigen::MatrixXd g_a, g_b;
  if (grad) {
    g_a.resize(6, n);
    g_b.resize(24, n);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const ControlMatrix B = reshape_b(b_out.col(k));
    const Wrench e = a_out.col(k) + B * controls.col(k) - wrenches.col(k);
    data_term += e.squaredNorm();
    if (cfg.lambda > 0.0) sym_term += symmetry_loss(B, cfg);
    if (grad) {
      g_a.col(k) = 2.0 * inv_data * e;
      ControlMatrix gB = 2.0 * inv_data * e * controls.col(k).transpose();
      if (cfg.lambda > 0.0) gB += inv_n * symmetry_loss_gradient(B, cfg);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) g_b(4 * i + j, k) = gB(i, j);
    }
  }
  if (grad) {
    Eigen::MatrixXd dh_a, dh_b;
    grad->a_head = model.a_head.backward(ta, g_a, &dh_a);
    grad->b_head = model.b_head.backward(tB, g_b, &dh_b);
    grad->backbone = model.backbone.backward(tb, dh_a + dh_b);
  }
  return data_term * inv_data + sym_term * inv_n;
}

double unstructured_loss(const UnstructuredModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& wrenches, Tape* grad) {
  const Eigen::Index n = inputs.cols();
  Network::Trace trace;
  const Eigen::MatrixXd out = model.net.forward(inputs, grad ? &trace : nullptr);
  const Eigen::MatrixXd e = out - wrenches;
  const double inv = 1.0 / static_cast<double>(6 * n);
  if (grad) *grad = model.net.backward(trace, 2.0 * inv * e);
  return e.squaredNorm() * inv;
}

Eigen::MatrixXd unstructured_inputs(const UnstructuredModel& model, const BatchMatrices& m) {
  Eigen::MatrixXd raw(m.features.rows() + 4, m.features.cols());
  raw << m.features, m.controls;
  return model.input.apply(raw);
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  if (cfg.epochs <= 1) return cfg.learning_rate;
  const double ratio = cfg.final_learning_rate / cfg.learning_rate;
  return cfg.learning_rate * std::pow(ratio, static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1));
}

void check_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw InvalidParameter("epochs and batch size must be positive");
  if (!(cfg.learning_rate > 0.0) || !(cfg.final_learning_rate > 0.0))
    throw InvalidParameter("learning rates must be positive");
}

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::AffineSym: return "affine_sym";
    case Variant::Affine: return "affine";
    case Variant::AffineNoWs: return "affine_no_ws";
    case Variant::Unstructured: return "unstructured";
    case Variant::UnstructuredNoWs: return "unstructured_no_ws";
  }
  return "affine_sym";
}

Variant variant_from_string(const std::string& name) {
  for (auto v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw InvalidParameter("unknown model variant: " + name);
}

bool is_affine(Variant v) { return v == Variant::AffineSym || v == Variant::Affine || v == Variant::AffineNoWs; }

bool uses_wing_sensors(Variant v) { return v != Variant::AffineNoWs && v != Variant::UnstructuredNoWs; }

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants{Variant::AffineSym, Variant::Affine, Variant::AffineNoWs,
                                             Variant::Unstructured, Variant::UnstructuredNoWs};
  return variants;
}

void SymmetryConfig::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (signs(i) != 1.0 && signs(i) != -1.0) throw InvalidParameter("symmetry signs must be +1 or -1");
    if (!(delta(i) > 0.0)) throw InvalidParameter("Huber thresholds must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParameter("symmetry weight must be non-negative");
}

Wrench symmetry_residual(const ControlMatrix& B, const Wrench& signs) {
  return B.col(0) + signs.cwiseProduct(B.col(1));
}

double symmetry_loss(const ControlMatrix& B, const SymmetryConfig& cfg) {
  cfg.validate();
  if (cfg.lambda == 0.0) return 0.0;
  const Wrench r = symmetry_residual(B, cfg.signs);
  double total = 0.0;
  for (int i = 0; i < 6; ++i) total += nn::huber(r(i), cfg.delta(i));
  return cfg.lambda * total;
}

ControlMatrix symmetry_loss_gradient(const ControlMatrix& B, const SymmetryConfig& cfg) {
  cfg.validate();
  ControlMatrix g = ControlMatrix::Zero();
  if (cfg.lambda == 0.0) return g;
  const Wrench r = symmetry_residual(B, cfg.signs);
  for (int i = 0; i < 6; ++i) {
    const double d = cfg.lambda * nn::huber_derivative(r(i), cfg.delta(i));
    g(i, 0) = d;
    g(i, 1) = d * cfg.signs(i);
  }
  return g;
}

Standardizer Standardizer::identity(Eigen::Index width) {
  return {Eigen::VectorXd::Zero(width), Eigen::VectorXd::Ones(width)};
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& columns) {
  if (columns.cols() == 0) throw DatasetError("cannot fit standardization on an empty split");
  Standardizer s;
  s.mean = columns.rowwise().mean();
  s.scale = ((columns.colwise() - s.mean).array().square().rowwise().mean()).sqrt();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale(i) > 1e-9)) s.scale(i) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& columns) const {
  if (columns.rows() != mean.size()) throw DimensionError("standardizer width mismatch");
  return scale.cwiseInverse().asDiagonal() * (columns.colwise() - mean);
}

std::vector<int> feature_indices(bool with_wing_sensors) {
  std::vector<int> idx(with_wing_sensors ? kObservationWidth : kFlowFeatureWidth);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

AffineModel AffineModel::create(const Architecture& arch, bool with_wing_sensors, std::uint64_t seed) {
  if (arch.hidden.empty()) throw InvalidParameter("backbone needs at least one hidden layer");
  AffineModel m;
  m.features = feature_indices(with_wing_sensors);
  m.input = Standardizer::identity(static_cast<Eigen::Index>(m.features.size()));
  std::vector<int> widths{static_cast<int>(m.features.size())};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  m.backbone = Network::glorot(widths, mix_seed(seed, 0), nn::Activation::Tanh, nn::Activation::Tanh);
  const std::array<int, 2> a_widths{arch.hidden.back(), 6};
  const std::array<int, 2> b_widths{arch.hidden.back(), 24};
  m.a_head = Network::glorot(a_widths, mix_seed(seed, 1));
  m.b_head = Network::glorot(b_widths, mix_seed(seed, 2));
  return m;
}

AffineModel::Prediction AffineModel::predict(const Observation& o) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(features.size()));
  for (std::size_t f = 0; f < features.size(); ++f) x(static_cast<Eigen::Index>(f)) = o(features[f]);
  const Eigen::VectorXd z = input.scale.cwiseInverse().cwiseProduct(x - input.mean);
  const Eigen::VectorXd h = backbone.forward(z);
  if (a_head.input_width() != h.size() || b_head.input_width() != h.size() || a_head.output_width() != 6 ||
      b_head.output_width() != 24)
    throw DimensionError("affine model heads do not match the backbone");
  return {Wrench(a_head.forward(h)), reshape_b(b_head.forward(h))};
}

Wrench AffineModel::predict_wrench(const Observation& o, const Control& u) const {
  const auto p = predict(o);
  return p.A + p.B * u;
}

UnstructuredModel UnstructuredModel::create(const Architecture& arch, bool with_wing_sensors, std::uint64_t seed) {
  UnstructuredModel m;
  m.features = feature_indices(with_wing_sensors);
  const int width = static_cast<int>(m.features.size()) + 4;
  m.input = Standardizer::identity(width);
  std::vector<int> widths{width};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(6);
  m.net = Network::glorot(widths, mix_seed(seed, 0));
  return m;
}

Wrench UnstructuredModel::predict_wrench(const Observation& o, const Control& u) const {
  const auto nf = static_cast<Eigen::Index>(features.size());
  Eigen::VectorXd x(nf + 4);
  for (Eigen::Index f = 0; f < nf; ++f) x(f) = o(features[static_cast<std::size_t>(f)]);
  x.tail(4) = u;
  const Eigen::VectorXd z = input.scale.cwiseInverse().cwiseProduct(x - input.mean);
  return Wrench(net.forward(z));
}

AffineModel::Prediction UnstructuredModel::linearize(const Observation& o, const Control& u_lin) const {
  const auto nf = static_cast<Eigen::Index>(features.size());
  Eigen::VectorXd x(nf + 4);
  for (Eigen::Index f = 0; f < nf; ++f) x(f) = o(features[static_cast<std::size_t>(f)]);
  x.tail(4) = u_lin;
  const Eigen::VectorXd z = input.scale.cwiseInverse().cwiseProduct(x - input.mean);
  // One column per output channel; an identity upstream yields every row
  // of the input Jacobian in a single backward pass.
  const Eigen::MatrixXd batch = z.replicate(1, 6);
  Network::Trace trace;
  const Eigen::MatrixXd out = net.forward(batch, &trace);
  Eigen::MatrixXd dz;
  net.backward(trace, Eigen::MatrixXd::Identity(6, 6), &dz);
  ControlMatrix B;
  for (int c = 0; c < 6; ++c)
    for (int j = 0; j < 4; ++j) B(c, j) = dz(nf + j, c) / input.scale(nf + j);
  const Wrench y = out.col(0);
  return {y - B * u_lin, B};
}

double training_loss(const AffineModel& model, std::span<const DynamicsSample> batch, const SymmetryConfig& cfg,
                     AffineGradients* grad) {
  if (batch.empty()) throw DatasetError("training batch is empty");
  cfg.validate();
  const auto m = gather(batch, model.features);
  return affine_loss(model, model.input.apply(m.features), m.controls, m.wrenches, cfg, grad);
}

double training_loss(const UnstructuredModel& model, std::span<const DynamicsSample> batch, Tape* grad) {
  if (batch.empty()) throw DatasetError("training batch is empty");
  const auto m = gather(batch, model.features);
  return unstructured_loss(model, unstructured_inputs(model, m), m.wrenches, grad);
}

std::pair<std::span<const DynamicsSample>, std::span<const DynamicsSample>> split_contiguous(
    std::span<const DynamicsSample> data, double validation_fraction) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw InvalidParameter("validation fraction must lie in [0, 1)");
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(data.size())));
  const auto n_train = data.size() - n_val;
  return {data.subspan(0, n_train), data.subspan(n_train)};
}

AffineModel train_affine(std::span<const DynamicsSample> train, const TrainConfig& cfg, bool with_wing_sensors,
                         const SymmetryConfig& symmetry, std::vector<double>* history) {
  check_train_config(cfg);
  symmetry.validate();
  if (train.empty()) throw DatasetError("training split is empty");
  AffineModel model = AffineModel::create(cfg.arch, with_wing_sensors, cfg.seed);
  const auto m = gather(train, model.features);
  model.input = Standardizer::fit(m.features);
  const Eigen::MatrixXd inputs = model.input.apply(m.features);

  nn::Adam<double> opt_backbone(model.backbone, {cfg.learning_rate});
  nn::Adam<double> opt_a(model.a_head, {cfg.learning_rate});
  nn::Adam<double> opt_b(model.b_head, {cfg.learning_rate});

  std::mt19937_64 rng(mix_seed(cfg.seed, 7));
  std::vector<Eigen::Index> order(train.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto n = static_cast<Eigen::Index>(train.size());
  AffineGradients grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    opt_backbone.set_learning_rate(lr);
    opt_a.set_learning_rate(lr);
    opt_b.set_learning_rate(lr);
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index nb = std::min<Eigen::Index>(cfg.batch_size, n - start);
      const std::span<const Eigen::Index> idx(order.data() + start, static_cast<std::size_t>(nb));
      epoch_loss += affine_loss(model, select_columns(inputs, idx), select_columns(m.controls, idx),
                                select_columns(m.wrenches, idx), symmetry, &grad);
      ++batches;
      opt_backbone.step(model.backbone, grad.backbone);
      opt_a.step(model.a_head, grad.a_head);
      opt_b.step(model.b_head, grad.b_head);
    }
    if (history) history->push_back(epoch_loss / batches);
  }
  if (!model.backbone.all_finite() || !model.a_head.all_finite() || !model.b_head.all_finite())
    throw NumericalError("training diverged");
  return model;
}

UnstructuredModel train_unstructured(std::span<const DynamicsSample> train, const TrainConfig& cfg,
                                     bool with_wing_sensors, std::vector<double>* history) {
  check_train_config(cfg);
  if (train.empty()) throw DatasetError("training split is empty");
  UnstructuredModel model = UnstructuredModel::create(cfg.arch, with_wing_sensors, cfg.seed);
  const auto m = gather(train, model.features);
  Eigen::MatrixXd raw(m.features.rows() + 4, m.features.cols());
  raw << m.features, m.controls;
  model.input = Standardizer::fit(raw);
  const Eigen::MatrixXd inputs = model.input.apply(raw);

  nn::Adam<double> opt(model.net, {cfg.learning_rate});
  std::mt19937_64 rng(mix_seed(cfg.seed, 7));
  std::vector<Eigen::Index> order(train.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto n = static_cast<Eigen::Index>(train.size());
  Tape grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_learning_rate(learning_rate_at(cfg, epoch));
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index nb = std::min<Eigen::Index>(cfg.batch_size, n - start);
      const std::span<const Eigen::Index> idx(order.data() + start, static_cast<std::size_t>(nb));
      epoch_loss += unstructured_loss(model, select_columns(inputs, idx), select_columns(m.wrenches, idx), &grad);
      ++batches;
      opt.step(model.net, grad);
    }
    if (history) history->push_back(epoch_loss / batches);
  }
  if (!model.net.all_finite()) throw NumericalError("training diverged");
  return model;
}

WrenchModel train_dynamics(const DynamicsDataset& dataset, const TrainConfig& cfg, Variant variant) {
  if (dataset.size() < 100) throw DatasetError("dynamics training needs at least 100 samples");
  const auto [train, val] = split_contiguous(dataset, cfg.validation_fraction);

  Eigen::Vector4d lo = Eigen::Vector4d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector4d hi = -lo;
  for (const auto& s : train) {
    lo = lo.cwiseMin(s.u);
    hi = hi.cwiseMax(s.u);
  }
  for (int j = 0; j < 4; ++j) {
    if (hi(j) - lo(j) < 1e-9)
      std::cerr << "warning: control " << kControlNames[static_cast<std::size_t>(j)]
                << " is constant in the training split; its effectiveness is unidentifiable\n";
  }

  WrenchModel out;
  std::vector<double> history;
  if (is_affine(variant)) {
    SymmetryConfig sym = cfg.symmetry;
    if (variant != Variant::AffineSym) sym.lambda = 0.0;
    out = WrenchModel(variant, train_affine(train, cfg, uses_wing_sensors(variant), sym, &history), sym);
  } else {
    out = WrenchModel(variant, train_unstructured(train, cfg, uses_wing_sensors(variant), &history));
  }
  out.loss_history = std::move(history);
  out.validation_rmse = val.empty() ? 0.0 : eval_rmse(out, val);
  return out;
}

WrenchModel::WrenchModel(Variant variant, AffineModel model, SymmetryConfig symmetry)
    : variant_(variant), symmetry_(symmetry), affine_(std::move(model)) {
  if (!is_affine(variant)) throw InvalidParameter("variant is not control-affine");
}

WrenchModel::WrenchModel(Variant variant, UnstructuredModel model)
    : variant_(variant), unstructured_(std::move(model)) {
  if (is_affine(variant)) throw InvalidParameter("variant is control-affine");
  symmetry_.lambda = 0.0;
}

Wrench WrenchModel::predict_wrench(const Observation& o, const Control& u) const {
  if (affine_) return affine_->predict_wrench(o, u);
  if (unstructured_) return unstructured_->predict_wrench(o, u);
  throw InvalidParameter("empty wrench model");
}

AffineModel::Prediction WrenchModel::local_affine(const Observation& o, const Control& u_lin) const {
  if (affine_) return affine_->predict(o);
  if (unstructured_) return unstructured_->linearize(o, u_lin);
  throw InvalidParameter("empty wrench model");
}

nlohmann::json WrenchModel::to_json() const {
  nlohmann::json doc;
  doc["version"] = "aeroalloc-dynamics-v1";
  doc["variant"] = to_string(variant_);
  doc["symmetry"] = {{"signs", vec(symmetry_.signs)}, {"lambda", symmetry_.lambda}, {"delta", vec(symmetry_.delta)}};
  doc["validation_rmse"] = validation_rmse;
  if (affine_) {
    doc["features"] = affine_->features;
    doc["input_mean"] = vec(affine_->input.mean);
    doc["input_scale"] = vec(affine_->input.scale);
    doc["b_layout"] = "row-major 6x4";
    doc["backbone"] = nn::to_json(affine_->backbone);
    doc["a_head"] = nn::to_json(affine_->a_head);
    doc["b_head"] = nn::to_json(affine_->b_head);
  } else if (unstructured_) {
    doc["features"] = unstructured_->features;
    doc["input_mean"] = vec(unstructured_->input.mean);
    doc["input_scale"] = vec(unstructured_->input.scale);
    doc["network"] = nn::to_json(unstructured_->net);
  }
  return doc;
}

WrenchModel WrenchModel::from_json(const nlohmann::json& doc) {
  if (doc.value("version", std::string{}) != "aeroalloc-dynamics-v1")
    throw InvalidParameter("unsupported dynamics model format");
  const Variant variant = variant_from_string(doc.at("variant").get<std::string>());
  SymmetryConfig sym;
  const auto& js = doc.at("symmetry");
  const auto signs = js.at("signs").get<std::vector<double>>();
  const auto delta = js.at("delta").get<std::vector<double>>();
  if (signs.size() != 6 || delta.size() != 6) throw DimensionError("symmetry vectors must have 6 entries");
  sym.signs = Eigen::Map<const Wrench>(signs.data());
  sym.delta = Eigen::Map<const Wrench>(delta.data());
  sym.lambda = js.at("lambda").get<double>();
  sym.validate();

  const auto features = doc.at("features").get<std::vector<int>>();
  for (int f : features) {
    if (f < 0 || f >= kObservationWidth) throw DimensionError("feature index out of range");
  }
  Standardizer input{from_vec(doc.at("input_mean").get<std::vector<double>>()),
                     from_vec(doc.at("input_scale").get<std::vector<double>>())};
  WrenchModel out;
  if (is_affine(variant)) {
    if (doc.value("b_layout", std::string{}) != "row-major 6x4") throw InvalidParameter("unknown B layout");
    AffineModel m{features, input, nn::network_from_json(doc.at("backbone")), nn::network_from_json(doc.at("a_head")),
                  nn::network_from_json(doc.at("b_head"))};
    if (m.input.mean.size() != static_cast<Eigen::Index>(features.size()) ||
        m.backbone.input_width() != static_cast<Eigen::Index>(features.size()))
      throw DimensionError("affine model input width mismatch");
    out = WrenchModel(variant, std::move(m), sym);
  } else {
    UnstructuredModel m{features, input, nn::network_from_json(doc.at("network"))};
    if (m.input.mean.size() != static_cast<Eigen::Index>(features.size() + 4) ||
        m.net.input_width() != m.input.mean.size() || m.net.output_width() != 6)
      throw DimensionError("unstructured model width mismatch");
    out = WrenchModel(variant, std::move(m));
  }
  out.validation_rmse = doc.value("validation_rmse", 0.0);
  return out;
}

void WrenchModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw DatasetError("cannot open " + path.string() + " for writing");
  os << to_json().dump(1) << '\n';
}

WrenchModel WrenchModel::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open " + path.string());
  return from_json(nlohmann::json::parse(is));
}

Wrench eval_channel_rmse(const WrenchModel& model, std::span<const DynamicsSample> data) {
  if (data.empty()) throw DatasetError("evaluation dataset is empty");
  Wrench acc = Wrench::Zero();
  for (const auto& s : data) acc += (model.predict_wrench(s.o, s.u) - s.y).cwiseAbs2();
  return (acc / static_cast<double>(data.size())).cwiseSqrt();
}

double eval_rmse(const WrenchModel& model, std::span<const DynamicsSample> data) {
  if (data.empty()) throw DatasetError("evaluation dataset is empty");
  double acc = 0.0;
  for (const auto& s : data) acc += (model.predict_wrench(s.o, s.u) - s.y).squaredNorm();
  return std::sqrt(acc / static_cast<double>(6 * data.size()));
}

double mean_symmetry_residual(const AffineModel& model, std::span<const DynamicsSample> data, const Wrench& signs) {
  if (data.empty()) throw DatasetError("evaluation dataset is empty");
  double acc = 0.0;
  for (const auto& s : data) acc += symmetry_residual(model.predict(s.o).B, signs).norm();
  return acc / static_cast<double>(data.size());
}

}  // namespace aeroalloc::dynamics
