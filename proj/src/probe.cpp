#include "aeroalloc/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace aeroalloc::probe {

NormalizedPressures normalize(const ProbePressures& p, double epsilon_dp) {
  if (!p.allFinite()) throw InvalidParameter("probe pressures must be finite");
  const double p_max = p.maxCoeff();
  const double p_min = p.minCoeff();
  const double dp = p_max - p_min;
  if (!(dp > epsilon_dp)) throw NoFlowError("probe pressure spread below the no-flow threshold");
  NormalizedPressures out;
  out.delta_p = dp;
  for (int i = 0; i < 5; ++i) {
    // The extreme taps map to exactly 0 and 1.
    if (p(i) == p_max) {
      out.cp(i) = 0.0;
    } else if (p(i) == p_min) {
      out.cp(i) = 1.0;
    } else {
      out.cp(i) = (p_max - p(i)) / dp;
    }
  }
  return out;
}

double pressure_correction(double airspeed, double delta_p, AirDensity rho) {
  if (!(delta_p > 0.0) || !(rho.rho > 0.0)) throw InvalidParameter("pressure spread and density must be positive");
  return 0.5 * rho.rho * airspeed * airspeed / delta_p;
}

double reconstruct_airspeed(double cd, double delta_p, AirDensity rho) {
  if (!(cd > 0.0)) throw InvalidParameter("pressure correction must be positive");
  if (!(delta_p > 0.0)) throw InvalidParameter("pressure spread must be positive");
  if (!(rho.rho > 0.0)) throw InvalidParameter("air density must be positive");
  return std::sqrt(2.0 * delta_p * cd / rho.rho);
}

CalibrationOutput calibrate(const Network& model, const NormalizedPressures& np) {
  if (model.input_width() != 5 || model.output_width() != 3)
    throw DimensionError("calibration model must map 5 inputs to 3 outputs");
  const Eigen::VectorXd y = model.forward(Eigen::VectorXd(np.cp));
  return {y(0), y(1), y(2)};
}

FlowState estimate_flow(const Network& model, const ProbePressures& p, AirDensity rho, double epsilon_dp) {
  const auto np = normalize(p, epsilon_dp);
  const auto out = calibrate(model, np);
  return {reconstruct_airspeed(out.cd, np.delta_p, rho), out.alpha, out.beta};
}

namespace {

bool sample_less(const CalibrationSample& a, const CalibrationSample& b) {
  const auto key = [](const CalibrationSample& s) {
    std::array<double, 8> k{};
    for (int i = 0; i < 5; ++i) k[static_cast<std::size_t>(i)] = s.pressures(i);
    k[5] = s.truth.airspeed;
    k[6] = s.truth.alpha;
    k[7] = s.truth.beta;
    return k;
  };
  return key(a) < key(b);
}

}  // namespace

Eigen::Vector3d calibration_target(const CalibrationSample& sample, AirDensity rho, double epsilon_dp) {
  const auto np = normalize(sample.pressures, epsilon_dp);
  return {pressure_correction(sample.truth.airspeed, np.delta_p, rho), sample.truth.alpha, sample.truth.beta};
}

double regression_loss(const Network& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       nn::GradientTape<double>* grad) {
  if (inputs.cols() == 0) throw DatasetError("regression batch is empty");
  if (targets.rows() != model.output_width() || targets.cols() != inputs.cols())
    throw DimensionError("regression targets do not match the model output");
  Network::Trace trace;
  const Eigen::MatrixXd err = model.forward(inputs, grad ? &trace : nullptr) - targets;
  const double inv = 1.0 / static_cast<double>(err.size());
  if (grad) *grad = model.backward(trace, 2.0 * inv * err);
  return err.squaredNorm() * inv;
}

CalibrationTrainResult train_calibration(std::span<const CalibrationSample> dataset,
                                         const CalibrationTrainConfig& config) {
  if (dataset.empty()) throw DatasetError("calibration dataset is empty");
  if (config.epochs < 1 || config.batch_size < 1) throw InvalidParameter("epochs and batch size must be positive");

  std::vector<CalibrationSample> samples(dataset.begin(), dataset.end());
  if (config.canonical_order) std::stable_sort(samples.begin(), samples.end(), sample_less);

  CalibrationTrainResult result;
  std::vector<Eigen::Matrix<double, 5, 1>> inputs;
  std::vector<Eigen::Vector3d> targets;
  for (const auto& s : samples) {
    NormalizedPressures np;
    try {
      np = normalize(s.pressures, config.epsilon_dp);
    } catch (const NoFlowError&) {
      ++result.skipped;
      continue;
    }
    inputs.push_back(np.cp);
    targets.emplace_back(pressure_correction(s.truth.airspeed, np.delta_p, config.rho), s.truth.alpha,
                         s.truth.beta);
  }
  if (inputs.empty()) throw DatasetError("every calibration sample is degenerate (no flow)");

  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd X(5, n);
  Eigen::MatrixXd T(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    X.col(k) = inputs[static_cast<std::size_t>(k)];
    T.col(k) = targets[static_cast<std::size_t>(k)];
  }

  // Train against standardized targets; the scaling is folded back into the
  // output layer at the end so the model emits (Cd, alpha, beta) directly.
  const Eigen::Vector3d mean = T.rowwise().mean();
  Eigen::Vector3d scale = ((T.colwise() - mean).array().square().rowwise().mean()).sqrt();
  for (int i = 0; i < 3; ++i) {
    if (scale(i) < 1e-12) scale(i) = 1.0;
  }
  const Eigen::MatrixXd Ts = scale.cwiseInverse().asDiagonal() * (T.colwise() - mean);

  std::vector<int> widths{5};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(3);
  Network net = Network::glorot(widths, config.seed);
  nn::Adam<double> opt(net, {config.learning_rate});

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double decay = std::pow(config.final_learning_rate / config.learning_rate, 1.0 / std::max(1, config.epochs - 1));

  nn::GradientTape<double> grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    opt.set_learning_rate(config.learning_rate * std::pow(decay, epoch));
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index nb = std::min<Eigen::Index>(config.batch_size, n - start);
      Eigen::MatrixXd xb(5, nb);
      Eigen::MatrixXd tb(3, nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        const auto idx = order[static_cast<std::size_t>(start + k)];
        xb.col(k) = X.col(idx);
        tb.col(k) = Ts.col(idx);
      }
      regression_loss(net, xb, tb, &grad);
      opt.step(net, grad);
    }
    const Eigen::MatrixXd err = scale.asDiagonal() * (net.forward(X) - Ts);
    result.loss_history.push_back(err.squaredNorm() / static_cast<double>(3 * n));
  }

  auto& last = net.mutable_layers().back();
  last.weight = scale.asDiagonal() * last.weight;
  last.bias = scale.cwiseProduct(last.bias) + mean;
  result.model = std::move(net);
  return result;
}

}  // namespace aeroalloc::probe
