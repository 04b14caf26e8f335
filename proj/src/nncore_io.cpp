#include "aeroalloc/nncore_io.hpp"

#include <fstream>

namespace aeroalloc::nn {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw InvalidParameter("unknown activation tag: " + name);
}

nlohmann::json to_json(const Network<double>& net) {
  nlohmann::json doc;
  doc["version"] = kNetworkFormat;
  doc["widths"] = net.widths();
  auto activations = nlohmann::json::array();
  auto layers = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    activations.push_back(to_string(layer.activation));
    std::vector<double> weight;
    weight.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) weight.push_back(layer.weight(r, c));
    layers.push_back({{"weight", weight},
                      {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
  }
  doc["activations"] = activations;
  doc["layers"] = layers;
  return doc;
}

Network<double> network_from_json(const nlohmann::json& doc) {
  if (doc.value("version", std::string{}) != kNetworkFormat)
    throw InvalidParameter("unsupported network format, expected nncore-v1");
  const auto widths = doc.at("widths").get<std::vector<int>>();
  const auto& activations = doc.at("activations");
  const auto& layers = doc.at("layers");
  if (widths.size() < 2 || layers.size() + 1 != widths.size() || activations.size() != layers.size())
    throw DimensionError("network document widths and layers disagree");

  std::vector<Layer<double>> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto weight = layers[l].at("weight").get<std::vector<double>>();
    const auto bias = layers[l].at("bias").get<std::vector<double>>();
    const int rows = widths[l + 1];
    const int cols = widths[l];
    if (weight.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
        bias.size() != static_cast<std::size_t>(rows))
      throw DimensionError("layer parameter array has the wrong length");
    Layer<double> layer;
    layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        weight.data(), rows, cols);
    layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
    layer.activation = activation_from_string(activations[l].get<std::string>());
    out.push_back(std::move(layer));
  }
  return Network<double>(std::move(out));
}

void save_network(const Network<double>& net, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DatasetError("cannot open " + path.string() + " for writing");
  os << to_json(net).dump(1) << '\n';
}

Network<double> load_network(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open " + path.string());
  return network_from_json(nlohmann::json::parse(is));
}

}  // namespace aeroalloc::nn
