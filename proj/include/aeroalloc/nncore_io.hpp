#pragma once

#include "aeroalloc/nncore.hpp"

#include <json.hpp>

#include <filesystem>

namespace aeroalloc::nn {

inline constexpr const char* kNetworkFormat = "nncore-v1";

/// {"version": "nncore-v1", "widths": [...], "activations": [...],
///  "layers": [{"weight": [row-major], "bias": [...]}, ...]}
nlohmann::json to_json(const Network<double>& net);
Network<double> network_from_json(const nlohmann::json& doc);

void save_network(const Network<double>& net, const std::filesystem::path& path);
Network<double> load_network(const std::filesystem::path& path);

}  // namespace aeroalloc::nn
