#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include <json.hpp>

#include "advrl/net.hpp"
#include "advrl/optim.hpp"

namespace advrl {

// Self-describing network container: layer specs, named parameter arrays,
// optimizer state and the RNG seed the run was keyed by. Versioned binary
// format, byte-exact on a save/load/save round trip.
struct Checkpoint {
  LayerStack net;
  std::optional<Optimizer> optimizer;
  std::uint64_t rng_seed = 0;
  std::map<std::string, std::string> meta;  // free-form run provenance (env, role, method)
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// JSON forms of layer specs, shared with the experiment config.
nlohmann::json layer_to_json(const LayerSpec& layer);
LayerSpec layer_from_json(const nlohmann::json& j);

}  // namespace advrl
