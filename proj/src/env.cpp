#include "advrl/env.hpp"

#include <stdexcept>

namespace advrl {

std::unique_ptr<Env> make_env(const std::string& name, int max_steps) {
  if (name == "minipong") return std::make_unique<MiniPong>(max_steps);
  if (name == "gridchase") return std::make_unique<GridChase>(max_steps);
  if (name == "tabular") return std::make_unique<TabularMdp>(TabularMdp::chain8(max_steps));
  throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace advrl
