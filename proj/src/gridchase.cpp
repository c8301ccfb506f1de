#include <algorithm>
#include <stdexcept>

#include "advrl/env.hpp"
#include "advrl/rng.hpp"

namespace advrl {

namespace {

constexpr int kGrid = 21;
constexpr int kPellets = 20;
constexpr int kDefaultMaxSteps = 300;

constexpr double kPelletShade = 0.33;
constexpr double kPursuerShade = 0.66;
constexpr double kAgentShade = 1.0;

int clamp_grid(int v) { return std::clamp(v, 0, kGrid - 1); }

}  // namespace

GridChase::GridChase(int max_steps) {
  spec_.name = "gridchase";
  spec_.action_count = 4;  // up / down / left / right
  spec_.frame_shape = {kGrid, kGrid, 1};
  spec_.reward_upper = static_cast<double>(kPellets);
  spec_.reward_lower = 0.0;
  spec_.max_steps = max_steps > 0 ? max_steps : kDefaultMaxSteps;
}

std::unique_ptr<Env> GridChase::clone_fresh() const {
  return std::make_unique<GridChase>(spec_.max_steps);
}

StepResult GridChase::reset(std::uint64_t seed) {
  agent_r_ = kGrid / 2;
  agent_c_ = kGrid / 2;
  pursuer_r_ = 0;
  pursuer_c_ = 0;
  steps_ = 0;
  done_ = false;

  pellets_.clear();
  std::uint64_t x = seed;
  while (static_cast<int>(pellets_.size()) < kPellets) {
    x = splitmix64(x);
    const int r = static_cast<int>(x % kGrid);
    const int c = static_cast<int>((x >> 16) % kGrid);
    if (r == agent_r_ && c == agent_c_) continue;
    if (r == pursuer_r_ && c == pursuer_c_) continue;
    if (std::find(pellets_.begin(), pellets_.end(), std::make_pair(r, c)) != pellets_.end())
      continue;
    pellets_.emplace_back(r, c);
  }
  return {render_frame(), 0.0, false};
}

StepResult GridChase::step(int action) {
  if (done_) throw std::logic_error("gridchase: step after episode end");
  if (action < 0 || action >= spec_.action_count)
    throw std::invalid_argument("gridchase: action out of range");

  switch (action) {
    case 0: agent_r_ = clamp_grid(agent_r_ - 1); break;
    case 1: agent_r_ = clamp_grid(agent_r_ + 1); break;
    case 2: agent_c_ = clamp_grid(agent_c_ - 1); break;
    case 3: agent_c_ = clamp_grid(agent_c_ + 1); break;
  }

  double reward = 0.0;
  auto it = std::find(pellets_.begin(), pellets_.end(), std::make_pair(agent_r_, agent_c_));
  if (it != pellets_.end()) {
    pellets_.erase(it);
    reward = 1.0;
  }

  // Pursuer tracks at one-third speed, larger-gap axis first (row on ties).
  if (steps_ % 3 == 0 && !(pursuer_r_ == agent_r_ && pursuer_c_ == agent_c_)) {
    const int dr = agent_r_ - pursuer_r_;
    const int dcol = agent_c_ - pursuer_c_;
    if (std::abs(dr) >= std::abs(dcol) && dr != 0)
      pursuer_r_ += dr > 0 ? 1 : -1;
    else if (dcol != 0)
      pursuer_c_ += dcol > 0 ? 1 : -1;
  }

  ++steps_;
  const bool caught = pursuer_r_ == agent_r_ && pursuer_c_ == agent_c_;
  done_ = caught || pellets_.empty() || steps_ >= spec_.max_steps;
  return {render_frame(), reward, done_};
}

Tensor GridChase::render_frame() const {
  Tensor frame = Tensor::zeros({kGrid, kGrid, 1});
  for (const auto& [r, c] : pellets_) frame.data[r * kGrid + c] = kPelletShade;
  frame.data[pursuer_r_ * kGrid + pursuer_c_] = kPursuerShade;
  frame.data[agent_r_ * kGrid + agent_c_] = kAgentShade;
  return frame;
}

int GridChase::pellets_left() const { return static_cast<int>(pellets_.size()); }

int GridChase::visible_entity_cells() const {
  int cells = static_cast<int>(pellets_.size()) + 2;
  const bool pursuer_on_pellet =
      std::find(pellets_.begin(), pellets_.end(), std::make_pair(pursuer_r_, pursuer_c_)) !=
      pellets_.end();
  const bool agent_on_pellet =
      std::find(pellets_.begin(), pellets_.end(), std::make_pair(agent_r_, agent_c_)) !=
      pellets_.end();
  if (pursuer_on_pellet) --cells;
  if (agent_on_pellet) --cells;  // agent cell pellets are collected, but guard anyway
  if (pursuer_r_ == agent_r_ && pursuer_c_ == agent_c_) --cells;
  return cells;
}

}  // namespace advrl
