#include <stdexcept>

#include "advrl/env.hpp"
#include "advrl/rng.hpp"

namespace advrl {

TabularMdp::TabularMdp(std::string name, Tables tables, double reward_upper, double reward_lower,
                       int max_steps)
    : tables_(std::move(tables)) {
  const int n = tables_.state_count;
  const int a = tables_.action_count;
  if (n <= 0 || a <= 0) throw std::invalid_argument("tabular: empty tables");
  if (static_cast<int>(tables_.next.size()) != n * a ||
      static_cast<int>(tables_.reward.size()) != n * a ||
      static_cast<int>(tables_.terminal.size()) != n || tables_.starts.empty())
    throw std::invalid_argument("tabular: table sizes inconsistent");

  spec_.name = std::move(name);
  spec_.action_count = a;
  spec_.frame_shape = {1, n, 1};
  spec_.reward_upper = reward_upper;
  spec_.reward_lower = reward_lower;
  spec_.max_steps = max_steps > 0 ? max_steps : 50;
}

TabularMdp TabularMdp::chain8(int max_steps) {
  Tables t;
  t.state_count = 8;
  t.action_count = 2;  // 0 = left, 1 = right
  t.next.assign(16, 0);
  t.reward.assign(16, 0.0);
  t.terminal.assign(8, false);
  t.terminal[0] = true;
  t.terminal[7] = true;
  for (int s = 0; s < 8; ++s) {
    t.next[s * 2 + 0] = s > 0 ? s - 1 : 0;
    t.next[s * 2 + 1] = s < 7 ? s + 1 : 7;
    if (s >= 1 && s <= 6) {
      t.reward[s * 2 + 0] = (s - 1 == 0) ? 0.3 : -0.05;
      t.reward[s * 2 + 1] = (s + 1 == 7) ? 1.0 : -0.05;
    }
  }
  t.starts = {1, 2, 3, 4, 5, 6};
  const int cap = max_steps > 0 ? max_steps : 50;
  return TabularMdp("chain8", std::move(t), 1.0, -0.05 * cap, cap);
}

std::unique_ptr<Env> TabularMdp::clone_fresh() const {
  return std::make_unique<TabularMdp>(spec_.name, tables_, spec_.reward_upper, spec_.reward_lower,
                                      spec_.max_steps);
}

StepResult TabularMdp::reset(std::uint64_t seed) {
  state_ = tables_.starts[splitmix64(seed) % tables_.starts.size()];
  steps_ = 0;
  done_ = false;
  return {render_frame(), 0.0, false};
}

StepResult TabularMdp::step(int action) {
  if (done_) throw std::logic_error("tabular: step after episode end");
  if (action < 0 || action >= spec_.action_count)
    throw std::invalid_argument("tabular: action out of range");
  const int idx = state_ * tables_.action_count + action;
  const double reward = tables_.reward[idx];
  state_ = tables_.next[idx];
  ++steps_;
  done_ = tables_.terminal[state_] || steps_ >= spec_.max_steps;
  return {render_frame(), reward, done_};
}

Tensor TabularMdp::render_frame() const {
  Tensor frame = Tensor::zeros({1, tables_.state_count, 1});
  frame.data[state_] = 1.0;
  return frame;
}

}  // namespace advrl
