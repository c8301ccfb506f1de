#pragma once

#include <array>
#include <memory>
#include <string>

#include "advrl/tensor.hpp"

namespace advrl {

struct EnvSpec {
  std::string name;
  int action_count = 2;
  std::array<int, 3> frame_shape = {0, 0, 0};  // H, W, C
  double reward_upper = 0.0;                   // R_u
  double reward_lower = 0.0;                   // R_l
  int max_steps = 200;
};

struct StepResult {
  Tensor frame;  // grayscale, values in [0,1]
  double reward = 0.0;
  bool done = false;
};

// Deterministic, seeded episodic environment. step() after done throws;
// render_frame() is a pure function of internal state.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual StepResult reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual Tensor render_frame() const = 0;
  virtual bool done() const = 0;
  virtual std::unique_ptr<Env> clone_fresh() const = 0;  // same spec, unstarted
};

// Registered names: "minipong", "gridchase", "tabular". max_steps <= 0 keeps
// the environment's default.
std::unique_ptr<Env> make_env(const std::string& name, int max_steps = 0);

// Ball/paddle rally on a 21x21 grid. The agent drives the right paddle
// (actions: stay/up/down); a scripted opponent holds the left. One point per
// ball leaving the grid; first to 21 points ends the episode. Returns lie in
// [-21, 21].
class MiniPong final : public Env {
 public:
  explicit MiniPong(int max_steps = 0);
  const EnvSpec& spec() const override { return spec_; }
  StepResult reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Tensor render_frame() const override;
  bool done() const override { return done_; }
  std::unique_ptr<Env> clone_fresh() const override;

  // State peeks used by the scripted reference policies and render tests.
  int ball_row() const { return ball_r_; }
  int ball_col() const { return ball_c_; }
  int agent_paddle_row() const { return agent_r_; }
  int opponent_paddle_row() const { return opp_r_; }
  int visible_entity_cells() const;

 private:
  void serve(int toward, int vertical);
  double advance_ball();  // one env step of ball motion; returns scored reward

  EnvSpec spec_;
  int ball_r_ = 0, ball_c_ = 0, dr_ = 1, dc_ = 1;
  int prev_ball_r_ = 0, prev_ball_c_ = 0;
  int serve_delay_ = 0;
  int agent_r_ = 0, opp_r_ = 0;
  int agent_score_ = 0, opp_score_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// Pellet collector chased by a slower pursuer on a 21x21 grid. +1 per pellet,
// episode ends on capture, full collection, or the step cap. Returns lie in
// [0, 20].
class GridChase final : public Env {
 public:
  explicit GridChase(int max_steps = 0);
  const EnvSpec& spec() const override { return spec_; }
  StepResult reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Tensor render_frame() const override;
  bool done() const override { return done_; }
  std::unique_ptr<Env> clone_fresh() const override;

  int pellets_left() const;
  int visible_entity_cells() const;

 private:
  EnvSpec spec_;
  int agent_r_ = 0, agent_c_ = 0;
  int pursuer_r_ = 0, pursuer_c_ = 0;
  std::vector<std::pair<int, int>> pellets_;
  int steps_ = 0;
  bool done_ = true;
};

// Small episodic MDP defined by explicit tables, observed as a one-hot frame.
// The tables are exposed so value iteration can be run against it as an
// exact oracle.
class TabularMdp final : public Env {
 public:
  struct Tables {
    int state_count = 0;
    int action_count = 0;
    std::vector<int> next;        // [s * A + a]
    std::vector<double> reward;   // [s * A + a]
    std::vector<bool> terminal;   // [s]
    std::vector<int> starts;      // reset cycles through these by seed
  };

  TabularMdp(std::string name, Tables tables, double reward_upper, double reward_lower,
             int max_steps = 0);

  // Fixed 8-state chain used as the DQN correctness oracle: two terminal ends
  // (0 pays 0.3, 7 pays 1.0), -0.05 per interior move, optimal policy is
  // "always right" from every interior state.
  static TabularMdp chain8(int max_steps = 0);

  const EnvSpec& spec() const override { return spec_; }
  StepResult reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Tensor render_frame() const override;
  bool done() const override { return done_; }
  std::unique_ptr<Env> clone_fresh() const override;

  const Tables& tables() const { return tables_; }
  int state() const { return state_; }

 private:
  EnvSpec spec_;
  Tables tables_;
  int state_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace advrl
