#pragma once

#include <filesystem>
#include <functional>
#include <span>

#include "advrl/env.hpp"
#include "advrl/net.hpp"
#include "advrl/optim.hpp"
#include "advrl/rng.hpp"

namespace advrl {

struct Transition {
  Tensor s;
  int a = 0;
  double r = 0.0;
  Tensor s_next;
  bool done = false;
};

// Fixed-capacity ring; oldest transitions are evicted first. Minibatches are
// drawn uniformly without replacement within a batch.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t logical_index) const;  // 0 = oldest
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write slot once full
  std::vector<Transition> storage_;
};

// Linear decay from start to end over fraction * total_steps, constant after.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  double fraction = 0.1;
  long total_steps = 0;
  double value(long t) const;
};

struct DqnConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  std::size_t buffer_capacity = 20000;
  double gamma = 0.99;
  int update_every = 4;
  int target_sync_every = 100;
  long learn_start_steps = 500;
  long max_steps = 200000;
  EpsilonSchedule epsilon{1.0, 0.01, 0.1, 0};  // total_steps filled from max_steps
  std::string optimizer = "adam";
  void validate() const;
  Optimizer make_optimizer() const;
};

// How a Q-network is built for an environment. kind "desk" is the small
// conv stack for 21x21 frames; "linear" is a single dense layer (tabular
// one-hot inputs); "custom" uses the explicit layer list. The paper-sized
// 84x84 stack is expressible as a custom list.
struct NetConfig {
  std::string kind = "desk";
  std::vector<LayerSpec> layers;  // used when kind == "custom"
  int frame_stack = 1;
};

LayerStack build_net(const EnvSpec& env_spec, const NetConfig& cfg, Rng& rng, int action_count = 0);

// Keeps the last `depth` frames concatenated along the channel axis.
class FrameStack {
 public:
  explicit FrameStack(int depth) : depth_(depth) {}
  void reset(const Tensor& frame);
  const Tensor& push(const Tensor& frame);
  const Tensor& state() const { return state_; }

 private:
  void rebuild();

  int depth_;
  std::vector<Tensor> frames_;
  Tensor state_;
};

// Epsilon-greedy over the net's Q-vector; greedy ties break to the lowest
// action index.
int select_action(const LayerStack& net, const Tensor& s, double epsilon, Rng& rng);

// y_j = r_j for terminal transitions, else r_j + gamma * max_a' Qhat(s', a').
std::vector<double> td_targets(const LayerStack& target_net,
                               std::span<const Transition* const> batch, double gamma);

// One optimizer step on the mean squared TD error of a sampled minibatch.
// Only the taken action's Q-value receives gradient. Returns the loss.
double dqn_update(LayerStack& net, const LayerStack& target_net, const ReplayBuffer& buffer,
                  const DqnConfig& cfg, Optimizer& opt, Rng& rng);

// Snapshot: target <- net parameters (architectures must match).
void sync_target(const LayerStack& net, LayerStack& target_net);

struct EpisodePoint {
  int episode = 0;
  double episode_return = 0.0;
  double epsilon = 0.0;
  double loss_mean = 0.0;
};

struct TrainResult {
  LayerStack net;
  Optimizer optimizer;
  std::vector<EpisodePoint> curve;
};

// Full DQN training of the victim on its environment. Deterministic per
// (config, seed). Throws on divergence (non-finite loss).
TrainResult train_victim(Env& env, const DqnConfig& cfg, const NetConfig& net_cfg,
                         std::uint64_t seed,
                         const std::function<void(const EpisodePoint&)>& on_episode = {});

// Greedy (epsilon = 0) rollout; returns the episode return.
double greedy_episode_return(Env& env, const LayerStack& net, const NetConfig& net_cfg,
                             std::uint64_t seed);

void write_curve_csv(const std::filesystem::path& path, const std::vector<EpisodePoint>& curve);

}  // namespace advrl
