#include "advrl/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace advrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t logical_index) const {
  if (logical_index >= storage_.size()) throw std::out_of_range("replay index");
  if (storage_.size() < capacity_) return storage_[logical_index];
  return storage_[(head_ + logical_index) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > storage_.size())
    throw std::invalid_argument("replay sample: batch larger than buffer contents");
  // Partial Fisher-Yates over an index vector: uniform without replacement.
  std::vector<std::size_t> idx(storage_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(static_cast<int>(idx.size() - i)));
    std::swap(idx[i], idx[j]);
    out.push_back(&storage_[idx[i]]);
  }
  return out;
}

double EpsilonSchedule::value(long t) const {
  const double span = fraction * static_cast<double>(total_steps);
  if (span <= 0.0 || t <= 0) return t > 0 ? end : start;
  const double frac = std::min(1.0, static_cast<double>(t) / span);
  return start + (end - start) * frac;
}

void DqnConfig::validate() const {
  if (learning_rate <= 0 || batch_size <= 0 || buffer_capacity == 0 || gamma <= 0 ||
      update_every <= 0 || target_sync_every <= 0 || learn_start_steps < 0 || max_steps <= 0)
    throw std::invalid_argument("dqn config: all fields must be positive");
  if (static_cast<std::size_t>(batch_size) > buffer_capacity)
    throw std::invalid_argument("dqn config: batch_size exceeds buffer_capacity");
  optimizer_kind_from_string(optimizer);
}

Optimizer DqnConfig::make_optimizer() const {
  return optimizer_kind_from_string(optimizer) == OptimizerKind::Sgd
             ? Optimizer::sgd(learning_rate)
             : Optimizer::adam(learning_rate);
}

LayerStack build_net(const EnvSpec& env_spec, const NetConfig& cfg, Rng& rng, int action_count) {
  const int actions = action_count > 0 ? action_count : env_spec.action_count;
  const int channels = env_spec.frame_shape[2] * std::max(1, cfg.frame_stack);
  const std::vector<int> input_shape = {env_spec.frame_shape[0], env_spec.frame_shape[1], channels};

  if (cfg.kind == "custom") {
    return LayerStack::make(input_shape, cfg.layers, rng);
  }
  if (cfg.kind == "linear") {
    return LayerStack::make(input_shape, {Dense{numel_of(input_shape), actions}}, rng);
  }
  if (cfg.kind == "desk") {
    // One 5x5 stride-2 conv keeps enough spatial resolution to separate
    // single-cell entities on a 21x21 board; a second stride-2 conv was
    // measured to cap a supervised ball-tracking probe at ~63% accuracy.
    std::vector<LayerSpec> layers;
    std::vector<int> shape = input_shape;
    layers.push_back(Conv2D{8, 5, 2});
    shape = layer_output_shape(layers.back(), shape);
    layers.push_back(Relu{});
    layers.push_back(Dense{numel_of(shape), 64});
    layers.push_back(Relu{});
    layers.push_back(Dense{64, actions});
    return LayerStack::make(input_shape, layers, rng);
  }
  if (cfg.kind == "atari") {
    // The full-fidelity stack for 84x84 inputs: (32,8,8,4), (64,4,4,2),
    // (64,3,3,1), then (3136,512) and (512,|A|).
    std::vector<LayerSpec> layers;
    std::vector<int> shape = input_shape;
    layers.push_back(Conv2D{32, 8, 4});
    shape = layer_output_shape(layers.back(), shape);
    layers.push_back(Relu{});
    layers.push_back(Conv2D{64, 4, 2});
    shape = layer_output_shape(layers.back(), shape);
    layers.push_back(Relu{});
    layers.push_back(Conv2D{64, 3, 1});
    shape = layer_output_shape(layers.back(), shape);
    layers.push_back(Relu{});
    layers.push_back(Dense{numel_of(shape), 512});
    layers.push_back(Relu{});
    layers.push_back(Dense{512, actions});
    return LayerStack::make(input_shape, layers, rng);
  }
  throw std::invalid_argument("unknown net kind: " + cfg.kind);
}

void FrameStack::reset(const Tensor& frame) {
  frames_.assign(static_cast<std::size_t>(std::max(1, depth_)), frame);
  rebuild();
}

const Tensor& FrameStack::push(const Tensor& frame) {
  if (frames_.empty()) {
    reset(frame);
    return state_;
  }
  frames_.erase(frames_.begin());
  frames_.push_back(frame);
  rebuild();
  return state_;
}

void FrameStack::rebuild() {
  if (depth_ <= 1) {
    state_ = frames_.back();
    return;
  }
  const Tensor& last = frames_.back();
  const int h = last.shape[0], w = last.shape[1], c = last.shape[2];
  state_ = Tensor::zeros({h, w, c * depth_});
  for (int k = 0; k < depth_; ++k) {
    const Tensor& f = frames_[k];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ci = 0; ci < c; ++ci)
          state_.data[(y * w + x) * c * depth_ + k * c + ci] = f.data[(y * w + x) * c + ci];
  }
}

int select_action(const LayerStack& net, const Tensor& s, double epsilon, Rng& rng) {
  const int actions = net.output_size();
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_int(actions);
  return argmax(forward(net, s));
}

std::vector<double> td_targets(const LayerStack& target_net,
                               std::span<const Transition* const> batch, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Transition* t : batch) {
    if (t->done) {
      y.push_back(t->r);
    } else {
      const Tensor q = forward(target_net, t->s_next);
      y.push_back(t->r + gamma * *std::max_element(q.data.begin(), q.data.end()));
    }
  }
  return y;
}

double dqn_update(LayerStack& net, const LayerStack& target_net, const ReplayBuffer& buffer,
                  const DqnConfig& cfg, Optimizer& opt, Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size))
    throw std::invalid_argument("dqn_update: buffer smaller than batch size");
  const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
  const auto targets = td_targets(target_net, batch, cfg.gamma);

  std::vector<Tensor> grad_acc;
  grad_acc.reserve(net.params.size());
  for (const auto& p : net.params) grad_acc.push_back(Tensor::zeros(p.shape));

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    GradientTape tape;
    const Tensor q = forward(net, batch[j]->s, &tape);
    const double err = q.data[batch[j]->a] - targets[j];
    loss += err * err * inv_b;
    Tensor out_grad = Tensor::zeros(q.shape);
    out_grad.data[batch[j]->a] = 2.0 * err * inv_b;
    const auto grads = backward_params(net, tape, out_grad);
    for (std::size_t p = 0; p < grad_acc.size(); ++p) grad_acc[p] += grads[p];
  }
  opt.step(net.params, grad_acc);
  return loss;
}

void sync_target(const LayerStack& net, LayerStack& target_net) {
  if (!net.same_architecture(target_net))
    throw std::invalid_argument("sync_target: architecture mismatch");
  target_net.params = net.params;
}

TrainResult train_victim(Env& env, const DqnConfig& cfg, const NetConfig& net_cfg,
                         std::uint64_t seed, const std::function<void(const EpisodePoint&)>& on_episode) {
  cfg.validate();
  Rng init_rng(derive_seed(seed, "net-init"));
  Rng train_rng(derive_seed(seed, "train"));

  TrainResult result{build_net(env.spec(), net_cfg, init_rng), cfg.make_optimizer(), {}};
  LayerStack& net = result.net;
  LayerStack target = net;
  ReplayBuffer buffer(cfg.buffer_capacity);
  FrameStack stacker(std::max(1, net_cfg.frame_stack));

  EpsilonSchedule schedule = cfg.epsilon;
  if (schedule.total_steps <= 0) schedule.total_steps = cfg.max_steps;

  int episode = 0;
  StepResult sr = env.reset(derive_seed(seed, "episode-0"));
  stacker.reset(sr.frame);
  Tensor s = stacker.state();
  double ep_return = 0.0;
  double loss_sum = 0.0;
  long loss_count = 0;

  for (long t = 0; t < cfg.max_steps; ++t) {
    const double eps = schedule.value(t);
    const int a = select_action(net, s, eps, train_rng);
    const StepResult step = env.step(a);
    const Tensor s_next = stacker.push(step.frame);
    buffer.push({s, a, step.reward, s_next, step.done});
    ep_return += step.reward;

    if (t >= cfg.learn_start_steps && (t + 1) % cfg.update_every == 0 &&
        buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      const double loss = dqn_update(net, target, buffer, cfg, result.optimizer, train_rng);
      if (!std::isfinite(loss))
        throw std::runtime_error("dqn training diverged: non-finite loss at step " +
                                 std::to_string(t));
      loss_sum += loss;
      ++loss_count;
    }
    if ((t + 1) % cfg.target_sync_every == 0) sync_target(net, target);

    if (step.done) {
      EpisodePoint point{episode, ep_return, eps, loss_count > 0 ? loss_sum / loss_count : 0.0};
      result.curve.push_back(point);
      if (on_episode) on_episode(point);
      ++episode;
      ep_return = 0.0;
      loss_sum = 0.0;
      loss_count = 0;
      sr = env.reset(derive_seed(seed, "episode-" + std::to_string(episode)));
      stacker.reset(sr.frame);
      s = stacker.state();
    } else {
      s = s_next;
    }
  }
  return result;
}

double greedy_episode_return(Env& env, const LayerStack& net, const NetConfig& net_cfg,
                             std::uint64_t seed) {
  FrameStack stacker(std::max(1, net_cfg.frame_stack));
  StepResult sr = env.reset(seed);
  stacker.reset(sr.frame);
  double ret = 0.0;
  while (!sr.done) {
    const int a = argmax(forward(net, stacker.state()));
    sr = env.step(a);
    stacker.push(sr.frame);
    ret += sr.reward;
  }
  return ret;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<EpisodePoint>& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open curve csv: " + path.string());
  os << "episode,return,epsilon,loss_mean\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.episode, p.episode_return,
                  p.epsilon, p.loss_mean);
    os << buf;
  }
}

}  // namespace advrl
