#pragma once

#include <memory>
#include <string>
#include <variant>

#include "advrl/net.hpp"
#include "advrl/rng.hpp"

namespace advrl {

// Attack-timing strategies compared against the learned attacker.
struct Uniform {
  double p = 0.5;  // per-step attack probability
};
struct StrategicallyTimed {
  double threshold = 0.5;  // attack when the softmax Q-gap exceeds this
};
struct LearnedAttacker {
  std::shared_ptr<const LayerStack> policy;  // 2-action net over {None, Attack}
};

using TimingStrategy = std::variant<Uniform, StrategicallyTimed, LearnedAttacker>;

std::string strategy_label(const TimingStrategy& s);

// Softmax gap of the Q-vector: max softmax(Q) - min softmax(Q), in [0, 1).
double attack_score(const LayerStack& net, const Tensor& s);

// Same computation read against a softmax policy head; coincides with
// attack_score for a Q-network.
double policy_score(const LayerStack& net, const Tensor& s);

// Sample variance of the Q-vector (1/(|A|-1) normalization).
double q_variance(const LayerStack& net, const Tensor& s);

// True = launch an attack this step. `net` is the victim network the scores
// are computed against; the learned strategy consults its own policy.
bool decide(const TimingStrategy& strategy, const LayerStack& net, const Tensor& s, Rng& rng);

}  // namespace advrl
