#pragma once

#include <string>

#include "advrl/net.hpp"

namespace advrl {

enum class AttackMethod { Fgsm, Pgd, Cw };

AttackMethod attack_method_from_string(const std::string& s);
std::string to_string(AttackMethod m);

// Crafting parameters for the three white-box observation attacks. The
// default L-inf budget is sized so that attacks on a trained victim's
// high-confidence frames can fail: a larger budget flips every frame and
// collapses the effectiveness/stealth trade-off the timing policies navigate.
struct AttackSpec {
  AttackMethod method = AttackMethod::Pgd;
  double epsilon = 0.03;         // L-inf budget (FGSM/PGD)
  int pgd_steps = 10;
  double pgd_step_size = 0.0075;  // beta = epsilon / 4
  double cw_constant = 1.0;      // c
  double cw_confidence = 0.0;    // kappa
  int cw_iters = 50;
  double cw_lr = 0.01;
  void validate() const;

  // Crafting cost as forward+backward passes per craft() call.
  long op_count() const;
};

struct AttackResult {
  Tensor adv_frame;
  double linf_dist = 0.0;
  double l2_dist = 0.0;
  bool success = false;   // victim argmax changed
  int iterations_used = 0;
  long op_count = 0;      // forward+backward passes spent crafting
};

// Cross-entropy of softmax(Q(frame)) against the given action, and its
// gradient with respect to the frame.
struct AttackLoss {
  double loss = 0.0;
  Tensor input_grad;
};
AttackLoss attack_loss(const LayerStack& net, const Tensor& frame, int label_action);

// Single signed-gradient step of size epsilon, clamped to the [0,1] box.
AttackResult fgsm(const LayerStack& net, const Tensor& frame, const AttackSpec& spec);

// Iterated signed-gradient steps, re-projected onto the L-inf ball around the
// original frame after every step. Starts from the clean frame.
AttackResult pgd(const LayerStack& net, const Tensor& frame, const AttackSpec& spec);

// Untargeted Carlini-Wagner L2: Adam on the tanh reparameterization,
// minimizing squared L2 distance plus c * margin hinge. Returns the smallest-
// distance iterate that flips the argmax, else the final iterate.
AttackResult cw(const LayerStack& net, const Tensor& frame, const AttackSpec& spec);

// Dispatch on spec.method.
AttackResult craft(const LayerStack& net, const Tensor& frame, const AttackSpec& spec);

}  // namespace advrl
