#include "advrl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "advrl/optim.hpp"

namespace advrl {

AttackMethod attack_method_from_string(const std::string& s) {
  if (s == "fgsm") return AttackMethod::Fgsm;
  if (s == "pgd") return AttackMethod::Pgd;
  if (s == "cw") return AttackMethod::Cw;
  throw std::invalid_argument("unknown attack method: " + s);
}

std::string to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::Fgsm: return "fgsm";
    case AttackMethod::Pgd: return "pgd";
    case AttackMethod::Cw: return "cw";
  }
  throw std::logic_error("bad attack method tag");
}

void AttackSpec::validate() const {
  // epsilon == 0 is allowed as the degenerate null perturbation.
  if (epsilon < 0 || pgd_step_size <= 0 || pgd_steps < 1 || cw_iters < 1 || cw_constant < 0 ||
      cw_confidence < 0 || cw_lr <= 0)
    throw std::invalid_argument("attack spec: parameter out of range");
}

long AttackSpec::op_count() const {
  switch (method) {
    case AttackMethod::Fgsm: return 2;
    case AttackMethod::Pgd: return 2L * pgd_steps;
    case AttackMethod::Cw: return 2L * cw_iters;
  }
  throw std::logic_error("bad attack method tag");
}

namespace {

void check_box(const Tensor& frame) {
  for (double v : frame.data)
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("attack input frame outside [0,1]");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void finish(AttackResult& r, const LayerStack& net, const Tensor& clean, int clean_action) {
  r.linf_dist = linf_dist(r.adv_frame, clean);
  r.l2_dist = l2_dist(r.adv_frame, clean);
  r.success = argmax(forward(net, r.adv_frame)) != clean_action;
}

}  // namespace

AttackLoss attack_loss(const LayerStack& net, const Tensor& frame, int label_action) {
  GradientTape tape;
  const Tensor q = forward(net, frame, &tape);
  if (label_action < 0 || label_action >= q.numel())
    throw std::invalid_argument("attack_loss: label action out of range");
  const std::vector<double> p = softmax(q.data);
  AttackLoss out;
  out.loss = -std::log(std::max(p[label_action], 1e-300));
  Tensor out_grad = Tensor::zeros(q.shape);
  for (int i = 0; i < q.numel(); ++i)
    out_grad.data[i] = p[i] - (i == label_action ? 1.0 : 0.0);
  out.input_grad = backward_input(net, tape, out_grad);
  return out;
}

AttackResult fgsm(const LayerStack& net, const Tensor& frame, const AttackSpec& spec) {
  spec.validate();
  check_box(frame);
  const int clean_action = argmax(forward(net, frame));
  const AttackLoss al = attack_loss(net, frame, clean_action);

  AttackResult r;
  r.adv_frame = frame;
  for (std::size_t i = 0; i < frame.data.size(); ++i)
    r.adv_frame.data[i] =
        std::clamp(frame.data[i] + spec.epsilon * sign(al.input_grad.data[i]), 0.0, 1.0);
  r.iterations_used = 1;
  r.op_count = 2;
  finish(r, net, frame, clean_action);
  return r;
}

AttackResult pgd(const LayerStack& net, const Tensor& frame, const AttackSpec& spec) {
  spec.validate();
  check_box(frame);
  const int clean_action = argmax(forward(net, frame));

  AttackResult r;
  Tensor x = frame;
  for (int it = 0; it < spec.pgd_steps; ++it) {
    const AttackLoss al = attack_loss(net, x, clean_action);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      double v = x.data[i] + spec.pgd_step_size * sign(al.input_grad.data[i]);
      v = std::clamp(v, frame.data[i] - spec.epsilon, frame.data[i] + spec.epsilon);
      x.data[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  r.adv_frame = std::move(x);
  r.iterations_used = spec.pgd_steps;
  r.op_count = 2L * spec.pgd_steps;
  finish(r, net, frame, clean_action);
  return r;
}

AttackResult cw(const LayerStack& net, const Tensor& frame, const AttackSpec& spec) {
  spec.validate();
  check_box(frame);
  const int target = argmax(forward(net, frame));  // clean action the attack pushes away from
  const int actions = net.output_size();
  if (actions < 2) throw std::invalid_argument("cw: needs at least two actions");

  // w = atanh(2x - 1) with x clipped away from the box corners.
  const double delta = 1e-6;
  std::vector<Tensor> w{Tensor::zeros(frame.shape)};
  for (std::size_t i = 0; i < frame.data.size(); ++i)
    w[0].data[i] = std::atanh(2.0 * std::clamp(frame.data[i], delta, 1.0 - delta) - 1.0);

  Optimizer opt = Optimizer::adam(spec.cw_lr);
  Tensor best;
  double best_l2 = 0.0;
  bool have_best = false;
  Tensor last;

  for (int it = 0; it < spec.cw_iters; ++it) {
    Tensor x = Tensor::zeros(frame.shape);
    std::vector<double> dxdw(frame.data.size());
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      const double th = std::tanh(w[0].data[i]);
      x.data[i] = 0.5 * (th + 1.0);
      dxdw[i] = 0.5 * (1.0 - th * th);
    }

    GradientTape tape;
    const Tensor q = forward(net, x, &tape);
    const std::vector<double> z = softmax(q.data);
    const int pred = argmax(q);

    const double cand_l2 = l2_dist(x, frame);
    if (pred != target && (!have_best || cand_l2 < best_l2)) {
      best = x;
      best_l2 = cand_l2;
      have_best = true;
    }
    last = x;

    // Untargeted margin f = max(Z_t - max_{i != t} Z_i, -kappa): minimizing
    // pushes the clean action's probability below the runner-up. Softmax
    // jacobian folded in analytically; the hinge zeroes the term once the
    // flip clears the confidence margin.
    int runner = target == 0 ? 1 : 0;
    for (int i = 0; i < actions; ++i)
      if (i != target && z[i] > z[runner]) runner = i;
    Tensor out_grad = Tensor::zeros(q.shape);
    if (z[target] - z[runner] > -spec.cw_confidence) {
      for (int b = 0; b < actions; ++b) {
        const double dz = z[target] * ((b == target ? 1.0 : 0.0) - z[b]) -
                          z[runner] * ((b == runner ? 1.0 : 0.0) - z[b]);
        out_grad.data[b] = spec.cw_constant * dz;
      }
    }
    const Tensor input_grad = backward_input(net, tape, out_grad);

    std::vector<Tensor> gw{Tensor::zeros(frame.shape)};
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      const double dobj_dx = 2.0 * (x.data[i] - frame.data[i]) + input_grad.data[i];
      gw[0].data[i] = dobj_dx * dxdw[i];
    }
    opt.step(w, gw);
    if (!w[0].all_finite())
      throw std::runtime_error("cw: optimization diverged (non-finite w) at iter " +
                               std::to_string(it));
  }

  AttackResult r;
  r.adv_frame = have_best ? std::move(best) : std::move(last);
  r.iterations_used = spec.cw_iters;
  r.op_count = 2L * spec.cw_iters;
  finish(r, net, frame, target);
  return r;
}

AttackResult craft(const LayerStack& net, const Tensor& frame, const AttackSpec& spec) {
  switch (spec.method) {
    case AttackMethod::Fgsm: return fgsm(net, frame, spec);
    case AttackMethod::Pgd: return pgd(net, frame, spec);
    case AttackMethod::Cw: return cw(net, frame, spec);
  }
  throw std::invalid_argument("craft: unknown attack method tag");
}

}  // namespace advrl
