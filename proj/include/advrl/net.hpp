#pragma once

#include <string>
#include <variant>
#include <vector>

#include "advrl/rng.hpp"
#include "advrl/tensor.hpp"

namespace advrl {

// Layer set: exactly what the convolutional Q-network needs. Conv layers use
// no padding; output extent = floor((in - kernel) / stride) + 1.
struct Conv2D {
  int filters = 0;
  int kernel = 0;
  int stride = 1;
};

struct Dense {
  int in = 0;
  int out = 0;
};

struct Relu {};

using LayerSpec = std::variant<Conv2D, Dense, Relu>;

// Shape propagation. Input shapes are {H, W, C}; Dense flattens implicitly
// and produces {out}.
std::vector<int> layer_output_shape(const LayerSpec& layer, const std::vector<int>& in_shape);

// A feed-forward stack with value semantics: copying a LayerStack deep-copies
// its parameters, which is how target-network snapshots are taken.
struct LayerStack {
  std::vector<int> input_shape;
  std::vector<LayerSpec> layers;
  std::vector<Tensor> params;  // conv/dense contribute {weight, bias} in layer order

  // He-uniform weight init, zero biases, deterministic from rng.
  static LayerStack make(std::vector<int> input_shape, std::vector<LayerSpec> layers, Rng& rng);

  std::vector<int> output_shape() const;
  int output_size() const;
  int param_count() const;  // total scalar parameters
  std::vector<std::string> param_names() const;
  std::uint64_t param_hash() const;
  bool same_architecture(const LayerStack& other) const;
};

// Records the activations of one forward pass. Single use: a second backward
// on the same tape throws.
struct GradientTape {
  std::vector<Tensor> activations;  // [0] = input, [i+1] = output of layer i
  bool consumed = false;
};

// Evaluates the stack on one sample. Pure function of (params, input); pass a
// tape to record activations for a backward pass.
Tensor forward(const LayerStack& net, const Tensor& input, GradientTape* tape = nullptr);

struct Gradients {
  std::vector<Tensor> params;  // same shapes as net.params
  Tensor input;                // dloss/dinput
};

// One reverse sweep computing both parameter and input gradients; consumes
// the tape.
Gradients backward(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad);

std::vector<Tensor> backward_params(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad);
Tensor backward_input(const LayerStack& net, GradientTape& tape, const Tensor& loss_grad);

}  // namespace advrl
