#pragma once

#include <cstdint>
#include <vector>

namespace advrl {

// Dense row-major numeric array. Reductions everywhere in this codebase
// accumulate in double; data is stored in double as well so that gradient
// checks against central finite differences are not dominated by storage
// rounding noise.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> data_);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);

  int numel() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);
};

int numel_of(const std::vector<int>& shape);

// Lowest-index tie break.
int argmax(const std::vector<double>& v);
int argmax(const Tensor& t);

double linf_dist(const Tensor& a, const Tensor& b);
double l2_dist(const Tensor& a, const Tensor& b);

// Numerically stable softmax (max-subtracted), double accumulation.
std::vector<double> softmax(const std::vector<double>& logits);

// Hash of shape + raw data bytes; used for frozen-parameter checks and
// frame hashes in trace files.
std::uint64_t tensor_hash(const Tensor& t);

void check_finite(const Tensor& t, const char* what);

}  // namespace advrl
