#pragma once

#include <cstdint>
#include <vector>

#include "smoothgnn/params.hpp"

namespace sg {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam. Weight decay is not applied here; the training loss adds
// an explicit l2_penalty term instead.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update from the gradients stored in the parameters.
  // Throws DivergenceError naming the parameter on a non-finite gradient.
  void step(ParamStore& params);

  void reset();

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;  // aligned with params order
};

}  // namespace sg
