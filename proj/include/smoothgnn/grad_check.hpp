#pragma once

#include <functional>

#include "smoothgnn/params.hpp"
#include "smoothgnn/tensor.hpp"

namespace sg {

struct GradCheckConfig {
  double step = 1e-5;
  // above this many coordinates, check a seeded random subsample instead
  int64_t subsample_threshold = 1000;
  int subsample = 100;
  uint64_t seed = 17;
};

// Compares the taped gradient of a deterministic scalar-producing fragment
// against central finite differences over the parameter coordinates.
// Returns the max relative error.
double gradient_check(const std::function<TensorPtr(Tape&)>& loss_fn, ParamStore& params,
                      const GradCheckConfig& cfg = {});

}  // namespace sg
