#pragma once

// Stochastic block model generator with per-block Gaussian feature means,
// used so experiments and acceptance runs need no external data.

#include <cstdint>

#include "smoothgnn/dataset.hpp"

namespace sg {

struct SbmConfig {
  int64_t nodes = 2000;
  int blocks = 4;
  double p_intra = 0.015;  // edge probability inside a block
  double p_inter = 0.005;  // edge probability across blocks
  int64_t feature_dim = 16;
  double feature_separation = 1.0;  // magnitude of the block-mean pattern
  double feature_noise = 0.3;       // per-feature Gaussian noise
  double label_noise = 0.0;         // fraction of nodes relabeled uniformly
  uint64_t seed = 1;
};

// Labels are block ids (subject to label noise); block b's mean activates
// the b-th slice of the feature dimensions. Splits are left unset.
Dataset generate_sbm(const SbmConfig& cfg);

}  // namespace sg
