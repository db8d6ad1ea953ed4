#include "smoothgnn/sbm.hpp"

#include <vector>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

Dataset generate_sbm(const SbmConfig& cfg) {
  if (cfg.nodes < 2 || cfg.blocks < 2 || cfg.blocks > cfg.nodes) {
    throw ValidationError("generate_sbm: need nodes >= 2 and 2 <= blocks <= nodes");
  }
  if (cfg.p_intra < 0 || cfg.p_intra > 1 || cfg.p_inter < 0 || cfg.p_inter > 1) {
    throw ValidationError("generate_sbm: edge probabilities must be in [0,1]");
  }
  if (cfg.feature_dim < cfg.blocks) {
    throw ValidationError("generate_sbm: feature_dim must be >= blocks");
  }

  const int64_t n = cfg.nodes;
  const int64_t d = cfg.feature_dim;
  std::vector<int32_t> block(n);
  for (int64_t v = 0; v < n; ++v) block[v] = static_cast<int32_t>(v % cfg.blocks);

  Rng rng(cfg.seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = i + 1; j < n; ++j) {
      const double p = block[i] == block[j] ? cfg.p_intra : cfg.p_inter;
      if (rng.uniform() < p) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }

  // block b activates its own slice of the feature dimensions
  std::vector<double> features(n * d);
  const int64_t slice = d / cfg.blocks;
  for (int64_t v = 0; v < n; ++v) {
    for (int64_t j = 0; j < d; ++j) {
      const bool active = j / slice == block[v] ||
                          (j / slice >= cfg.blocks && block[v] == cfg.blocks - 1);
      const double mean = active ? cfg.feature_separation : 0.0;
      features[v * d + j] = mean + cfg.feature_noise * rng.normal();
    }
  }

  std::vector<int32_t> labels(block.begin(), block.end());
  if (cfg.label_noise > 0.0) {
    for (int64_t v = 0; v < n; ++v) {
      if (rng.uniform() < cfg.label_noise) {
        labels[v] = static_cast<int32_t>(rng.below(static_cast<uint64_t>(cfg.blocks)));
      }
    }
  }

  return make_dataset(n, edges, d, std::move(features), std::move(labels));
}

}  // namespace sg
