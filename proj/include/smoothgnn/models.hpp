#pragma once

// Model zoo over the autodiff core: CS-GNN (smoothness-driven multiplicative
// attention with neighbor dropping), GCN, GraphSAGE (mean / max-pool),
// single-head additive-attention GAT, MLP, logistic regression, and label
// propagation.

#include <cstdint>
#include <string>
#include <vector>

#include "smoothgnn/dataset.hpp"
#include "smoothgnn/params.hpp"
#include "smoothgnn/tensor.hpp"
#include "smoothgnn/topo_features.hpp"

namespace sg {

enum class ModelFamily {
  CsGnn,
  Gcn,
  SageMean,
  SageMaxpool,
  Gat,
  Mlp,
  Logistic,
  LabelProp,
};

ModelFamily parse_family(const std::string& name);
const char* family_name(ModelFamily f);
std::vector<ModelFamily> all_families();

struct ModelSpec {
  ModelFamily family = ModelFamily::CsGnn;
  int rounds = 2;  // aggregation rounds K (hidden layers for MLP)
  int hidden = 16;
  double dropout = 0.0;
  double attention_dropout = 0.0;
  bool use_topo = false;  // CS-GNN side information
  bool residual = true;
  bool renormalize_after_drop = false;  // ablation; default keeps raw survivors
};

// max(1, ceil(d_k * sqrt(lambda_f)))
int64_t attention_dim(int64_t d_k, double lambda_f);

// Immutable per-dataset state shared by every forward pass. Must outlive
// any Tape recorded against it.
struct GraphContext {
  int64_t num_nodes = 0;
  int64_t feature_dim = 0;
  int64_t num_classes = 0;
  int64_t topo_dim = 0;
  double lambda_f = 0.0;
  double lambda_l = 0.0;
  SegmentIndex neighbors;  // no self loops (CS-GNN, GraphSAGE)
  SegmentIndex with_self;  // self loops included (GCN, GAT)
  TensorPtr features;      // [n,d], constant
  TensorPtr topo;          // [n,topo_dim], constant; null when unused
  TensorPtr gcn_coeffs;    // 1/sqrt((deg_i+1)(deg_j+1)) per with_self entry
  TensorPtr mean_coeffs;   // 1/deg(dst) per neighbors entry
};

GraphContext build_graph_context(const Dataset& ds, double lambda_f, double lambda_l,
                                 const TopoFeatureMatrix* topo = nullptr);

// Multiplicative attention coefficients: p_i = W_p (h_i || t_i),
// q_ij = p_i - W_q h_j, logit = ELU(p_i . q_ij), segment softmax over each
// node's neighbors. Weight matrices are stored [in, out].
TensorPtr csgnn_attention(Tape& t, const TensorPtr& h, const TensorPtr& topo,
                          const TensorPtr& w_p, const TensorPtr& w_q, const SegmentIndex& seg);

// Zeroes coefficients strictly below the r-th smallest value over the whole
// coefficient array, r = ceil(2|E| * lambda_l). Survivors are unchanged
// unless renormalize is set, which rescales each segment back to sum 1.
TensorPtr drop_low_attention(Tape& t, const TensorPtr& coeffs, double lambda_l,
                             const SegmentIndex& seg, bool renormalize = false);

// Survivor mask used by drop_low_attention (1 keeps, 0 drops).
std::vector<double> drop_survivor_mask(const std::vector<double>& coeffs, int64_t r);

class Model {
 public:
  Model(const ModelSpec& spec, const GraphContext& ctx, uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  uint64_t spec_hash() const { return spec_hash_; }
  const std::vector<int64_t>& attention_dims() const { return attn_dims_; }

  // Class logits [n, C]. Dropout draws from rng only when training.
  TensorPtr forward(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;

 private:
  TensorPtr forward_csgnn(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;
  TensorPtr forward_gcn(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;
  TensorPtr forward_sage(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;
  TensorPtr forward_gat(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;
  TensorPtr forward_mlp(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const;

  ModelSpec spec_;
  int64_t num_classes_ = 0;
  int64_t topo_dim_ = 0;
  std::vector<int64_t> in_dims_;    // input width per round
  std::vector<int64_t> attn_dims_;  // CS-GNN only
  uint64_t spec_hash_ = 0;
  ParamStore params_;
};

// argmax per row; ties resolve to the lowest class id
std::vector<int32_t> predict_labels(const TensorPtr& logits);

struct LabelPropResult {
  std::vector<int32_t> predictions;
  int iterations = 0;
  bool unreached = false;  // some node never received label mass
};

// Iterative propagation of one-hot train labels through the row-normalized
// adjacency, train rows clamped each round. Unreached nodes fall back to a
// uniform distribution and set the flag.
LabelPropResult label_propagation(const Dataset& ds, int max_iters = 200,
                                  double tolerance = 1e-9);

}  // namespace sg
