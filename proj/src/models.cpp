#include "smoothgnn/models.hpp"

#include <algorithm>
#include <cmath>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/util.hpp"

namespace sg {

ModelFamily parse_family(const std::string& name) {
  if (name == "csgnn") return ModelFamily::CsGnn;
  if (name == "gcn") return ModelFamily::Gcn;
  if (name == "sage-mean") return ModelFamily::SageMean;
  if (name == "sage-maxpool") return ModelFamily::SageMaxpool;
  if (name == "gat") return ModelFamily::Gat;
  if (name == "mlp") return ModelFamily::Mlp;
  if (name == "logistic") return ModelFamily::Logistic;
  if (name == "labelprop") return ModelFamily::LabelProp;
  throw ValidationError("unknown model family: " + name);
}

const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::CsGnn: return "csgnn";
    case ModelFamily::Gcn: return "gcn";
    case ModelFamily::SageMean: return "sage-mean";
    case ModelFamily::SageMaxpool: return "sage-maxpool";
    case ModelFamily::Gat: return "gat";
    case ModelFamily::Mlp: return "mlp";
    case ModelFamily::Logistic: return "logistic";
    case ModelFamily::LabelProp: return "labelprop";
  }
  return "?";
}

std::vector<ModelFamily> all_families() {
  return {ModelFamily::CsGnn,       ModelFamily::Gcn,      ModelFamily::SageMean,
          ModelFamily::SageMaxpool, ModelFamily::Gat,      ModelFamily::Mlp,
          ModelFamily::Logistic,    ModelFamily::LabelProp};
}

int64_t attention_dim(int64_t d_k, double lambda_f) {
  const auto raw = static_cast<int64_t>(std::ceil(static_cast<double>(d_k) * std::sqrt(lambda_f)));
  return std::max<int64_t>(1, raw);
}

GraphContext build_graph_context(const Dataset& ds, double lambda_f, double lambda_l,
                                 const TopoFeatureMatrix* topo) {
  GraphContext ctx;
  ctx.num_nodes = ds.num_nodes;
  ctx.feature_dim = ds.feature_dim;
  ctx.num_classes = ds.num_classes;
  ctx.lambda_f = lambda_f;
  ctx.lambda_l = lambda_l;
  ctx.neighbors = build_segment_index(ds, false);
  ctx.with_self = build_segment_index(ds, true);
  ctx.features = tensor_of({ds.num_nodes, ds.feature_dim}, ds.features);
  if (topo) {
    ctx.topo_dim = topo->dim;
    ctx.topo = tensor_of({topo->num_nodes, topo->dim}, topo->values);
  }

  std::vector<double> gcn_c(ctx.with_self.num_entries());
  for (int64_t e = 0; e < ctx.with_self.num_entries(); ++e) {
    const double di = static_cast<double>(ds.degree(ctx.with_self.dst[e])) + 1.0;
    const double dj = static_cast<double>(ds.degree(ctx.with_self.src[e])) + 1.0;
    gcn_c[e] = 1.0 / std::sqrt(di * dj);
  }
  ctx.gcn_coeffs = tensor_of({ctx.with_self.num_entries()}, std::move(gcn_c));

  std::vector<double> mean_c(ctx.neighbors.num_entries());
  for (int64_t e = 0; e < ctx.neighbors.num_entries(); ++e) {
    mean_c[e] = 1.0 / static_cast<double>(ds.degree(ctx.neighbors.dst[e]));
  }
  ctx.mean_coeffs = tensor_of({ctx.neighbors.num_entries()}, std::move(mean_c));
  return ctx;
}

TensorPtr csgnn_attention(Tape& t, const TensorPtr& h, const TensorPtr& topo,
                          const TensorPtr& w_p, const TensorPtr& w_q, const SegmentIndex& seg) {
  TensorPtr context_in = topo ? concat_cols(t, h, topo) : h;
  TensorPtr p = matmul(t, context_in, w_p);   // [n, attn]
  TensorPtr hq = matmul(t, h, w_q);           // [n, attn]
  TensorPtr pe = row_gather(t, p, seg.dst);   // p_i per edge
  TensorPtr qe = sub(t, pe, row_gather(t, hq, seg.src));  // q_ij = p_i - W_q h_j
  TensorPtr logits = elu(t, row_sum(t, mul(t, pe, qe)));
  return segment_softmax(t, logits, seg);
}

std::vector<double> drop_survivor_mask(const std::vector<double>& coeffs, int64_t r) {
  std::vector<double> mask(coeffs.size(), 1.0);
  if (r <= 0 || coeffs.empty()) return mask;
  const int64_t n = static_cast<int64_t>(coeffs.size());
  std::vector<double> vals = coeffs;
  const int64_t k = std::min(r, n) - 1;
  std::nth_element(vals.begin(), vals.begin() + k, vals.end());
  const double threshold = vals[k];  // r-th smallest; strictly-below ties survive
  for (size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] < threshold) mask[i] = 0.0;
  }
  return mask;
}

TensorPtr drop_low_attention(Tape& t, const TensorPtr& coeffs, double lambda_l,
                             const SegmentIndex& seg, bool renormalize) {
  if (lambda_l < 0.0 || lambda_l > 1.0) {
    throw ValidationError("drop_low_attention: lambda_l must be in [0,1]");
  }
  const auto r = static_cast<int64_t>(
      std::ceil(static_cast<double>(coeffs->size()) * lambda_l));
  if (r <= 0) return coeffs;
  auto mask = tensor_of(coeffs->shape, drop_survivor_mask(coeffs->v, r));
  TensorPtr kept = mul(t, coeffs, mask);
  if (!renormalize) return kept;
  // rescale each surviving segment back to sum 1; the epsilon keeps
  // fully-dropped segments at 0 instead of 0/0
  TensorPtr sums = segment_sum(t, kept, seg);
  TensorPtr denom = row_gather(t, sums, seg.dst);
  auto eps = tensor_of(kept->shape, std::vector<double>(kept->size(), 1e-12));
  return div(t, kept, add(t, denom, eps));
}

namespace {

std::string spec_string(const ModelSpec& spec, int64_t d, int64_t c, int64_t topo_dim,
                        const std::vector<int64_t>& attn_dims) {
  std::string s = family_name(spec.family);
  s += "/r" + std::to_string(spec.rounds);
  s += "/h" + std::to_string(spec.hidden);
  s += "/topo" + std::to_string(spec.use_topo ? topo_dim : 0);
  s += "/res" + std::to_string(spec.residual ? 1 : 0);
  s += "/d" + std::to_string(d);
  s += "/c" + std::to_string(c);
  for (int64_t a : attn_dims) s += "/a" + std::to_string(a);
  return s;
}

}  // namespace

Model::Model(const ModelSpec& spec, const GraphContext& ctx, uint64_t seed)
    : spec_(spec), num_classes_(ctx.num_classes), topo_dim_(spec.use_topo ? ctx.topo_dim : 0) {
  if (spec.rounds < 1 && spec.family != ModelFamily::Logistic) {
    throw ValidationError("model rounds must be >= 1");
  }
  if (spec.hidden < 1) throw ValidationError("hidden width must be >= 1");
  if (spec.use_topo && spec.family == ModelFamily::CsGnn && !ctx.topo) {
    throw ValidationError("use_topo set but the graph context has no topology features");
  }

  Rng rng(seed);
  const int64_t d = ctx.feature_dim;
  const int64_t h = spec.hidden;
  const int64_t c = ctx.num_classes;
  if (c < 2) throw ValidationError("need at least two classes to build a classifier");

  for (int k = 0; k < spec.rounds; ++k) in_dims_.push_back(k == 0 ? d : h);

  switch (spec.family) {
    case ModelFamily::CsGnn: {
      for (int k = 0; k < spec.rounds; ++k) {
        const int64_t in = in_dims_[k];
        const int64_t attn = attention_dim(in, ctx.lambda_f);
        attn_dims_.push_back(attn);
        const std::string pre = "round" + std::to_string(k) + ".";
        params_.create_glorot(pre + "W_p", {in + topo_dim_, attn}, rng);
        params_.create_glorot(pre + "W_q", {in, attn}, rng);
        params_.create_glorot(pre + "W_l", {2 * in, h}, rng);
      }
      params_.create_glorot("out.W", {h + topo_dim_, c}, rng);
      break;
    }
    case ModelFamily::Gcn: {
      for (int k = 0; k < spec.rounds; ++k) {
        params_.create_glorot("round" + std::to_string(k) + ".W", {in_dims_[k], h}, rng);
      }
      params_.create_glorot("out.W", {h, c}, rng);
      break;
    }
    case ModelFamily::SageMean: {
      for (int k = 0; k < spec.rounds; ++k) {
        params_.create_glorot("round" + std::to_string(k) + ".W", {2 * in_dims_[k], h}, rng);
      }
      params_.create_glorot("out.W", {h, c}, rng);
      break;
    }
    case ModelFamily::SageMaxpool: {
      for (int k = 0; k < spec.rounds; ++k) {
        const std::string pre = "round" + std::to_string(k) + ".";
        params_.create_glorot(pre + "W_pool", {in_dims_[k], h}, rng);
        params_.create(pre + "b_pool", {h});
        params_.create_glorot(pre + "W", {in_dims_[k] + h, h}, rng);
      }
      params_.create_glorot("out.W", {h, c}, rng);
      break;
    }
    case ModelFamily::Gat: {
      for (int k = 0; k < spec.rounds; ++k) {
        const std::string pre = "round" + std::to_string(k) + ".";
        params_.create_glorot(pre + "W", {in_dims_[k], h}, rng);
        params_.create_glorot(pre + "a_dst", {h}, rng);
        params_.create_glorot(pre + "a_src", {h}, rng);
      }
      params_.create_glorot("out.W", {h, c}, rng);
      break;
    }
    case ModelFamily::Mlp: {
      for (int k = 0; k < spec.rounds; ++k) {
        const std::string pre = "layer" + std::to_string(k) + ".";
        params_.create_glorot(pre + "W", {in_dims_[k], h}, rng);
        params_.create(pre + "b", {h});
      }
      params_.create_glorot("out.W", {h, c}, rng);
      params_.create("out.b", {c});
      break;
    }
    case ModelFamily::Logistic: {
      params_.create_glorot("out.W", {d, c}, rng);
      params_.create("out.b", {c});
      break;
    }
    case ModelFamily::LabelProp:
      throw ValidationError("label propagation has no learnable parameters; use label_propagation()");
  }
  spec_hash_ = fnv1a(spec_string(spec_, d, c, topo_dim_, attn_dims_));
}

namespace {

TensorPtr maybe_dropout(Tape& t, const TensorPtr& x, double p, bool training, Rng& rng) {
  return (training && p > 0.0) ? dropout(t, x, p, rng) : x;
}

// pre-activation residual, applied when widths match
TensorPtr residual_relu(Tape& t, const TensorPtr& pre, const TensorPtr& h_in, bool enabled) {
  if (enabled && pre->shape == h_in->shape) return relu(t, add(t, pre, h_in));
  return relu(t, pre);
}

}  // namespace

TensorPtr Model::forward_csgnn(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  TensorPtr h = ctx.features;
  TensorPtr topo = spec_.use_topo ? ctx.topo : nullptr;
  for (int k = 0; k < spec_.rounds; ++k) {
    const std::string pre = "round" + std::to_string(k) + ".";
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    TensorPtr coeffs = csgnn_attention(t, h_in, topo, params_.get(pre + "W_p"),
                                       params_.get(pre + "W_q"), ctx.neighbors);
    coeffs = drop_low_attention(t, coeffs, ctx.lambda_l, ctx.neighbors,
                                spec_.renormalize_after_drop);
    coeffs = maybe_dropout(t, coeffs, spec_.attention_dropout, training, rng);
    TensorPtr agg = weighted_neighbor_sum(t, coeffs, h_in, ctx.neighbors);
    TensorPtr z = matmul(t, concat_cols(t, h_in, agg), params_.get(pre + "W_l"));
    h = residual_relu(t, z, h_in, spec_.residual);
  }
  TensorPtr h_out = maybe_dropout(t, h, spec_.dropout, training, rng);
  TensorPtr final_in = topo ? concat_cols(t, h_out, topo) : h_out;
  return matmul(t, final_in, params_.get("out.W"));
}

TensorPtr Model::forward_gcn(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  TensorPtr h = ctx.features;
  for (int k = 0; k < spec_.rounds; ++k) {
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    TensorPtr hw = matmul(t, h_in, params_.get("round" + std::to_string(k) + ".W"));
    TensorPtr z = weighted_neighbor_sum(t, ctx.gcn_coeffs, hw, ctx.with_self);
    h = residual_relu(t, z, h_in, spec_.residual);
  }
  TensorPtr h_out = maybe_dropout(t, h, spec_.dropout, training, rng);
  return matmul(t, h_out, params_.get("out.W"));
}

TensorPtr Model::forward_sage(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  TensorPtr h = ctx.features;
  for (int k = 0; k < spec_.rounds; ++k) {
    const std::string pre = "round" + std::to_string(k) + ".";
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    TensorPtr agg;
    if (spec_.family == ModelFamily::SageMean) {
      agg = weighted_neighbor_sum(t, ctx.mean_coeffs, h_in, ctx.neighbors);
    } else {
      TensorPtr pooled = relu(
          t, add_rowvec(t, matmul(t, h_in, params_.get(pre + "W_pool")),
                        params_.get(pre + "b_pool")));
      TensorPtr per_edge = row_gather(t, pooled, ctx.neighbors.src);
      agg = segment_max(t, per_edge, ctx.neighbors);
    }
    TensorPtr z = matmul(t, concat_cols(t, h_in, agg), params_.get(pre + "W"));
    h = residual_relu(t, z, h_in, spec_.residual);
  }
  TensorPtr h_out = maybe_dropout(t, h, spec_.dropout, training, rng);
  return matmul(t, h_out, params_.get("out.W"));
}

TensorPtr Model::forward_gat(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  TensorPtr h = ctx.features;
  for (int k = 0; k < spec_.rounds; ++k) {
    const std::string pre = "round" + std::to_string(k) + ".";
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    TensorPtr hw = matmul(t, h_in, params_.get(pre + "W"));
    TensorPtr score_dst = matvec(t, hw, params_.get(pre + "a_dst"));
    TensorPtr score_src = matvec(t, hw, params_.get(pre + "a_src"));
    TensorPtr logits = leaky_relu(
        t,
        add(t, row_gather(t, score_dst, ctx.with_self.dst),
            row_gather(t, score_src, ctx.with_self.src)),
        0.2);
    TensorPtr coeffs = segment_softmax(t, logits, ctx.with_self);
    coeffs = maybe_dropout(t, coeffs, spec_.attention_dropout, training, rng);
    TensorPtr z = weighted_neighbor_sum(t, coeffs, hw, ctx.with_self);
    h = residual_relu(t, z, h_in, spec_.residual);
  }
  TensorPtr h_out = maybe_dropout(t, h, spec_.dropout, training, rng);
  return matmul(t, h_out, params_.get("out.W"));
}

TensorPtr Model::forward_mlp(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  TensorPtr h = ctx.features;
  if (spec_.family == ModelFamily::Logistic) {
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    return add_rowvec(t, matmul(t, h_in, params_.get("out.W")), params_.get("out.b"));
  }
  for (int k = 0; k < spec_.rounds; ++k) {
    const std::string pre = "layer" + std::to_string(k) + ".";
    TensorPtr h_in = maybe_dropout(t, h, spec_.dropout, training, rng);
    h = relu(t, add_rowvec(t, matmul(t, h_in, params_.get(pre + "W")), params_.get(pre + "b")));
  }
  TensorPtr h_out = maybe_dropout(t, h, spec_.dropout, training, rng);
  return add_rowvec(t, matmul(t, h_out, params_.get("out.W")), params_.get("out.b"));
}

TensorPtr Model::forward(Tape& t, const GraphContext& ctx, bool training, Rng& rng) const {
  switch (spec_.family) {
    case ModelFamily::CsGnn: return forward_csgnn(t, ctx, training, rng);
    case ModelFamily::Gcn: return forward_gcn(t, ctx, training, rng);
    case ModelFamily::SageMean:
    case ModelFamily::SageMaxpool: return forward_sage(t, ctx, training, rng);
    case ModelFamily::Gat: return forward_gat(t, ctx, training, rng);
    case ModelFamily::Mlp:
    case ModelFamily::Logistic: return forward_mlp(t, ctx, training, rng);
    case ModelFamily::LabelProp:
      throw ValidationError("label propagation is not a parametric model");
  }
  throw ValidationError("unreachable model family");
}

std::vector<int32_t> predict_labels(const TensorPtr& logits) {
  const int64_t n = logits->rows(), c = logits->cols();
  std::vector<int32_t> out(n, 0);
  for (int64_t i = 0; i < n; ++i) {
    const double* row = logits->v.data() + i * c;
    int32_t best = 0;
    for (int64_t j = 1; j < c; ++j) {
      if (row[j] > row[best]) best = static_cast<int32_t>(j);  // ties keep lowest id
    }
    out[i] = best;
  }
  return out;
}

LabelPropResult label_propagation(const Dataset& ds, int max_iters, double tolerance) {
  const int64_t n = ds.num_nodes;
  const int64_t c = ds.num_classes;
  std::vector<NodeId> clamped;
  for (NodeId v = 0; v < n; ++v) {
    if (ds.splits[v] == Split::Train && ds.is_labeled(v)) clamped.push_back(v);
  }
  if (clamped.empty()) throw ValidationError("label_propagation: no labeled train nodes");

  std::vector<double> x(n * c, 0.0), next(n * c, 0.0);
  auto clamp = [&](std::vector<double>& vec) {
    for (NodeId v : clamped) {
      double* row = vec.data() + static_cast<int64_t>(v) * c;
      std::fill(row, row + c, 0.0);
      row[ds.labels[v]] = 1.0;
    }
  };
  clamp(x);

  LabelPropResult res;
  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    double max_change = 0.0;
    for (int64_t v = 0; v < n; ++v) {
      double* row = next.data() + v * c;
      std::fill(row, row + c, 0.0);
      const int64_t deg = ds.degree(static_cast<NodeId>(v));
      if (deg == 0) continue;
      for (NodeId u : ds.neighbors(static_cast<NodeId>(v))) {
        const double* xu = x.data() + static_cast<int64_t>(u) * c;
        for (int64_t j = 0; j < c; ++j) row[j] += xu[j];
      }
      for (int64_t j = 0; j < c; ++j) row[j] /= static_cast<double>(deg);
    }
    clamp(next);
    for (int64_t i = 0; i < n * c; ++i) max_change = std::max(max_change, std::abs(next[i] - x[i]));
    x.swap(next);
    if (max_change < tolerance) {
      ++res.iterations;
      break;
    }
  }

  res.predictions.assign(n, 0);
  for (int64_t v = 0; v < n; ++v) {
    const double* row = x.data() + v * c;
    double total = 0.0;
    for (int64_t j = 0; j < c; ++j) total += row[j];
    if (total <= 0.0) {
      res.unreached = true;  // uniform fallback; argmax tie -> class 0
      res.predictions[v] = 0;
      continue;
    }
    int32_t best = 0;
    for (int64_t j = 1; j < c; ++j) {
      if (row[j] > row[best]) best = static_cast<int32_t>(j);
    }
    res.predictions[v] = best;
  }
  return res;
}

}  // namespace sg
