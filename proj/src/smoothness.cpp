#include "smoothgnn/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

namespace {

// Aggregate squared neighbor-difference for one node, summed over feature
// dimensions: || (sum_{v' in N(v)} (x_v - x_v'))^2 ||_1.
double node_term(const Dataset& ds, NodeId v, std::vector<double>& diff) {
  const int64_t d = ds.feature_dim;
  std::fill(diff.begin(), diff.end(), 0.0);
  const double* xv = ds.features.data() + static_cast<int64_t>(v) * d;
  for (NodeId u : ds.neighbors(v)) {
    const double* xu = ds.features.data() + static_cast<int64_t>(u) * d;
    for (int64_t j = 0; j < d; ++j) diff[j] += xv[j] - xu[j];
  }
  double term = 0.0;
  for (int64_t j = 0; j < d; ++j) term += diff[j] * diff[j];
  return term;
}

}  // namespace

int64_t SmoothnessReport::attention_dim(int64_t d_k) const {
  const auto raw = static_cast<int64_t>(std::ceil(d_k * std::sqrt(feature_smoothness)));
  return std::max<int64_t>(1, raw);
}

int64_t SmoothnessReport::drop_count() const {
  return static_cast<int64_t>(std::ceil(2.0 * edge_count * label_smoothness));
}

double serial::feature_smoothness(const Dataset& ds) {
  if (ds.num_edges == 0) throw ValidationError("feature_smoothness: empty edge set");
  std::vector<double> diff(ds.feature_dim);
  double total = 0.0;
  for (NodeId v = 0; v < ds.num_nodes; ++v) total += node_term(ds, v, diff);
  return total / (static_cast<double>(ds.num_edges) * ds.feature_dim);
}

double feature_smoothness(const Dataset& ds) {
  if (ds.num_edges == 0) throw ValidationError("feature_smoothness: empty edge set");
  const int64_t n = ds.num_nodes;
  std::vector<double> terms(n, 0.0);
#pragma omp parallel
  {
    std::vector<double> diff(ds.feature_dim);
#pragma omp for schedule(static)
    for (int64_t v = 0; v < n; ++v) {
      terms[v] = node_term(ds, static_cast<NodeId>(v), diff);
    }
  }
  // fixed-order reduction keeps the result identical across thread counts
  double total = 0.0;
  for (int64_t v = 0; v < n; ++v) total += terms[v];
  return total / (static_cast<double>(ds.num_edges) * ds.feature_dim);
}

double label_smoothness(const Dataset& ds, int64_t* labeled_edges) {
  int64_t labeled = 0, cross = 0;
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    if (!ds.is_labeled(v)) continue;
    for (NodeId u : ds.neighbors(v)) {
      if (u <= v || !ds.is_labeled(u)) continue;
      ++labeled;
      if (ds.labels[v] != ds.labels[u]) ++cross;
    }
  }
  if (labeled_edges) *labeled_edges = labeled;
  if (labeled == 0) throw ValidationError("label_smoothness: no fully-labeled edges");
  return static_cast<double>(cross) / static_cast<double>(labeled);
}

SmoothnessReport smoothness_report(const Dataset& ds) {
  SmoothnessReport rep;
  rep.edge_count = ds.num_edges;
  rep.feature_smoothness = feature_smoothness(ds);
  rep.label_smoothness = label_smoothness(ds, &rep.labeled_edge_count);
  rep.label_estimate_partial = rep.labeled_edge_count < ds.num_edges;
  return rep;
}

Dataset broadcast_smooth(const Dataset& ds, int rounds) {
  if (rounds < 0) throw ValidationError("broadcast_smooth: rounds must be >= 0");
  Dataset out = ds;
  const int64_t n = ds.num_nodes, d = ds.feature_dim;
  std::vector<double> next(n * d);
  for (int r = 0; r < rounds; ++r) {
#pragma omp parallel for schedule(static)
    for (int64_t v = 0; v < n; ++v) {
      double* acc = next.data() + v * d;
      const double* xv = out.features.data() + v * d;
      for (int64_t j = 0; j < d; ++j) acc[j] = xv[j];
      for (NodeId u : out.neighbors(static_cast<NodeId>(v))) {
        const double* xu = out.features.data() + static_cast<int64_t>(u) * d;
        for (int64_t j = 0; j < d; ++j) acc[j] += xu[j];
      }
      const double inv = 1.0 / (1.0 + static_cast<double>(out.degree(static_cast<NodeId>(v))));
      for (int64_t j = 0; j < d; ++j) acc[j] *= inv;
    }
    out.features.swap(next);
  }
  return out;
}

Dataset drop_cross_label_edges(const Dataset& ds, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw ValidationError("drop_cross_label_edges: fraction must be in [0,1]");
  }
  std::vector<std::pair<NodeId, NodeId>> keep, cross;
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    for (NodeId u : ds.neighbors(v)) {
      if (u <= v) continue;
      if (ds.is_labeled(v) && ds.is_labeled(u) && ds.labels[v] != ds.labels[u]) {
        cross.emplace_back(v, u);
      } else {
        keep.emplace_back(v, u);
      }
    }
  }
  const auto to_drop = static_cast<int64_t>(std::floor(fraction * cross.size()));
  Rng rng(seed);
  rng.shuffle(cross);
  for (int64_t i = to_drop; i < static_cast<int64_t>(cross.size()); ++i) {
    keep.push_back(cross[i]);
  }
  return make_dataset(ds.num_nodes, keep, ds.feature_dim, ds.features, ds.labels, ds.splits);
}

}  // namespace sg
