#pragma once

// Feature smoothness, label smoothness, and the graph transforms that
// manipulate them (broadcast mean-smoothing, cross-label edge dropping).

#include <cstdint>

#include "smoothgnn/dataset.hpp"

namespace sg {

struct SmoothnessReport {
  double feature_smoothness = 0.0;  // lambda_f, over normalized features
  double label_smoothness = 0.0;    // lambda_l, over fully-labeled edges
  int64_t labeled_edge_count = 0;   // edges with both endpoints labeled
  int64_t edge_count = 0;           // |E|
  bool label_estimate_partial = false;  // true when some edges lack labels

  // max(1, ceil(d_k * sqrt(lambda_f)))
  int64_t attention_dim(int64_t d_k) const;
  // ceil(2|E| * lambda_l)
  int64_t drop_count() const;
};

// || sum_v (sum_{v' in N(v)} (x_v - x_v'))^2 ||_1 / (|E| * d), the square
// applied element-wise. Expects features already normalized to [0,1]^d
// unless raw-feature diagnostics are wanted.
double feature_smoothness(const Dataset& ds);

// Fraction of fully-labeled edges whose endpoints disagree. labeled_edges,
// when given, receives the number of fully-labeled edges.
double label_smoothness(const Dataset& ds, int64_t* labeled_edges = nullptr);

SmoothnessReport smoothness_report(const Dataset& ds);

// Synchronous rounds of x_v <- (x_v + sum_{v' in N(v)} x_v') / (1 + |N(v)|).
Dataset broadcast_smooth(const Dataset& ds, int rounds);

// Removes floor(fraction * #cross-label-edges) uniformly chosen edges whose
// endpoints carry different labels. Same-label edges and edges touching
// unlabeled nodes are untouched. Deterministic per seed.
Dataset drop_cross_label_edges(const Dataset& ds, double fraction, uint64_t seed);

namespace serial {
// Reference implementation without threading; kept for tests and the
// kernel benchmark.
double feature_smoothness(const Dataset& ds);
}  // namespace serial

}  // namespace sg
