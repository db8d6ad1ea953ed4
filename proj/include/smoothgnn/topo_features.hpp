#pragma once

// Per-node local topology features: heat-kernel spectral wavelets on K-hop
// subgraphs, summarized by the empirical characteristic function of the
// center node's wavelet coefficients.

#include <cstdint>
#include <string>
#include <vector>

#include "smoothgnn/dataset.hpp"

namespace sg {

struct TopoConfig {
  int hops = 2;
  double scale = 1.0;       // heat kernel scale s
  int sample_points = 32;   // characteristic-function evaluation points
  double max_t = 20.0;      // points evenly spaced in (0, max_t]
  int64_t subgraph_cap = 500;  // uniform neighbor subsampling above this
  uint64_t cap_seed = 1;

  int dim() const { return 2 * sample_points; }
  std::vector<double> points() const;
};

struct TopoFeatureMatrix {
  int64_t num_nodes = 0;
  int dim = 0;
  double scale = 1.0;
  int hops = 2;
  std::vector<double> values;  // num_nodes x dim, row-major

  const double* row(NodeId v) const { return values.data() + static_cast<int64_t>(v) * dim; }
};

// Psi = U * diag(exp(-s * lambda)) * U^T of the subgraph's symmetric
// normalized Laplacian; m x m row-major.
std::vector<double> heat_wavelet(const Subgraph& sub, double scale);

// (Re phi(t), Im phi(t)) pairs over the sample points, where phi is the
// empirical characteristic function of the center's wavelet column.
std::vector<double> node_topo_feature(const Dataset& ds, NodeId v, const TopoConfig& cfg);

TopoFeatureMatrix all_topo_features(const Dataset& ds, const TopoConfig& cfg);

// Binary cache: magic/version header then row-major doubles.
void save_topo_cache(const TopoFeatureMatrix& m, const std::string& path);
TopoFeatureMatrix load_topo_cache(const std::string& path);

namespace serial {
TopoFeatureMatrix all_topo_features(const Dataset& ds, const TopoConfig& cfg);
}  // namespace serial

}  // namespace sg
