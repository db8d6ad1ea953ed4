#pragma once

// Node-attributed undirected graphs with labels and train/val/test splits,
// stored as compressed adjacency (CSR). Datasets are immutable after
// construction; transforms return new instances.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sg {

using NodeId = int32_t;

inline constexpr int32_t kUnlabeled = -1;

enum class Split : uint8_t { None = 0, Train, Val, Test };

struct Dataset {
  int64_t num_nodes = 0;
  int64_t num_edges = 0;  // undirected edge count |E|
  std::vector<int64_t> adj_offsets;  // num_nodes + 1
  std::vector<NodeId> adj;           // 2*|E|, sorted within each node
  int64_t feature_dim = 0;
  std::vector<double> features;  // num_nodes x feature_dim, row-major
  std::vector<int32_t> labels;   // kUnlabeled where missing
  int32_t num_classes = 0;
  std::vector<Split> splits;  // Split::None for nodes outside the splits

  int64_t degree(NodeId v) const { return adj_offsets[v + 1] - adj_offsets[v]; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adj.data() + adj_offsets[v], static_cast<size_t>(degree(v))};
  }

  std::span<const double> feature_row(NodeId v) const {
    return {features.data() + static_cast<int64_t>(v) * feature_dim,
            static_cast<size_t>(feature_dim)};
  }

  bool is_labeled(NodeId v) const { return labels[v] != kUnlabeled; }

  std::vector<NodeId> split_nodes(Split s) const;

  // Symmetry, degree sum, label range and split partition checks.
  // Throws ValidationError on the first violation.
  void validate() const;
};

// BFS-truncated induced subgraph around a center node. Node order is BFS
// order with ties broken by ascending id; the center is local index 0.
struct Subgraph {
  NodeId center = 0;            // global id
  std::vector<NodeId> nodes;    // global ids
  std::vector<int64_t> adj_offsets;  // local CSR
  std::vector<int32_t> adj;          // local indices

  int64_t num_nodes() const { return static_cast<int64_t>(nodes.size()); }
  int64_t num_edges() const { return static_cast<int64_t>(adj.size()) / 2; }
};

// Split source: an explicit file wins over ratios. Ratios are drawn over
// labeled nodes only, deterministically under the seed.
struct SplitSpec {
  std::string path;
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  uint64_t seed = 7;
};

struct LoadStats {
  int64_t self_loops_dropped = 0;
  int64_t duplicate_edges = 0;
  bool remapped_ids = false;
};

// Loads edge/feature/label files (formats documented in the README),
// validates, and attaches splits. Node count and dimension come from the
// feature file. Edge files with non-integer node tokens are remapped to
// dense ids in first-appearance order; the mapping is persisted to
// id_map_path (or "<edge_path>.idmap" when empty).
Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path, const SplitSpec& split,
                     LoadStats* stats = nullptr, const std::string& id_map_path = "");

// Writes <prefix>_edges.txt / _features.txt / _labels.txt / _splits.txt
// under dir. Feature values keep full precision so a reload is bit-identical.
void save_dataset(const Dataset& ds, const std::string& dir, const std::string& prefix);

// Per-dimension min-max rescale to [0,1]; constant dimensions map to 0.
Dataset normalize_features(const Dataset& ds);

Subgraph khop_subgraph(const Dataset& ds, NodeId v, int hops);

// Assembles a Dataset from edge pairs (deduplicated, symmetrized, self
// loops rejected) plus features/labels. Used by generators and tests.
Dataset make_dataset(int64_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                     int64_t feature_dim, std::vector<double> features,
                     std::vector<int32_t> labels, std::vector<Split> splits = {});

// Draws train/val/test tags over labeled nodes with floor(ratio*n) counts
// for train and val, remainder test.
std::vector<Split> draw_splits(const Dataset& ds, double train, double val, double test,
                               uint64_t seed);

Split parse_split_tag(const std::string& tag);
const char* split_tag_name(Split s);

}  // namespace sg
