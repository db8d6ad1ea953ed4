#include "smoothgnn/topo_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/linalg.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

namespace {

constexpr char kCacheMagic[4] = {'T', 'O', 'P', 'O'};
constexpr uint16_t kCacheVersion = 1;

// Keeps the center plus a uniform sample of the remaining nodes, then
// re-induces the adjacency.
Subgraph cap_subgraph(const Subgraph& sub, int64_t cap, uint64_t seed) {
  if (sub.num_nodes() <= cap) return sub;
  std::vector<int32_t> pick;  // local indices, center always kept
  {
    std::vector<int32_t> rest(sub.num_nodes() - 1);
    for (size_t i = 0; i < rest.size(); ++i) rest[i] = static_cast<int32_t>(i + 1);
    Rng rng(seed ^ (static_cast<uint64_t>(sub.center) * 0x9e3779b9ULL));
    rng.shuffle(rest);
    rest.resize(cap - 1);
    std::sort(rest.begin(), rest.end());  // keep BFS-relative order
    pick.push_back(0);
    pick.insert(pick.end(), rest.begin(), rest.end());
  }
  std::vector<int32_t> remap(sub.num_nodes(), -1);
  for (size_t i = 0; i < pick.size(); ++i) remap[pick[i]] = static_cast<int32_t>(i);

  Subgraph out;
  out.center = sub.center;
  out.nodes.reserve(pick.size());
  for (int32_t p : pick) out.nodes.push_back(sub.nodes[p]);
  const int64_t m = static_cast<int64_t>(pick.size());
  out.adj_offsets.assign(m + 1, 0);
  std::vector<std::vector<int32_t>> nb(m);
  for (int64_t i = 0; i < m; ++i) {
    const int32_t old = pick[i];
    for (int64_t e = sub.adj_offsets[old]; e < sub.adj_offsets[old + 1]; ++e) {
      const int32_t w = remap[sub.adj[e]];
      if (w >= 0) nb[i].push_back(w);
    }
    std::sort(nb[i].begin(), nb[i].end());
    out.adj_offsets[i + 1] = out.adj_offsets[i] + static_cast<int64_t>(nb[i].size());
  }
  for (auto& lst : nb) out.adj.insert(out.adj.end(), lst.begin(), lst.end());
  return out;
}

}  // namespace

std::vector<double> TopoConfig::points() const {
  std::vector<double> t(sample_points);
  for (int k = 0; k < sample_points; ++k) {
    t[k] = max_t * static_cast<double>(k + 1) / static_cast<double>(sample_points);
  }
  return t;
}

std::vector<double> heat_wavelet(const Subgraph& sub, double scale) {
  if (scale <= 0.0) throw ValidationError("heat_wavelet: scale must be > 0");
  const int64_t m = sub.num_nodes();
  if (m == 0) throw ValidationError("heat_wavelet: empty subgraph");

  // symmetric normalized Laplacian; isolated rows stay zero
  std::vector<double> lap(m * m, 0.0);
  std::vector<double> inv_sqrt_deg(m, 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const int64_t deg = sub.adj_offsets[i + 1] - sub.adj_offsets[i];
    if (deg > 0) {
      inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(deg));
      lap[i * m + i] = 1.0;
    }
  }
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t e = sub.adj_offsets[i]; e < sub.adj_offsets[i + 1]; ++e) {
      const int64_t j = sub.adj[e];
      lap[i * m + j] = -inv_sqrt_deg[i] * inv_sqrt_deg[j];
    }
  }

  SymEig eig = jacobi_eigh(std::move(lap), m);
  std::vector<double> psi(m * m, 0.0);
  for (int64_t k = 0; k < m; ++k) {
    const double w = std::exp(-scale * eig.values[k]);
    for (int64_t i = 0; i < m; ++i) {
      const double uik = eig.vectors[i * m + k] * w;
      for (int64_t j = 0; j <= i; ++j) {
        psi[i * m + j] += uik * eig.vectors[j * m + k];
      }
    }
  }
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = i + 1; j < m; ++j) psi[i * m + j] = psi[j * m + i];
  }
  return psi;
}

std::vector<double> node_topo_feature(const Dataset& ds, NodeId v, const TopoConfig& cfg) {
  Subgraph sub = khop_subgraph(ds, v, cfg.hops);
  if (sub.num_nodes() > cfg.subgraph_cap) sub = cap_subgraph(sub, cfg.subgraph_cap, cfg.cap_seed);
  const std::vector<double> psi = heat_wavelet(sub, cfg.scale);
  const int64_t m = sub.num_nodes();
  // center is local index 0; its wavelet column is row 0 by symmetry
  const double* col = psi.data();

  const auto points = cfg.points();
  std::vector<double> out;
  out.reserve(cfg.dim());
  for (double t : points) {
    double re = 0.0, im = 0.0;
    for (int64_t j = 0; j < m; ++j) {
      re += std::cos(t * col[j]);
      im += std::sin(t * col[j]);
    }
    out.push_back(re / static_cast<double>(m));
    out.push_back(im / static_cast<double>(m));
  }
  return out;
}

TopoFeatureMatrix serial::all_topo_features(const Dataset& ds, const TopoConfig& cfg) {
  TopoFeatureMatrix m;
  m.num_nodes = ds.num_nodes;
  m.dim = cfg.dim();
  m.scale = cfg.scale;
  m.hops = cfg.hops;
  m.values.assign(ds.num_nodes * static_cast<int64_t>(m.dim), 0.0);
  for (int64_t v = 0; v < ds.num_nodes; ++v) {
    const auto row = node_topo_feature(ds, static_cast<NodeId>(v), cfg);
    std::copy(row.begin(), row.end(), m.values.begin() + v * m.dim);
  }
  return m;
}

TopoFeatureMatrix all_topo_features(const Dataset& ds, const TopoConfig& cfg) {
  TopoFeatureMatrix m;
  m.num_nodes = ds.num_nodes;
  m.dim = cfg.dim();
  m.scale = cfg.scale;
  m.hops = cfg.hops;
  m.values.assign(ds.num_nodes * static_cast<int64_t>(m.dim), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (int64_t v = 0; v < ds.num_nodes; ++v) {
    const auto row = node_topo_feature(ds, static_cast<NodeId>(v), cfg);
    std::copy(row.begin(), row.end(), m.values.begin() + v * m.dim);
  }
  return m;
}

void save_topo_cache(const TopoFeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write topo cache: " + path);
  out.write(kCacheMagic, 4);
  auto put = [&](const void* p, size_t len) { out.write(static_cast<const char*>(p), len); };
  const uint16_t version = kCacheVersion;
  put(&version, sizeof version);
  const int64_t n = m.num_nodes;
  const int64_t dim = m.dim;
  put(&n, sizeof n);
  put(&dim, sizeof dim);
  put(&m.scale, sizeof m.scale);
  const int64_t hops = m.hops;
  put(&hops, sizeof hops);
  put(m.values.data(), m.values.size() * sizeof(double));
}

TopoFeatureMatrix load_topo_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open topo cache: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0) {
    throw ParseError("topo cache has bad magic: " + path);
  }
  uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kCacheVersion) throw ParseError("topo cache has unknown version");
  TopoFeatureMatrix m;
  int64_t n = 0, dim = 0, hops = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&m.scale), sizeof m.scale);
  in.read(reinterpret_cast<char*>(&hops), sizeof hops);
  if (!in || n < 0 || dim <= 0) throw ParseError("topo cache header corrupt");
  m.num_nodes = n;
  m.dim = static_cast<int>(dim);
  m.hops = static_cast<int>(hops);
  m.values.resize(n * dim);
  in.read(reinterpret_cast<char*>(m.values.data()), m.values.size() * sizeof(double));
  if (!in) throw ParseError("topo cache truncated: " + path);
  return m;
}

}  // namespace sg
