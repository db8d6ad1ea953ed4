#include "smoothgnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

namespace {

bool parse_int(const std::string& tok, int64_t& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) {
    if (t[0] == '#') break;  // rest of line is a comment
    toks.push_back(t);
  }
  return toks;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return in;
}

}  // namespace

std::vector<NodeId> Dataset::split_nodes(Split s) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes; ++v) {
    if (splits[v] == s) out.push_back(v);
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<int64_t>(adj.size()) != 2 * num_edges) {
    throw ValidationError("adjacency length != 2|E|");
  }
  if (static_cast<int64_t>(adj_offsets.size()) != num_nodes + 1) {
    throw ValidationError("offset array has wrong length");
  }
  for (NodeId v = 0; v < num_nodes; ++v) {
    auto nb = neighbors(v);
    for (size_t i = 0; i < nb.size(); ++i) {
      const NodeId u = nb[i];
      if (u < 0 || u >= num_nodes) throw ValidationError("neighbor id out of range");
      if (u == v) throw ValidationError("self loop stored in adjacency");
      if (i + 1 < nb.size() && nb[i] >= nb[i + 1]) {
        throw ValidationError("neighbor list not sorted / has duplicates");
      }
      // symmetry: v must appear in u's list
      auto un = neighbors(u);
      if (!std::binary_search(un.begin(), un.end(), v)) {
        throw ValidationError("adjacency not symmetric");
      }
    }
  }
  for (NodeId v = 0; v < num_nodes; ++v) {
    if (labels[v] != kUnlabeled && (labels[v] < 0 || labels[v] >= num_classes)) {
      throw ValidationError("label id out of range at node " + std::to_string(v));
    }
  }
}

Dataset make_dataset(int64_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                     int64_t feature_dim, std::vector<double> features,
                     std::vector<int32_t> labels, std::vector<Split> splits) {
  Dataset ds;
  ds.num_nodes = num_nodes;
  ds.feature_dim = feature_dim;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  if (ds.labels.empty()) ds.labels.assign(num_nodes, kUnlabeled);
  ds.splits = std::move(splits);
  if (ds.splits.empty()) ds.splits.assign(num_nodes, Split::None);
  if (static_cast<int64_t>(ds.features.size()) != num_nodes * feature_dim) {
    throw ValidationError("feature array size does not match n*d");
  }

  std::vector<std::pair<NodeId, NodeId>> canon;
  canon.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes) {
      throw ValidationError("edge endpoint out of range: " + std::to_string(a) + " " +
                            std::to_string(b));
    }
    if (a == b) continue;  // self loops never stored
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  ds.num_edges = static_cast<int64_t>(canon.size());

  std::vector<int64_t> deg(num_nodes, 0);
  for (auto [a, b] : canon) {
    ++deg[a];
    ++deg[b];
  }
  ds.adj_offsets.assign(num_nodes + 1, 0);
  for (NodeId v = 0; v < num_nodes; ++v) ds.adj_offsets[v + 1] = ds.adj_offsets[v] + deg[v];
  ds.adj.assign(2 * ds.num_edges, 0);
  std::vector<int64_t> fill(ds.adj_offsets.begin(), ds.adj_offsets.end() - 1);
  for (auto [a, b] : canon) {
    ds.adj[fill[a]++] = b;
    ds.adj[fill[b]++] = a;
  }
  for (NodeId v = 0; v < num_nodes; ++v) {
    std::sort(ds.adj.begin() + ds.adj_offsets[v], ds.adj.begin() + ds.adj_offsets[v + 1]);
  }

  int32_t max_label = -1;
  for (int32_t l : ds.labels) max_label = std::max(max_label, l);
  ds.num_classes = max_label + 1;
  return ds;
}

std::vector<Split> draw_splits(const Dataset& ds, double train, double val, double test,
                               uint64_t seed) {
  if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be nonnegative and sum to 1");
  }
  std::vector<NodeId> labeled;
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    if (ds.is_labeled(v)) labeled.push_back(v);
  }
  Rng rng(seed);
  rng.shuffle(labeled);
  const int64_t n = static_cast<int64_t>(labeled.size());
  const int64_t n_train = static_cast<int64_t>(std::floor(train * n));
  const int64_t n_val = static_cast<int64_t>(std::floor(val * n));
  std::vector<Split> out(ds.num_nodes, Split::None);
  for (int64_t i = 0; i < n; ++i) {
    out[labeled[i]] = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
  }
  return out;
}

Split parse_split_tag(const std::string& tag) {
  if (tag == "train") return Split::Train;
  if (tag == "val") return Split::Val;
  if (tag == "test") return Split::Test;
  throw ParseError("unknown split tag: " + tag);
}

const char* split_tag_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    default: return "none";
  }
}

Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path, const SplitSpec& split, LoadStats* stats,
                     const std::string& id_map_path) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;

  // features define node count and dimension
  std::ifstream fin = open_or_throw(feature_path);
  std::string line;
  if (!std::getline(fin, line)) throw ParseError(feature_path + ": empty feature file");
  int64_t n = 0, d = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> n >> d) || n <= 0 || d <= 0) {
      throw ParseError(feature_path + ":1: expected header \"n d\"");
    }
  }
  std::vector<double> features;
  features.reserve(n * d);
  for (int64_t i = 0; i < n; ++i) {
    if (!std::getline(fin, line)) {
      throw ParseError(feature_path + ": feature rows do not cover all nodes (got " +
                       std::to_string(i) + " of " + std::to_string(n) + ")");
    }
    std::istringstream ss(line);
    for (int64_t j = 0; j < d; ++j) {
      double x;
      if (!(ss >> x)) {
        throw ParseError(feature_path + ":" + std::to_string(i + 2) + ": expected " +
                         std::to_string(d) + " values");
      }
      features.push_back(x);
    }
  }

  // edge tokens: all-integer files use explicit dense ids, anything else is
  // remapped in first-appearance order and the map persisted
  std::ifstream ein = open_or_throw(edge_path);
  std::vector<std::pair<std::string, std::string>> raw_edges;
  int64_t line_no = 0;
  bool all_int = true;
  while (std::getline(ein, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 2) {
      throw ParseError(edge_path + ":" + std::to_string(line_no) + ": expected \"src dst\"");
    }
    int64_t tmp;
    if (!parse_int(toks[0], tmp) || !parse_int(toks[1], tmp)) all_int = false;
    raw_edges.emplace_back(toks[0], toks[1]);
  }

  std::unordered_map<std::string, NodeId> id_map;
  auto resolve = [&](const std::string& tok) -> NodeId {
    if (all_int) {
      int64_t v = 0;
      parse_int(tok, v);
      if (v < 0 || v >= n) {
        throw ValidationError(edge_path + ": node id " + tok +
                              " outside dense range [0," + std::to_string(n) + ")");
      }
      return static_cast<NodeId>(v);
    }
    auto it = id_map.find(tok);
    if (it != id_map.end()) return it->second;
    const NodeId next = static_cast<NodeId>(id_map.size());
    if (next >= n) {
      throw ValidationError(edge_path + ": more distinct node ids than feature rows");
    }
    id_map.emplace(tok, next);
    return next;
  };

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw_edges.size());
  int64_t self_loops = 0;
  for (auto& [a, b] : raw_edges) {
    const NodeId u = resolve(a);
    const NodeId v = resolve(b);
    if (u == v) {
      ++self_loops;
      continue;
    }
    edges.emplace_back(u, v);
  }
  st.self_loops_dropped = self_loops;
  if (self_loops > 0) {
    std::fprintf(stderr, "warning: %s: dropped %lld self-loop line(s)\n", edge_path.c_str(),
                 static_cast<long long>(self_loops));
  }
  {
    std::vector<std::pair<NodeId, NodeId>> canon;
    canon.reserve(edges.size());
    for (auto [a, b] : edges) canon.emplace_back(std::min(a, b), std::max(a, b));
    std::sort(canon.begin(), canon.end());
    const auto before = canon.size();
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
    st.duplicate_edges = static_cast<int64_t>(before - canon.size());
  }
  if (!all_int) {
    st.remapped_ids = true;
    const std::string map_path = id_map_path.empty() ? edge_path + ".idmap" : id_map_path;
    std::ofstream mout(map_path);
    if (!mout) throw ParseError("cannot write id map: " + map_path);
    std::vector<std::pair<NodeId, std::string>> ordered;
    ordered.reserve(id_map.size());
    for (auto& [tok, id] : id_map) ordered.emplace_back(id, tok);
    std::sort(ordered.begin(), ordered.end());
    for (auto& [id, tok] : ordered) mout << tok << " " << id << "\n";
  }

  // labels: missing nodes stay unlabeled
  std::vector<int32_t> labels(n, kUnlabeled);
  {
    std::ifstream lin = open_or_throw(label_path);
    int64_t lno = 0;
    while (std::getline(lin, line)) {
      ++lno;
      auto toks = tokenize(line);
      if (toks.empty()) continue;
      if (toks.size() < 2) {
        throw ParseError(label_path + ":" + std::to_string(lno) + ": expected \"node label\"");
      }
      NodeId v;
      if (all_int) {
        int64_t tmp;
        if (!parse_int(toks[0], tmp)) {
          throw ParseError(label_path + ":" + std::to_string(lno) + ": bad node id");
        }
        if (tmp < 0 || tmp >= n) {
          throw ValidationError(label_path + ": node id " + toks[0] + " out of range");
        }
        v = static_cast<NodeId>(tmp);
      } else {
        auto it = id_map.find(toks[0]);
        if (it == id_map.end()) continue;  // labeled node never seen in edges
        v = it->second;
      }
      int64_t cls;
      if (!parse_int(toks[1], cls) || cls < 0) {
        throw ValidationError(label_path + ":" + std::to_string(lno) + ": bad class id");
      }
      labels[v] = static_cast<int32_t>(cls);
    }
  }

  Dataset ds = make_dataset(n, edges, d, std::move(features), std::move(labels));

  if (!split.path.empty()) {
    std::ifstream sin = open_or_throw(split.path);
    std::vector<Split> tags(n, Split::None);
    int64_t sno = 0;
    while (std::getline(sin, line)) {
      ++sno;
      auto toks = tokenize(line);
      if (toks.empty()) continue;
      if (toks.size() < 2) {
        throw ParseError(split.path + ":" + std::to_string(sno) + ": expected \"node tag\"");
      }
      int64_t v;
      if (!parse_int(toks[0], v) || v < 0 || v >= n) {
        throw ValidationError(split.path + ":" + std::to_string(sno) + ": bad node id");
      }
      tags[v] = parse_split_tag(toks[1]);
    }
    ds.splits = std::move(tags);
  } else {
    ds.splits = draw_splits(ds, split.train, split.val, split.test, split.seed);
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir, const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string base = (fs::path(dir) / prefix).string();

  std::ofstream eout(base + "_edges.txt");
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    for (NodeId u : ds.neighbors(v)) {
      if (v < u) eout << v << " " << u << "\n";
    }
  }

  std::ofstream fout(base + "_features.txt");
  fout << ds.num_nodes << " " << ds.feature_dim << "\n";
  char buf[64];
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    auto row = ds.feature_row(v);
    for (int64_t j = 0; j < ds.feature_dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      fout << buf << (j + 1 == ds.feature_dim ? "" : " ");
    }
    fout << "\n";
  }

  std::ofstream lout(base + "_labels.txt");
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    if (ds.is_labeled(v)) lout << v << " " << ds.labels[v] << "\n";
  }

  std::ofstream sout(base + "_splits.txt");
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    if (ds.splits[v] != Split::None) sout << v << " " << split_tag_name(ds.splits[v]) << "\n";
  }
}

Dataset normalize_features(const Dataset& ds) {
  Dataset out = ds;
  const int64_t n = ds.num_nodes, d = ds.feature_dim;
  for (int64_t j = 0; j < d; ++j) {
    double lo = ds.features[j], hi = ds.features[j];
    for (int64_t i = 0; i < n; ++i) {
      const double x = ds.features[i * d + j];
      if (!std::isfinite(x)) {
        throw ValidationError("non-finite feature at node " + std::to_string(i) +
                              " dim " + std::to_string(j));
      }
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double range = hi - lo;
    for (int64_t i = 0; i < n; ++i) {
      double& y = out.features[i * d + j];
      y = range > 0 ? (ds.features[i * d + j] - lo) / range : 0.0;
    }
  }
  return out;
}

Subgraph khop_subgraph(const Dataset& ds, NodeId v, int hops) {
  if (v < 0 || v >= ds.num_nodes) throw ValidationError("khop_subgraph: bad center id");
  if (hops < 1) throw ValidationError("khop_subgraph: hops must be >= 1");

  Subgraph out;
  out.center = v;
  std::unordered_map<NodeId, int32_t> local;
  local.reserve(64);
  std::queue<std::pair<NodeId, int>> frontier;
  frontier.emplace(v, 0);
  local.emplace(v, 0);
  out.nodes.push_back(v);
  while (!frontier.empty()) {
    auto [u, depth] = frontier.front();
    frontier.pop();
    if (depth == hops) continue;
    for (NodeId w : ds.neighbors(u)) {  // sorted, so BFS ties resolve by ascending id
      if (local.contains(w)) continue;
      local.emplace(w, static_cast<int32_t>(out.nodes.size()));
      out.nodes.push_back(w);
      frontier.emplace(w, depth + 1);
    }
  }

  const int64_t m = out.num_nodes();
  std::vector<std::vector<int32_t>> nb(m);
  for (int64_t i = 0; i < m; ++i) {
    for (NodeId w : ds.neighbors(out.nodes[i])) {
      auto it = local.find(w);
      if (it != local.end()) nb[i].push_back(it->second);
    }
  }
  out.adj_offsets.assign(m + 1, 0);
  for (int64_t i = 0; i < m; ++i) {
    std::sort(nb[i].begin(), nb[i].end());
    out.adj_offsets[i + 1] = out.adj_offsets[i] + static_cast<int64_t>(nb[i].size());
  }
  out.adj.reserve(out.adj_offsets[m]);
  for (auto& lst : nb) out.adj.insert(out.adj.end(), lst.begin(), lst.end());
  return out;
}

}  // namespace sg
