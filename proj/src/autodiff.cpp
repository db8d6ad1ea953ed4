#include "smoothgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smoothgnn/errors.hpp"

namespace sg {

namespace {

std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    out += std::to_string(s[i]);
    if (i + 1 < s.size()) out += ",";
  }
  return out + "]";
}

void require_same_shape(const char* op, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                          shape_str(b->shape));
  }
}

TensorPtr make_out(std::vector<int64_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->v.assign(t->size(), 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->g.assign(t->size(), 0.0);
  return t;
}

bool any_grad(const TensorPtr& a) { return a->requires_grad; }
bool any_grad(const TensorPtr& a, const TensorPtr& b) {
  return a->requires_grad || b->requires_grad;
}

}  // namespace

TensorPtr tensor(std::vector<int64_t> shape, bool requires_grad) {
  return make_out(std::move(shape), requires_grad);
}

TensorPtr tensor_of(std::vector<int64_t> shape, std::vector<double> values, bool requires_grad) {
  auto t = make_out(std::move(shape), requires_grad);
  if (static_cast<int64_t>(values.size()) != t->size()) {
    throw ValidationError("tensor_of: value count does not match shape");
  }
  t->v = std::move(values);
  return t;
}

TensorPtr scalar_tensor(double value) { return tensor_of({1}, {value}); }

SegmentIndex build_segment_index(const Dataset& ds, bool with_self_loops) {
  SegmentIndex seg;
  seg.num_segments = ds.num_nodes;
  seg.seg_offsets.assign(ds.num_nodes + 1, 0);
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    seg.seg_offsets[v + 1] =
        seg.seg_offsets[v] + ds.degree(v) + (with_self_loops ? 1 : 0);
  }
  seg.src.reserve(seg.seg_offsets[ds.num_nodes]);
  seg.dst.reserve(seg.seg_offsets[ds.num_nodes]);
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    bool self_emitted = false;
    for (NodeId u : ds.neighbors(v)) {
      if (with_self_loops && !self_emitted && u > v) {
        seg.src.push_back(v);
        seg.dst.push_back(v);
        self_emitted = true;
      }
      seg.src.push_back(u);
      seg.dst.push_back(v);
    }
    if (with_self_loops && !self_emitted) {
      seg.src.push_back(v);
      seg.dst.push_back(v);
    }
  }
  return seg;
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->size() != 1) throw ValidationError("backward: loss must be scalar");
  if (!loss->requires_grad) throw ValidationError("backward: loss does not require grad");
  if (consumed_) throw ValidationError("backward: tape already consumed; reset() first");
  consumed_ = true;
  loss->g[0] = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---- gemm ------------------------------------------------------------------

namespace {

template <bool TA, bool TB>
inline void gemm_rows(int64_t m, int64_t n, int64_t k, const double* a, const double* b, double* c,
                      bool accumulate, int64_t i) {
  for (int64_t j = 0; j < n; ++j) {
    double acc = accumulate ? c[i * n + j] : 0.0;
    for (int64_t p = 0; p < k; ++p) {
      const double av = TA ? a[p * m + i] : a[i * k + p];
      const double bv = TB ? b[j * k + p] : b[p * n + j];
      acc += av * bv;
    }
    c[i * n + j] = acc;
  }
}

template <bool TA, bool TB>
void gemm_impl(int64_t m, int64_t n, int64_t k, const double* a, const double* b, double* c,
               bool accumulate, bool parallel) {
  if (parallel && m * n * k > 32768) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) gemm_rows<TA, TB>(m, n, k, a, b, c, accumulate, i);
  } else {
    for (int64_t i = 0; i < m; ++i) gemm_rows<TA, TB>(m, n, k, a, b, c, accumulate, i);
  }
}

void gemm_dispatch(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* a,
                   const double* b, double* c, bool accumulate, bool parallel) {
  if (!ta && !tb) gemm_impl<false, false>(m, n, k, a, b, c, accumulate, parallel);
  else if (ta && !tb) gemm_impl<true, false>(m, n, k, a, b, c, accumulate, parallel);
  else if (!ta && tb) gemm_impl<false, true>(m, n, k, a, b, c, accumulate, parallel);
  else gemm_impl<true, true>(m, n, k, a, b, c, accumulate, parallel);
}

}  // namespace

void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* a, const double* b,
          double* c, bool accumulate) {
  gemm_dispatch(ta, tb, m, n, k, a, b, c, accumulate, true);
}

void serial::gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* a,
                  const double* b, double* c, bool accumulate) {
  gemm_dispatch(ta, tb, m, n, k, a, b, c, accumulate, false);
}

// ---- ops -------------------------------------------------------------------

TensorPtr matmul(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
    throw ValidationError("matmul: incompatible shapes " + shape_str(a->shape) + " x " +
                          shape_str(b->shape));
  }
  const int64_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = make_out({m, n}, any_grad(a, b));
  gemm(false, false, m, n, k, a->v.data(), b->v.data(), out->v.data(), false);
  if (out->requires_grad) {
    t.record([a, b, out, m, k, n] {
      if (a->requires_grad) {
        gemm(false, true, m, k, n, out->g.data(), b->v.data(), a->g.data(), true);
      }
      if (b->requires_grad) {
        gemm(true, false, k, n, m, a->v.data(), out->g.data(), b->g.data(), true);
      }
    });
  }
  return out;
}

TensorPtr matvec(Tape& t, const TensorPtr& a, const TensorPtr& x) {
  if (a->shape.size() != 2 || x->shape.size() != 1 || a->shape[1] != x->shape[0]) {
    throw ValidationError("matvec: incompatible shapes " + shape_str(a->shape) + " x " +
                          shape_str(x->shape));
  }
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = make_out({m}, any_grad(a, x));
  for (int64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) acc += a->v[i * n + j] * x->v[j];
    out->v[i] = acc;
  }
  if (out->requires_grad) {
    t.record([a, x, out, m, n] {
      for (int64_t i = 0; i < m; ++i) {
        const double go = out->g[i];
        if (go == 0.0) continue;
        if (a->requires_grad) {
          for (int64_t j = 0; j < n; ++j) a->g[i * n + j] += go * x->v[j];
        }
        if (x->requires_grad) {
          for (int64_t j = 0; j < n; ++j) x->g[j] += go * a->v[i * n + j];
        }
      }
    });
  }
  return out;
}

TensorPtr add(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape("add", a, b);
  auto out = make_out(a->shape, any_grad(a, b));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] + b->v[i];
  if (out->requires_grad) {
    t.record([a, b, out] {
      if (a->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i];
      }
      if (b->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) b->g[i] += out->g[i];
      }
    });
  }
  return out;
}

TensorPtr add_rowvec(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape.size() != 2 || b->shape.size() != 1 || a->shape[1] != b->shape[0]) {
    throw ValidationError("add_rowvec: incompatible shapes " + shape_str(a->shape) + " + " +
                          shape_str(b->shape));
  }
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = make_out(a->shape, any_grad(a, b));
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out->v[i * n + j] = a->v[i * n + j] + b->v[j];
  }
  if (out->requires_grad) {
    t.record([a, b, out, m, n] {
      if (a->requires_grad) {
        for (int64_t i = 0; i < m * n; ++i) a->g[i] += out->g[i];
      }
      if (b->requires_grad) {
        for (int64_t i = 0; i < m; ++i) {
          for (int64_t j = 0; j < n; ++j) b->g[j] += out->g[i * n + j];
        }
      }
    });
  }
  return out;
}

TensorPtr sub(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape("sub", a, b);
  auto out = make_out(a->shape, any_grad(a, b));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] - b->v[i];
  if (out->requires_grad) {
    t.record([a, b, out] {
      if (a->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i];
      }
      if (b->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) b->g[i] -= out->g[i];
      }
    });
  }
  return out;
}

TensorPtr mul(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape("mul", a, b);
  auto out = make_out(a->shape, any_grad(a, b));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] * b->v[i];
  if (out->requires_grad) {
    t.record([a, b, out] {
      if (a->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i] * b->v[i];
      }
      if (b->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) b->g[i] += out->g[i] * a->v[i];
      }
    });
  }
  return out;
}

TensorPtr div(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape("div", a, b);
  auto out = make_out(a->shape, any_grad(a, b));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] / b->v[i];
  if (out->requires_grad) {
    t.record([a, b, out] {
      if (a->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i] / b->v[i];
      }
      if (b->requires_grad) {
        for (int64_t i = 0; i < out->size(); ++i) {
          b->g[i] -= out->g[i] * a->v[i] / (b->v[i] * b->v[i]);
        }
      }
    });
  }
  return out;
}

TensorPtr scale(Tape& t, const TensorPtr& a, double c) {
  auto out = make_out(a->shape, any_grad(a));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] * c;
  if (out->requires_grad) {
    t.record([a, out, c] {
      for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i] * c;
    });
  }
  return out;
}

TensorPtr row_sum(Tape& t, const TensorPtr& a) {
  if (a->shape.size() != 2) throw ValidationError("row_sum: expected a matrix");
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = make_out({m}, any_grad(a));
  for (int64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) acc += a->v[i * n + j];
    out->v[i] = acc;
  }
  if (out->requires_grad) {
    t.record([a, out, m, n] {
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) a->g[i * n + j] += out->g[i];
      }
    });
  }
  return out;
}

TensorPtr concat_cols(Tape& t, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[0] != b->shape[0]) {
    throw ValidationError("concat_cols: incompatible shapes " + shape_str(a->shape) + " || " +
                          shape_str(b->shape));
  }
  const int64_t m = a->shape[0], p = a->shape[1], q = b->shape[1];
  auto out = make_out({m, p + q}, any_grad(a, b));
  for (int64_t i = 0; i < m; ++i) {
    std::copy(a->v.begin() + i * p, a->v.begin() + (i + 1) * p, out->v.begin() + i * (p + q));
    std::copy(b->v.begin() + i * q, b->v.begin() + (i + 1) * q,
              out->v.begin() + i * (p + q) + p);
  }
  if (out->requires_grad) {
    t.record([a, b, out, m, p, q] {
      for (int64_t i = 0; i < m; ++i) {
        if (a->requires_grad) {
          for (int64_t j = 0; j < p; ++j) a->g[i * p + j] += out->g[i * (p + q) + j];
        }
        if (b->requires_grad) {
          for (int64_t j = 0; j < q; ++j) b->g[i * q + j] += out->g[i * (p + q) + p + j];
        }
      }
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
TensorPtr unary_op(Tape& t, const TensorPtr& a, Fwd fwd, Bwd dydx) {
  auto out = make_out(a->shape, any_grad(a));
  for (int64_t i = 0; i < out->size(); ++i) out->v[i] = fwd(a->v[i]);
  if (out->requires_grad) {
    t.record([a, out, dydx] {
      for (int64_t i = 0; i < out->size(); ++i) {
        a->g[i] += out->g[i] * dydx(a->v[i], out->v[i]);
      }
    });
  }
  return out;
}

}  // namespace

TensorPtr relu(Tape& t, const TensorPtr& a) {
  return unary_op(
      t, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

TensorPtr elu(Tape& t, const TensorPtr& a, double alpha) {
  return unary_op(
      t, a, [alpha](double x) { return x > 0.0 ? x : alpha * (std::exp(x) - 1.0); },
      [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

TensorPtr leaky_relu(Tape& t, const TensorPtr& a, double slope) {
  return unary_op(
      t, a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

TensorPtr exp_op(Tape& t, const TensorPtr& a) {
  return unary_op(
      t, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

TensorPtr dropout(Tape& t, const TensorPtr& a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ValidationError("dropout: p must be in [0,1)");
  if (p == 0.0) return a;
  const double keep = 1.0 - p;
  auto mask = std::make_shared<std::vector<double>>(a->size());
  for (int64_t i = 0; i < a->size(); ++i) {
    (*mask)[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  auto out = make_out(a->shape, any_grad(a));
  for (int64_t i = 0; i < a->size(); ++i) out->v[i] = a->v[i] * (*mask)[i];
  if (out->requires_grad) {
    t.record([a, out, mask] {
      for (int64_t i = 0; i < out->size(); ++i) a->g[i] += out->g[i] * (*mask)[i];
    });
  }
  return out;
}

TensorPtr row_gather(Tape& t, const TensorPtr& a, const std::vector<NodeId>& idx) {
  const int64_t d = a->cols();
  const int64_t rows_out = static_cast<int64_t>(idx.size());
  const bool vec = a->shape.size() == 1;
  auto out = make_out(vec ? std::vector<int64_t>{rows_out}
                          : std::vector<int64_t>{rows_out, d},
                      any_grad(a));
  for (int64_t r = 0; r < rows_out; ++r) {
    const int64_t srcr = idx[r];
    for (int64_t j = 0; j < d; ++j) out->v[r * d + j] = a->v[srcr * d + j];
  }
  if (out->requires_grad) {
    auto ids = std::make_shared<std::vector<NodeId>>(idx);
    t.record([a, out, ids, d, rows_out] {
      for (int64_t r = 0; r < rows_out; ++r) {
        const int64_t srcr = (*ids)[r];
        for (int64_t j = 0; j < d; ++j) a->g[srcr * d + j] += out->g[r * d + j];
      }
    });
  }
  return out;
}

TensorPtr segment_sum(Tape& t, const TensorPtr& edge_vals, const SegmentIndex& seg) {
  if (edge_vals->rows() != seg.num_entries()) {
    throw ValidationError("segment_sum: edge array length does not match the segment index");
  }
  const int64_t d = edge_vals->cols();
  const bool vec = edge_vals->shape.size() == 1;
  auto out = make_out(vec ? std::vector<int64_t>{seg.num_segments}
                          : std::vector<int64_t>{seg.num_segments, d},
                      any_grad(edge_vals));
  for (int64_t i = 0; i < seg.num_segments; ++i) {
    for (int64_t e = seg.seg_offsets[i]; e < seg.seg_offsets[i + 1]; ++e) {
      for (int64_t j = 0; j < d; ++j) out->v[i * d + j] += edge_vals->v[e * d + j];
    }
  }
  if (out->requires_grad) {
    const auto* s = &seg;
    t.record([edge_vals, out, s, d] {
      for (int64_t i = 0; i < s->num_segments; ++i) {
        for (int64_t e = s->seg_offsets[i]; e < s->seg_offsets[i + 1]; ++e) {
          for (int64_t j = 0; j < d; ++j) edge_vals->g[e * d + j] += out->g[i * d + j];
        }
      }
    });
  }
  return out;
}

TensorPtr segment_softmax(Tape& t, const TensorPtr& logits, const SegmentIndex& seg) {
  if (logits->shape.size() != 1 || logits->shape[0] != seg.num_entries()) {
    throw ValidationError("segment_softmax: expected one logit per segment entry");
  }
  auto out = make_out(logits->shape, any_grad(logits));
  for (int64_t i = 0; i < seg.num_segments; ++i) {
    const int64_t lo = seg.seg_offsets[i], hi = seg.seg_offsets[i + 1];
    if (lo == hi) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t e = lo; e < hi; ++e) mx = std::max(mx, logits->v[e]);
    double denom = 0.0;
    for (int64_t e = lo; e < hi; ++e) denom += std::exp(logits->v[e] - mx);
    for (int64_t e = lo; e < hi; ++e) out->v[e] = std::exp(logits->v[e] - mx) / denom;
  }
  if (out->requires_grad) {
    const auto* s = &seg;
    t.record([logits, out, s] {
      for (int64_t i = 0; i < s->num_segments; ++i) {
        const int64_t lo = s->seg_offsets[i], hi = s->seg_offsets[i + 1];
        double dot = 0.0;
        for (int64_t e = lo; e < hi; ++e) dot += out->g[e] * out->v[e];
        for (int64_t e = lo; e < hi; ++e) {
          logits->g[e] += out->v[e] * (out->g[e] - dot);
        }
      }
    });
  }
  return out;
}

TensorPtr segment_max(Tape& t, const TensorPtr& edge_vals, const SegmentIndex& seg) {
  if (edge_vals->shape.size() != 2 || edge_vals->shape[0] != seg.num_entries()) {
    throw ValidationError("segment_max: expected an [E,d] edge array");
  }
  const int64_t d = edge_vals->shape[1];
  auto out = make_out({seg.num_segments, d}, any_grad(edge_vals));
  auto argmax = std::make_shared<std::vector<int64_t>>(seg.num_segments * d, -1);
  for (int64_t i = 0; i < seg.num_segments; ++i) {
    const int64_t lo = seg.seg_offsets[i], hi = seg.seg_offsets[i + 1];
    if (lo == hi) continue;  // empty segment stays zero
    for (int64_t j = 0; j < d; ++j) {
      double best = edge_vals->v[lo * d + j];
      int64_t arg = lo;
      for (int64_t e = lo + 1; e < hi; ++e) {
        if (edge_vals->v[e * d + j] > best) {
          best = edge_vals->v[e * d + j];
          arg = e;
        }
      }
      out->v[i * d + j] = best;
      (*argmax)[i * d + j] = arg;
    }
  }
  if (out->requires_grad) {
    t.record([edge_vals, out, argmax, d] {
      for (int64_t i = 0; i < out->shape[0]; ++i) {
        for (int64_t j = 0; j < d; ++j) {
          const int64_t arg = (*argmax)[i * d + j];
          if (arg >= 0) edge_vals->g[arg * d + j] += out->g[i * d + j];
        }
      }
    });
  }
  return out;
}

TensorPtr weighted_neighbor_sum(Tape& t, const TensorPtr& coeffs, const TensorPtr& values,
                                const SegmentIndex& seg) {
  if (coeffs->shape.size() != 1 || coeffs->shape[0] != seg.num_entries()) {
    throw ValidationError("weighted_neighbor_sum: expected one coefficient per edge");
  }
  if (values->shape.size() != 2 || values->shape[0] != seg.num_segments) {
    throw ValidationError("weighted_neighbor_sum: node values must be [n,d]");
  }
  const int64_t d = values->shape[1];
  auto out = make_out({seg.num_segments, d}, any_grad(coeffs, values));
  for (int64_t i = 0; i < seg.num_segments; ++i) {
    for (int64_t e = seg.seg_offsets[i]; e < seg.seg_offsets[i + 1]; ++e) {
      const double a = coeffs->v[e];
      if (a == 0.0) continue;
      const double* h = values->v.data() + static_cast<int64_t>(seg.src[e]) * d;
      double* o = out->v.data() + i * d;
      for (int64_t j = 0; j < d; ++j) o[j] += a * h[j];
    }
  }
  if (out->requires_grad) {
    const auto* s = &seg;
    t.record([coeffs, values, out, s, d] {
      for (int64_t i = 0; i < s->num_segments; ++i) {
        for (int64_t e = s->seg_offsets[i]; e < s->seg_offsets[i + 1]; ++e) {
          const double* go = out->g.data() + i * d;
          const int64_t src_row = static_cast<int64_t>(s->src[e]) * d;
          if (coeffs->requires_grad) {
            double acc = 0.0;
            for (int64_t j = 0; j < d; ++j) acc += go[j] * values->v[src_row + j];
            coeffs->g[e] += acc;
          }
          if (values->requires_grad) {
            const double a = coeffs->v[e];
            if (a != 0.0) {
              for (int64_t j = 0; j < d; ++j) values->g[src_row + j] += a * go[j];
            }
          }
        }
      }
    });
  }
  return out;
}

TensorPtr softmax_cross_entropy(Tape& t, const TensorPtr& logits,
                                const std::vector<int32_t>& labels,
                                const std::vector<NodeId>& mask) {
  if (logits->shape.size() != 2) throw ValidationError("softmax_cross_entropy: logits must be [n,C]");
  if (mask.empty()) throw ValidationError("softmax_cross_entropy: empty mask");
  const int64_t c = logits->shape[1];
  auto probs = std::make_shared<std::vector<double>>(mask.size() * c);
  double loss_val = 0.0;
  for (size_t r = 0; r < mask.size(); ++r) {
    const int64_t row = mask[r];
    const int32_t y = labels[row];
    if (y < 0 || y >= c) {
      throw ValidationError("softmax_cross_entropy: masked node " + std::to_string(row) +
                            " has no valid label");
    }
    const double* l = logits->v.data() + row * c;
    double mx = l[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, l[j]);
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) denom += std::exp(l[j] - mx);
    for (int64_t j = 0; j < c; ++j) (*probs)[r * c + j] = std::exp(l[j] - mx) / denom;
    loss_val -= std::log(std::max((*probs)[r * c + y], 1e-300));
  }
  loss_val /= static_cast<double>(mask.size());

  auto out = make_out({1}, any_grad(logits));
  out->v[0] = loss_val;
  if (out->requires_grad) {
    auto rows = std::make_shared<std::vector<NodeId>>(mask);
    auto lbl = std::make_shared<std::vector<int32_t>>(labels);
    t.record([logits, out, probs, rows, lbl, c] {
      const double go = out->g[0] / static_cast<double>(rows->size());
      for (size_t r = 0; r < rows->size(); ++r) {
        const int64_t row = (*rows)[r];
        const int32_t y = (*lbl)[row];
        for (int64_t j = 0; j < c; ++j) {
          logits->g[row * c + j] += go * ((*probs)[r * c + j] - (j == y ? 1.0 : 0.0));
        }
      }
    });
  }
  return out;
}

TensorPtr l2_penalty(Tape& t, const std::vector<TensorPtr>& params) {
  double acc = 0.0;
  bool grad = false;
  for (const auto& p : params) {
    grad = grad || p->requires_grad;
    for (double w : p->v) acc += w * w;
  }
  auto out = make_out({1}, grad);
  out->v[0] = 0.5 * acc;
  if (grad) {
    auto ps = std::make_shared<std::vector<TensorPtr>>(params);
    t.record([ps, out] {
      const double go = out->g[0];
      for (const auto& p : *ps) {
        if (!p->requires_grad) continue;
        for (int64_t i = 0; i < p->size(); ++i) p->g[i] += go * p->v[i];
      }
    });
  }
  return out;
}

}  // namespace sg
