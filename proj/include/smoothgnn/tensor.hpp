#pragma once

// Dense double-precision tensors (rank 0..2) with taped reverse-mode
// differentiation. Ops record backward closures on a Tape; backward walks
// them once in reverse. Forward results are bit-deterministic for a given
// seed and independent of the thread count.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "smoothgnn/dataset.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> v;  // values, row-major
  std::vector<double> g;  // gradient, same size as v iff requires_grad
  bool requires_grad = false;

  int64_t size() const {
    int64_t s = 1;
    for (int64_t d : shape) s *= d;
    return s;
  }
  int64_t rows() const { return shape.empty() ? 1 : shape[0]; }
  int64_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr tensor(std::vector<int64_t> shape, bool requires_grad = false);
TensorPtr tensor_of(std::vector<int64_t> shape, std::vector<double> values,
                    bool requires_grad = false);
TensorPtr scalar_tensor(double value);

// Edge-aligned segments: segment i spans seg_offsets[i]..seg_offsets[i+1]
// of the flat edge arrays and holds the edges whose target node is i.
struct SegmentIndex {
  int64_t num_segments = 0;
  std::vector<int64_t> seg_offsets;  // num_segments + 1
  std::vector<NodeId> src;           // source node per edge slot
  std::vector<NodeId> dst;           // owning segment per edge slot

  int64_t num_entries() const { return static_cast<int64_t>(src.size()); }
};

// Neighbor segments of a dataset; with_self_loops appends each node to its
// own segment (used by GCN/GAT style aggregation).
SegmentIndex build_segment_index(const Dataset& ds, bool with_self_loops);

class Tape {
 public:
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  // Seeds loss->g with 1 and runs the recorded steps in reverse. Throws on
  // a non-scalar loss or when called twice without reset().
  void backward(const TensorPtr& loss);

  void reset() {
    steps_.clear();
    consumed_ = false;
  }

  size_t num_steps() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
};

// ---- recorded operations -------------------------------------------------

TensorPtr matmul(Tape& t, const TensorPtr& a, const TensorPtr& b);   // [m,k]x[k,n]
TensorPtr matvec(Tape& t, const TensorPtr& a, const TensorPtr& x);   // [m,n]x[n] -> [m]
TensorPtr add(Tape& t, const TensorPtr& a, const TensorPtr& b);      // same shape
TensorPtr add_rowvec(Tape& t, const TensorPtr& a, const TensorPtr& b);  // [m,n]+[n]
TensorPtr sub(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& t, const TensorPtr& a, const TensorPtr& b);      // elementwise
TensorPtr div(Tape& t, const TensorPtr& a, const TensorPtr& b);      // elementwise
TensorPtr scale(Tape& t, const TensorPtr& a, double c);
TensorPtr row_sum(Tape& t, const TensorPtr& a);                      // [m,n] -> [m]
TensorPtr concat_cols(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr relu(Tape& t, const TensorPtr& a);
TensorPtr elu(Tape& t, const TensorPtr& a, double alpha = 1.0);
TensorPtr leaky_relu(Tape& t, const TensorPtr& a, double slope = 0.2);
TensorPtr exp_op(Tape& t, const TensorPtr& a);

// Inverted dropout: keeps with probability 1-p and rescales by 1/(1-p).
// p = 0 is the identity; p >= 1 is an error.
TensorPtr dropout(Tape& t, const TensorPtr& a, double p, Rng& rng);

TensorPtr row_gather(Tape& t, const TensorPtr& a, const std::vector<NodeId>& idx);

// Per-segment sum of edge-aligned rows: [E,d] (or [E]) -> [n,d] ([n]).
TensorPtr segment_sum(Tape& t, const TensorPtr& edge_vals, const SegmentIndex& seg);

// Softmax over each segment of an [E] logit array.
TensorPtr segment_softmax(Tape& t, const TensorPtr& logits, const SegmentIndex& seg);

// Elementwise max over each segment; empty segments yield zero rows.
TensorPtr segment_max(Tape& t, const TensorPtr& edge_vals, const SegmentIndex& seg);

// out[i] = sum_{e in seg(i)} coeffs[e] * values[src[e]]; [E] x [n,d] -> [n,d].
TensorPtr weighted_neighbor_sum(Tape& t, const TensorPtr& coeffs, const TensorPtr& values,
                                const SegmentIndex& seg);

// Mean cross-entropy of row-softmax(logits) against labels over the masked
// rows; returns a scalar.
TensorPtr softmax_cross_entropy(Tape& t, const TensorPtr& logits,
                                const std::vector<int32_t>& labels,
                                const std::vector<NodeId>& mask);

// 0.5 * sum of squared entries over all given tensors; returns a scalar.
TensorPtr l2_penalty(Tape& t, const std::vector<TensorPtr>& params);

// ---- raw kernels (shared by forward and backward) -------------------------

// C = alpha * op(A) * op(B) + (accumulate ? C : 0), row-major. Parallelized
// over rows of C; each element is reduced in a fixed order.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          const double* b, double* c, bool accumulate);

namespace serial {
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          const double* b, double* c, bool accumulate);
}  // namespace serial

}  // namespace sg
