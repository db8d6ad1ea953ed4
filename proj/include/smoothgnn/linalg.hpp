#pragma once

#include <cstdint>
#include <vector>

namespace sg {

// Eigendecomposition of a dense symmetric matrix: values ascending,
// vectors stored column-wise (vectors[i*n + k] = component i of the k-th
// eigenvector), so A = V * diag(values) * V^T.
struct SymEig {
  std::vector<double> values;
  std::vector<double> vectors;
};

// Cyclic Jacobi rotations; fine for the small matrices that arise from
// K-hop subgraphs. `a` is row-major n x n and must be symmetric.
SymEig jacobi_eigh(std::vector<double> a, int64_t n);

}  // namespace sg
