#include "smoothgnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smoothgnn/errors.hpp"

namespace sg {

SymEig jacobi_eigh(std::vector<double> a, int64_t n) {
  if (n <= 0 || static_cast<int64_t>(a.size()) != n * n) {
    throw ValidationError("jacobi_eigh: bad matrix size");
  }
  std::vector<double> v(n * n, 0.0);
  for (int64_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int64_t p = 0; p < n; ++p) {
      for (int64_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
    }
    return s;
  };

  const int max_sweeps = 64;
  const double eps = 1e-14;
  double scale = 0.0;
  for (int64_t i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
  const double tol = eps * eps * std::max(1.0, scale * scale) * static_cast<double>(n * n);

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (int64_t p = 0; p < n - 1; ++p) {
      for (int64_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        // smaller root keeps the rotation angle below pi/4
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int64_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int64_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int64_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int64_t i, int64_t j) { return a[i * n + i] < a[j * n + j]; });

  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (int64_t k = 0; k < n; ++k) {
    out.values[k] = a[order[k] * n + order[k]];
    for (int64_t i = 0; i < n; ++i) out.vectors[i * n + k] = v[i * n + order[k]];
  }
  return out;
}

}  // namespace sg
