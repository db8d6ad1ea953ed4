#pragma once

// Information gain from the surrounding: weighted-histogram KL divergence
// between the neighbor-mean distribution S and the node-feature
// distribution C, its Chi-square approximation, and the aggregated noise
// power of weighted-sum aggregators with a Monte-Carlo verifier.

#include <cstdint>
#include <vector>

#include "smoothgnn/dataset.hpp"

namespace sg {

enum class HistogramMode { JointLowDim, MarginalAverage };

// Weighted bin counts for the context PDF C and surrounding PDF S. Layout
// is num_blocks consecutive blocks of block_size bins: one block per
// feature dimension in marginal mode, a single bins^|dims| block in joint
// mode. Each block's weights sum to 2|E|.
struct HistogramPair {
  int bins = 32;  // bins per dimension (r)
  HistogramMode mode = HistogramMode::MarginalAverage;
  std::vector<int> dims;  // dimensions used (joint mode)
  int64_t num_blocks = 0;
  int64_t block_size = 0;
  std::vector<double> context_w;
  std::vector<double> surround_w;
  double total_weight = 0.0;  // 2|E|
};

// Context histogram accumulates x_v with weight |N(v)|; surrounding
// histogram accumulates the neighbor mean with the same weight. Features
// must lie in [0,1]; the value 1.0 falls in the last bin. Isolated nodes
// carry weight 0 and are skipped. Joint mode needs |dims| <= 3 (defaults
// to the first min(d,3) dimensions when dims is empty).
HistogramPair build_histograms(const Dataset& ds, int bins, HistogramMode mode,
                               const std::vector<int>& dims = {});

// sum_i p_S(i) log2(p_S(i)/p_C(i)) with add-epsilon smoothing
// p(i) = (w_i + eps) / (total + block_size*eps), averaged over blocks.
double kl_divergence(const HistogramPair& h, double epsilon = 0.5);

// (ln 2 / 4|E|) * sum_i Delta_i^2 / (|H_i|_S + eps), Delta_i = |H_i|_C - |H_i|_S,
// averaged over blocks.
double chi_square_kl_approx(const HistogramPair& h, double epsilon = 0.5);

struct NoiseModel {
  double sigma2 = 1.0;                // per-neighbor noise variance
  std::vector<double> coefficients;   // aggregation weights a_j
};

// sigma^2 * sum_j a_j^2
double aggregated_noise_power(const NoiseModel& nm);

// Draws `samples` iid realizations of sum_j a_j * n_j with n_j ~ N(0, sigma^2)
// and returns the sample variance. Deterministic per seed and independent
// of the thread count.
double monte_carlo_noise_check(const NoiseModel& nm, int64_t samples, uint64_t seed);

// Spearman rank correlation (average ranks on ties).
double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

namespace serial {
HistogramPair build_histograms(const Dataset& ds, int bins, HistogramMode mode,
                               const std::vector<int>& dims = {});
double monte_carlo_noise_check(const NoiseModel& nm, int64_t samples, uint64_t seed);
}  // namespace serial

}  // namespace sg
