#include "smoothgnn/info_gain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

namespace {

inline int bin_of(double x, int bins) {
  // features live in [0,1]; 1.0 belongs to the last bin
  int b = static_cast<int>(x * bins);
  return std::clamp(b, 0, bins - 1);
}

void check_features_unit(const Dataset& ds) {
  for (double x : ds.features) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw ValidationError("build_histograms: features must be normalized to [0,1]");
    }
  }
}

std::vector<int> joint_dims(const Dataset& ds, const std::vector<int>& dims) {
  std::vector<int> use = dims;
  if (use.empty()) {
    for (int j = 0; j < std::min<int64_t>(ds.feature_dim, 3); ++j) use.push_back(j);
  }
  if (use.size() > 3) {
    throw ValidationError("joint histogram mode needs an explicit dimension subset of size <= 3");
  }
  for (int j : use) {
    if (j < 0 || j >= ds.feature_dim) throw ValidationError("histogram dimension out of range");
  }
  return use;
}

// Accumulates one dimension's context/surrounding histograms.
void accumulate_marginal(const Dataset& ds, int dim, int bins, double* ctx, double* sur) {
  const int64_t d = ds.feature_dim;
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    const double w = static_cast<double>(ds.degree(v));
    if (w == 0.0) continue;
    const double xv = ds.features[static_cast<int64_t>(v) * d + dim];
    ctx[bin_of(xv, bins)] += w;
    double mean = 0.0;
    for (NodeId u : ds.neighbors(v)) mean += ds.features[static_cast<int64_t>(u) * d + dim];
    mean /= w;
    sur[bin_of(mean, bins)] += w;
  }
}

void accumulate_joint(const Dataset& ds, const std::vector<int>& dims, int bins, double* ctx,
                      double* sur) {
  const int64_t d = ds.feature_dim;
  std::vector<double> mean(dims.size());
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    const double w = static_cast<double>(ds.degree(v));
    if (w == 0.0) continue;
    int64_t cbin = 0;
    for (int j : dims) cbin = cbin * bins + bin_of(ds.features[static_cast<int64_t>(v) * d + j], bins);
    ctx[cbin] += w;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (NodeId u : ds.neighbors(v)) {
      for (size_t k = 0; k < dims.size(); ++k) {
        mean[k] += ds.features[static_cast<int64_t>(u) * d + dims[k]];
      }
    }
    int64_t sbin = 0;
    for (size_t k = 0; k < dims.size(); ++k) sbin = sbin * bins + bin_of(mean[k] / w, bins);
    sur[sbin] += w;
  }
}

HistogramPair prepare(const Dataset& ds, int bins, HistogramMode mode,
                      const std::vector<int>& dims) {
  if (bins < 1) throw ValidationError("build_histograms: bins must be >= 1");
  if (ds.num_edges == 0) throw ValidationError("build_histograms: graph has no edges");
  check_features_unit(ds);
  HistogramPair h;
  h.bins = bins;
  h.mode = mode;
  h.total_weight = 2.0 * static_cast<double>(ds.num_edges);
  if (mode == HistogramMode::MarginalAverage) {
    h.num_blocks = ds.feature_dim;
    h.block_size = bins;
  } else {
    h.dims = joint_dims(ds, dims);
    h.num_blocks = 1;
    h.block_size = 1;
    for (size_t k = 0; k < h.dims.size(); ++k) h.block_size *= bins;
  }
  h.context_w.assign(h.num_blocks * h.block_size, 0.0);
  h.surround_w.assign(h.num_blocks * h.block_size, 0.0);
  return h;
}

}  // namespace

HistogramPair serial::build_histograms(const Dataset& ds, int bins, HistogramMode mode,
                                       const std::vector<int>& dims) {
  HistogramPair h = prepare(ds, bins, mode, dims);
  if (mode == HistogramMode::MarginalAverage) {
    for (int64_t j = 0; j < h.num_blocks; ++j) {
      accumulate_marginal(ds, static_cast<int>(j), bins, h.context_w.data() + j * h.block_size,
                          h.surround_w.data() + j * h.block_size);
    }
  } else {
    accumulate_joint(ds, h.dims, bins, h.context_w.data(), h.surround_w.data());
  }
  return h;
}

HistogramPair build_histograms(const Dataset& ds, int bins, HistogramMode mode,
                               const std::vector<int>& dims) {
  HistogramPair h = prepare(ds, bins, mode, dims);
  if (mode == HistogramMode::MarginalAverage) {
    // one dimension per task; every block is written by exactly one thread
#pragma omp parallel for schedule(dynamic)
    for (int64_t j = 0; j < h.num_blocks; ++j) {
      accumulate_marginal(ds, static_cast<int>(j), bins, h.context_w.data() + j * h.block_size,
                          h.surround_w.data() + j * h.block_size);
    }
  } else {
    accumulate_joint(ds, h.dims, bins, h.context_w.data(), h.surround_w.data());
  }
  return h;
}

double kl_divergence(const HistogramPair& h, double epsilon) {
  if (epsilon <= 0.0) throw ValidationError("kl_divergence: epsilon must be > 0");
  double total = 0.0;
  for (int64_t b = 0; b < h.num_blocks; ++b) {
    const double* cw = h.context_w.data() + b * h.block_size;
    const double* sw = h.surround_w.data() + b * h.block_size;
    const double denom = h.total_weight + epsilon * static_cast<double>(h.block_size);
    double kl = 0.0;
    for (int64_t i = 0; i < h.block_size; ++i) {
      const double ps = (sw[i] + epsilon) / denom;
      const double pc = (cw[i] + epsilon) / denom;
      if (ps != pc) kl += ps * std::log2(ps / pc);
    }
    total += kl;
  }
  return total / static_cast<double>(h.num_blocks);
}

double chi_square_kl_approx(const HistogramPair& h, double epsilon) {
  const double edges = h.total_weight / 2.0;
  double total = 0.0;
  for (int64_t b = 0; b < h.num_blocks; ++b) {
    const double* cw = h.context_w.data() + b * h.block_size;
    const double* sw = h.surround_w.data() + b * h.block_size;
    double chi2 = 0.0;
    for (int64_t i = 0; i < h.block_size; ++i) {
      const double delta = cw[i] - sw[i];
      if (delta != 0.0) chi2 += delta * delta / (sw[i] + epsilon);
    }
    total += std::log(2.0) / (4.0 * edges) * chi2;
  }
  return total / static_cast<double>(h.num_blocks);
}

double aggregated_noise_power(const NoiseModel& nm) {
  if (nm.sigma2 < 0.0) throw ValidationError("noise variance must be >= 0");
  double sumsq = 0.0;
  for (double a : nm.coefficients) {
    if (!std::isfinite(a)) throw ValidationError("noise coefficients must be finite");
    sumsq += a * a;
  }
  return nm.sigma2 * sumsq;
}

namespace {

constexpr int kNoiseChunks = 256;

// One chunk of the Monte-Carlo estimate; returns (sum, sum of squares).
std::pair<double, double> noise_chunk(const NoiseModel& nm, int64_t count, uint64_t seed) {
  Rng rng(seed);
  const double sigma = std::sqrt(nm.sigma2);
  double sum = 0.0, sumsq = 0.0;
  for (int64_t s = 0; s < count; ++s) {
    double y = 0.0;
    for (double a : nm.coefficients) y += a * rng.normal(0.0, sigma);
    sum += y;
    sumsq += y * y;
  }
  return {sum, sumsq};
}

double combine_chunks(const std::vector<std::pair<double, double>>& parts, int64_t samples) {
  double sum = 0.0, sumsq = 0.0;
  for (const auto& [s, sq] : parts) {
    sum += s;
    sumsq += sq;
  }
  const double n = static_cast<double>(samples);
  return (sumsq - sum * sum / n) / (n - 1.0);
}

int64_t chunk_count(int64_t samples, int chunk) {
  const int64_t base = samples / kNoiseChunks;
  const int64_t extra = samples % kNoiseChunks;
  return base + (chunk < extra ? 1 : 0);
}

}  // namespace

double serial::monte_carlo_noise_check(const NoiseModel& nm, int64_t samples, uint64_t seed) {
  if (samples < 100000) throw ValidationError("monte_carlo_noise_check: samples must be >= 1e5");
  std::vector<std::pair<double, double>> parts(kNoiseChunks);
  for (int c = 0; c < kNoiseChunks; ++c) {
    parts[c] = noise_chunk(nm, chunk_count(samples, c), seed + 0x51ed2701u + c);
  }
  return combine_chunks(parts, samples);
}

double monte_carlo_noise_check(const NoiseModel& nm, int64_t samples, uint64_t seed) {
  if (samples < 100000) throw ValidationError("monte_carlo_noise_check: samples must be >= 1e5");
  std::vector<std::pair<double, double>> parts(kNoiseChunks);
  // fixed chunk seeds, fixed-order combine: result does not depend on the
  // number of threads
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < kNoiseChunks; ++c) {
    parts[c] = noise_chunk(nm, chunk_count(samples, c), seed + 0x51ed2701u + c);
  }
  return combine_chunks(parts, samples);
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("spearman_correlation: need two equal-length series");
  }
  auto ranks = [](const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return x[i] < x[j]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace sg
