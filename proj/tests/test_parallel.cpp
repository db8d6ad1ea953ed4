#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "smoothgnn/info_gain.hpp"
#include "smoothgnn/parallel.hpp"
#include "smoothgnn/rng.hpp"
#include "smoothgnn/sbm.hpp"
#include "smoothgnn/smoothness.hpp"
#include "smoothgnn/tensor.hpp"
#include "smoothgnn/topo_features.hpp"

using namespace sg;

// The OpenMP kernels must reproduce their serial reference bit for bit:
// work is partitioned so every output element is written by exactly one
// thread with a fixed accumulation order.

namespace {

Dataset medium_sbm() {
  SbmConfig cfg;
  cfg.nodes = 400;
  cfg.blocks = 4;
  cfg.p_intra = 0.05;
  cfg.p_inter = 0.01;
  cfg.feature_dim = 24;
  cfg.seed = 12;
  return normalize_features(generate_sbm(cfg));
}

}  // namespace

TEST_CASE("feature smoothness kernel matches its serial reference") {
  Dataset ds = medium_sbm();
  CHECK(feature_smoothness(ds) == serial::feature_smoothness(ds));
}

TEST_CASE("histogram kernel matches its serial reference") {
  Dataset ds = medium_sbm();
  HistogramPair a = build_histograms(ds, 32, HistogramMode::MarginalAverage);
  HistogramPair b = serial::build_histograms(ds, 32, HistogramMode::MarginalAverage);
  CHECK(a.context_w == b.context_w);
  CHECK(a.surround_w == b.surround_w);
}

TEST_CASE("monte carlo kernel matches its serial reference") {
  NoiseModel nm{1.25, {0.4, 0.3, 0.2, 0.1}};
  CHECK(monte_carlo_noise_check(nm, 500000, 31) ==
        serial::monte_carlo_noise_check(nm, 500000, 31));
}

TEST_CASE("topology feature kernel matches its serial reference") {
  SbmConfig cfg;
  cfg.nodes = 80;
  cfg.blocks = 4;
  cfg.p_intra = 0.1;
  cfg.p_inter = 0.02;
  cfg.feature_dim = 4;
  Dataset ds = normalize_features(generate_sbm(cfg));
  TopoConfig tcfg;
  tcfg.sample_points = 8;
  TopoFeatureMatrix a = all_topo_features(ds, tcfg);
  TopoFeatureMatrix b = serial::all_topo_features(ds, tcfg);
  CHECK(a.values == b.values);
}

TEST_CASE("gemm matches its serial reference for all transpose variants") {
  Rng rng(8);
  const int64_t m = 37, k = 23, n = 41;
  std::vector<double> a(m * k), b(k * n), at(k * m), bt(n * k);
  for (auto& x : a) x = rng.uniform(-1, 1);
  for (auto& x : b) x = rng.uniform(-1, 1);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
  }
  for (int64_t p = 0; p < k; ++p) {
    for (int64_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  }
  std::vector<double> ref(m * n), out(m * n);
  serial::gemm(false, false, m, n, k, a.data(), b.data(), ref.data(), false);

  gemm(false, false, m, n, k, a.data(), b.data(), out.data(), false);
  CHECK(out == ref);
  gemm(true, false, m, n, k, at.data(), b.data(), out.data(), false);
  CHECK(out == ref);
  gemm(false, true, m, n, k, a.data(), bt.data(), out.data(), false);
  CHECK(out == ref);
  gemm(true, true, m, n, k, at.data(), bt.data(), out.data(), false);
  CHECK(out == ref);
}

TEST_CASE("thread count is reported") { CHECK(max_threads() >= 1); }
