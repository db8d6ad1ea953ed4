#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/info_gain.hpp"
#include "smoothgnn/rng.hpp"
#include "smoothgnn/smoothness.hpp"
#include "testutil.hpp"

using namespace sg;

namespace {

HistogramPair pair_of(std::vector<double> context, std::vector<double> surround) {
  HistogramPair h;
  h.bins = static_cast<int>(context.size());
  h.mode = HistogramMode::MarginalAverage;
  h.num_blocks = 1;
  h.block_size = static_cast<int64_t>(context.size());
  h.total_weight = 0.0;
  for (double w : context) h.total_weight += w;
  h.context_w = std::move(context);
  h.surround_w = std::move(surround);
  return h;
}

}  // namespace

TEST_CASE("context weight always sums to 2|E|") {
  Dataset ds = normalize_features(sgtest::ring(14, 3));
  HistogramPair h = build_histograms(ds, 8, HistogramMode::MarginalAverage);
  for (int64_t b = 0; b < h.num_blocks; ++b) {
    double cw = 0.0, sw = 0.0;
    for (int64_t i = 0; i < h.block_size; ++i) {
      cw += h.context_w[b * h.block_size + i];
      sw += h.surround_w[b * h.block_size + i];
    }
    CHECK(cw == doctest::Approx(2.0 * ds.num_edges).epsilon(1e-9));
    CHECK(sw == doctest::Approx(2.0 * ds.num_edges).epsilon(1e-9));
  }
}

TEST_CASE("single edge with extreme features places swapped weights") {
  Dataset ds = make_dataset(2, {{0, 1}}, 1, {0.1, 0.9}, {0, 0});
  HistogramPair h = build_histograms(ds, 2, HistogramMode::MarginalAverage);
  // context: node0 (0.1) in bin 0, node1 (0.9) in bin 1
  CHECK(h.context_w[0] == 1.0);
  CHECK(h.context_w[1] == 1.0);
  // surrounding: node0 sees 0.9 (bin 1), node1 sees 0.1 (bin 0)
  CHECK(h.surround_w[0] == 1.0);
  CHECK(h.surround_w[1] == 1.0);
}

TEST_CASE("value 1.0 lands in the last bin") {
  Dataset ds = make_dataset(2, {{0, 1}}, 1, {1.0, 1.0}, {0, 0});
  HistogramPair h = build_histograms(ds, 4, HistogramMode::MarginalAverage);
  CHECK(h.context_w[3] == 2.0);
  CHECK(h.surround_w[3] == 2.0);
}

TEST_CASE("identical features give identical histograms and zero divergence") {
  Dataset ds = sgtest::uniform_features(10, 3, 0.42);
  HistogramPair h = build_histograms(ds, 16, HistogramMode::MarginalAverage);
  CHECK(h.context_w == h.surround_w);
  CHECK(kl_divergence(h) == 0.0);
  CHECK(feature_smoothness(ds) == 0.0);
}

TEST_CASE("isolated nodes are skipped; an edgeless graph is an error") {
  Dataset ds = make_dataset(3, {{0, 1}}, 1, {0.2, 0.8, 0.5}, {0, 0, 0});
  HistogramPair h = build_histograms(ds, 2, HistogramMode::MarginalAverage);
  double total = 0.0;
  for (double w : h.context_w) total += w;
  CHECK(total == 2.0);  // node 2 contributes nothing

  Dataset empty = make_dataset(2, {}, 1, {0.1, 0.9}, {0, 0});
  CHECK_THROWS_AS(build_histograms(empty, 2, HistogramMode::MarginalAverage), ValidationError);
}

TEST_CASE("joint mode needs few dimensions") {
  Dataset ds = normalize_features(sgtest::ring(8, 5));
  CHECK_THROWS_AS(build_histograms(ds, 4, HistogramMode::JointLowDim, {0, 1, 2, 3}),
                  ValidationError);
  HistogramPair h = build_histograms(ds, 4, HistogramMode::JointLowDim, {0, 1});
  CHECK(h.block_size == 16);
}

TEST_CASE("joint mode on one dimension reduces to that marginal block") {
  Dataset ds = normalize_features(sgtest::ring(12, 3));
  HistogramPair joint = build_histograms(ds, 8, HistogramMode::JointLowDim, {1});
  HistogramPair marginal = build_histograms(ds, 8, HistogramMode::MarginalAverage);
  for (int64_t i = 0; i < 8; ++i) {
    CHECK(joint.context_w[i] == marginal.context_w[8 + i]);
    CHECK(joint.surround_w[i] == marginal.surround_w[8 + i]);
  }
  CHECK(kl_divergence(joint, 0.5) >= 0.0);
}

TEST_CASE("kl divergence matches the direct two-bin evaluation") {
  // normalized C = (0.5, 0.5), S = (0.75, 0.25); oracle evaluated directly
  const double oracle = 0.75 * std::log2(0.75 / 0.5) + 0.25 * std::log2(0.25 / 0.5);
  HistogramPair h = pair_of({50, 50}, {75, 25});
  CHECK(kl_divergence(h, 1e-9) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(oracle == doctest::Approx(0.1887).epsilon(1e-3));
}

TEST_CASE("kl divergence of identical histograms is zero and otherwise nonnegative") {
  HistogramPair same = pair_of({3, 7, 2}, {3, 7, 2});
  CHECK(kl_divergence(same) == 0.0);

  Rng rng(19);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> c(8), s(8);
    double cs = 0, ss = 0;
    for (int i = 0; i < 8; ++i) {
      c[i] = rng.uniform();
      s[i] = rng.uniform();
      cs += c[i];
      ss += s[i];
    }
    for (int i = 0; i < 8; ++i) {
      c[i] *= 80.0 / cs;  // equal totals
      s[i] *= 80.0 / ss;
    }
    CHECK(kl_divergence(pair_of(c, s), 0.5) >= 0.0);
  }
}

TEST_CASE("kl divergence requires positive smoothing") {
  CHECK_THROWS_AS(kl_divergence(pair_of({1, 1}, {1, 1}), 0.0), ValidationError);
}

TEST_CASE("chi-square approximation matches the hand evaluation") {
  // 2|E| = 8, C = (4,4), S = (6,2): (ln2/16) * (4/6 + 4/2)
  const double oracle = std::log(2.0) / 16.0 * (4.0 / 6.0 + 4.0 / 2.0);
  HistogramPair h = pair_of({4, 4}, {6, 2});
  CHECK(chi_square_kl_approx(h, 0.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(0.1155).epsilon(1e-3));
  CHECK(chi_square_kl_approx(pair_of({5, 5}, {5, 5})) == 0.0);
}

TEST_CASE("chi-square approximation tracks exact KL in the near-identical regime") {
  Rng rng(101);
  std::vector<double> approx, exact;
  for (int trial = 0; trial < 100; ++trial) {
    const int bins = 16;
    std::vector<double> s(bins), delta(bins);
    for (int i = 0; i < bins; ++i) s[i] = rng.uniform(50.0, 150.0);
    double delta_sum = 0.0;
    for (int i = 0; i < bins; ++i) {
      delta[i] = rng.uniform(-0.1, 0.1) * s[i];
      delta_sum += delta[i];
    }
    // rebalance to keep totals equal while staying within the regime
    for (int i = 0; i < bins; ++i) delta[i] -= delta_sum / bins;
    std::vector<double> c(bins);
    double ctot = 0, stot = 0;
    for (int i = 0; i < bins; ++i) {
      c[i] = s[i] + delta[i];
      REQUIRE(std::abs(delta[i]) / s[i] <= 0.2);
      ctot += c[i];
      stot += s[i];
    }
    REQUIRE(ctot == doctest::Approx(stot).epsilon(1e-9));
    HistogramPair h = pair_of(c, s);
    approx.push_back(chi_square_kl_approx(h, 0.0));
    exact.push_back(kl_divergence(h, 1e-9));
  }
  CHECK(spearman_correlation(approx, exact) > 0.95);
}

TEST_CASE("aggregated noise power") {
  CHECK(aggregated_noise_power({1.0, {0.25, 0.25, 0.25, 0.25}}) == doctest::Approx(0.25));
  CHECK(aggregated_noise_power({1.0, {1, 1, 1}}) == doctest::Approx(3.0));
  CHECK(aggregated_noise_power({1.0, {0.5, 0.3, 0.2}}) == doctest::Approx(0.38));
  CHECK(aggregated_noise_power({2.0, {1, 1, 1}}) == doctest::Approx(6.0));
}

TEST_CASE("softmax coefficients never amplify noise") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    std::vector<double> logits(n), a(n);
    double denom = 0.0;
    for (int i = 0; i < n; ++i) {
      logits[i] = rng.uniform(-3, 3);
      denom += std::exp(logits[i]);
    }
    for (int i = 0; i < n; ++i) a[i] = std::exp(logits[i]) / denom;
    const double power = aggregated_noise_power({1.0, a});
    CHECK(power <= 1.0 + 1e-12);
  }
  // equality only for a one-hot coefficient vector
  CHECK(aggregated_noise_power({1.0, {1.0}}) == doctest::Approx(1.0));
  CHECK(aggregated_noise_power({1.0, {0.9, 0.1}}) < 1.0);
}

TEST_CASE("monte carlo noise check agrees with the closed form") {
  SUBCASE("mean over four neighbors") {
    const double measured = monte_carlo_noise_check({1.0, {0.25, 0.25, 0.25, 0.25}}, 1000000, 5);
    CHECK(std::abs(measured - 0.25) / 0.25 < 0.05);
  }
  SUBCASE("sum over three neighbors with sigma2 = 2") {
    const double measured = monte_carlo_noise_check({2.0, {1, 1, 1}}, 1000000, 6);
    CHECK(std::abs(measured - 6.0) / 6.0 < 0.05);
  }
  SUBCASE("zero coefficients give exactly zero") {
    CHECK(monte_carlo_noise_check({1.0, {0.0, 0.0}}, 100000, 7) == 0.0);
  }
  SUBCASE("sample floor enforced") {
    CHECK_THROWS_AS(monte_carlo_noise_check({1.0, {1.0}}, 999, 1), ValidationError);
  }
}

TEST_CASE("serial and parallel estimators agree exactly") {
  Dataset ds = normalize_features(sgtest::ring(16, 4));
  HistogramPair a = build_histograms(ds, 8, HistogramMode::MarginalAverage);
  HistogramPair b = serial::build_histograms(ds, 8, HistogramMode::MarginalAverage);
  CHECK(a.context_w == b.context_w);
  CHECK(a.surround_w == b.surround_w);

  NoiseModel nm{1.5, {0.5, 0.25, 0.25}};
  CHECK(monte_carlo_noise_check(nm, 200000, 13) ==
        serial::monte_carlo_noise_check(nm, 200000, 13));
}

TEST_CASE("spearman correlation basics") {
  CHECK(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_correlation({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
  CHECK(spearman_correlation({1, 2, 3, 4}, {1, 1, 1, 1}) == doctest::Approx(0.0));
}
