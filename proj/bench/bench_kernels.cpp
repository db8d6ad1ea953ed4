// Timing comparison of the OpenMP kernels against their serial reference
// implementations, plus a max-difference column as a consistency check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>
#include <vector>

#include "smoothgnn/dataset.hpp"
#include "smoothgnn/info_gain.hpp"
#include "smoothgnn/parallel.hpp"
#include "smoothgnn/sbm.hpp"
#include "smoothgnn/smoothness.hpp"
#include "smoothgnn/tensor.hpp"
#include "smoothgnn/topo_features.hpp"
#include "smoothgnn/util.hpp"

namespace {

struct BenchRow {
  const char* kernel;
  double serial_ms;
  double parallel_ms;
  double max_diff;
};

void print_row(const BenchRow& r) {
  std::printf("%-22s %10.1f ms %10.1f ms %8.2fx   max|diff|=%g\n", r.kernel, r.serial_ms,
              r.parallel_ms, r.serial_ms / r.parallel_ms, r.max_diff);
}

template <typename F>
double time_ms(F&& fn, int reps) {
  fn();  // warmup: page faults and allocator growth stay out of the timing
  // let OpenMP workers from earlier regions park instead of spin-waiting
  // through a serial measurement
  std::this_thread::sleep_for(std::chrono::milliseconds(150));
  sg::WallTimer t;
  for (int i = 0; i < reps; ++i) fn();
  return t.seconds() * 1000.0 / reps;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", sg::max_threads());
  std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  sg::SbmConfig sbm;
  sbm.nodes = 6000;
  sbm.blocks = 6;
  sbm.p_intra = 0.01;
  sbm.p_inter = 0.002;
  sbm.feature_dim = 64;
  const sg::Dataset ds = sg::normalize_features(sg::generate_sbm(sbm));

  {
    double serial_val = 0.0, parallel_val = 0.0;
    const double ts = time_ms([&] { serial_val = sg::serial::feature_smoothness(ds); }, 5);
    const double tp = time_ms([&] { parallel_val = sg::feature_smoothness(ds); }, 5);
    print_row({"feature_smoothness", ts, tp, std::abs(serial_val - parallel_val)});
  }

  {
    sg::HistogramPair hs, hp;
    const double ts = time_ms(
        [&] { hs = sg::serial::build_histograms(ds, 64, sg::HistogramMode::MarginalAverage); }, 5);
    const double tp =
        time_ms([&] { hp = sg::build_histograms(ds, 64, sg::HistogramMode::MarginalAverage); }, 5);
    const double diff = std::max(max_abs_diff(hs.context_w, hp.context_w),
                                 max_abs_diff(hs.surround_w, hp.surround_w));
    print_row({"build_histograms", ts, tp, diff});
  }

  {
    sg::NoiseModel nm{1.0, {0.25, 0.25, 0.25, 0.25}};
    double vs = 0.0, vp = 0.0;
    const double ts = time_ms([&] { vs = sg::serial::monte_carlo_noise_check(nm, 2000000, 7); }, 3);
    const double tp = time_ms([&] { vp = sg::monte_carlo_noise_check(nm, 2000000, 7); }, 3);
    print_row({"monte_carlo_noise", ts, tp, std::abs(vs - vp)});
  }

  {
    // smaller graph: per-node eigendecompositions dominate
    sg::SbmConfig small = sbm;
    small.nodes = 600;
    const sg::Dataset tiny = sg::normalize_features(sg::generate_sbm(small));
    sg::TopoConfig cfg;
    cfg.subgraph_cap = 200;
    sg::TopoFeatureMatrix ms, mp;
    const double ts = time_ms([&] { ms = sg::serial::all_topo_features(tiny, cfg); }, 3);
    const double tp = time_ms([&] { mp = sg::all_topo_features(tiny, cfg); }, 3);
    print_row({"all_topo_features", ts, tp, max_abs_diff(ms.values, mp.values)});
  }

  {
    const int64_t m = 512, k = 512, n = 512;
    std::vector<double> a(m * k), b(k * n), cs(m * n), cp(m * n);
    sg::Rng rng(3);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    const double ts =
        time_ms([&] { sg::serial::gemm(false, false, m, n, k, a.data(), b.data(), cs.data(), false); }, 3);
    const double tp =
        time_ms([&] { sg::gemm(false, false, m, n, k, a.data(), b.data(), cp.data(), false); }, 3);
    print_row({"gemm 512x512x512", ts, tp, max_abs_diff(cs, cp)});
  }

  return 0;
}
