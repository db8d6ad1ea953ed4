#include "smoothgnn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"

namespace sg {

double gradient_check(const std::function<TensorPtr(Tape&)>& loss_fn, ParamStore& params,
                      const GradCheckConfig& cfg) {
  // analytic pass
  params.zero_grad();
  Tape tape;
  TensorPtr loss = loss_fn(tape);
  if (loss->size() != 1) throw ValidationError("gradient_check: fragment must produce a scalar");
  tape.backward(loss);

  auto eval = [&]() {
    Tape t;
    return loss_fn(t)->v[0];
  };

  int64_t total_coords = 0;
  for (const auto& [name, p] : params.items()) total_coords += p->size();

  // coordinate selection
  std::vector<std::pair<size_t, int64_t>> coords;  // (param index, flat offset)
  if (total_coords > cfg.subsample_threshold) {
    Rng rng(cfg.seed);
    for (int s = 0; s < cfg.subsample; ++s) {
      int64_t flat = static_cast<int64_t>(rng.below(static_cast<uint64_t>(total_coords)));
      for (size_t i = 0; i < params.items().size(); ++i) {
        const int64_t sz = params.items()[i].second->size();
        if (flat < sz) {
          coords.emplace_back(i, flat);
          break;
        }
        flat -= sz;
      }
    }
  } else {
    for (size_t i = 0; i < params.items().size(); ++i) {
      for (int64_t j = 0; j < params.items()[i].second->size(); ++j) coords.emplace_back(i, j);
    }
  }

  double max_rel = 0.0;
  for (auto [pi, j] : coords) {
    auto& p = params.items()[pi].second;
    const double saved = p->v[j];
    p->v[j] = saved + cfg.step;
    const double up = eval();
    p->v[j] = saved - cfg.step;
    const double down = eval();
    p->v[j] = saved;
    const double numeric = (up - down) / (2.0 * cfg.step);
    const double analytic = p->g[j];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

}  // namespace sg
