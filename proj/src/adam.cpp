#include "smoothgnn/adam.hpp"

#include <cmath>

#include "smoothgnn/errors.hpp"

namespace sg {

void Adam::step(ParamStore& params) {
  const auto& items = params.items();
  if (m_.empty()) {
    m_.resize(items.size());
    v_.resize(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
      m_[i].assign(items[i].second->size(), 0.0);
      v_[i].assign(items[i].second->size(), 0.0);
    }
  }
  if (m_.size() != items.size()) throw ValidationError("Adam state does not match parameters");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < items.size(); ++i) {
    auto& [name, p] = items[i];
    for (int64_t j = 0; j < p->size(); ++j) {
      const double g = p->g[j];
      if (!std::isfinite(g)) {
        throw DivergenceError("non-finite gradient in parameter " + name);
      }
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p->v[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::reset() {
  t_ = 0;
  m_.clear();
  v_.clear();
}

}  // namespace sg
