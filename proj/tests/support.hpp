#pragma once

#include "treevae/autodiff.hpp"
#include "treevae/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>

namespace treevae::test {

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;  // name(row,col)
  std::size_t checked = 0;
};

// Five-point central differences against backward() for every parameter of `store`.
// `loss` must build the same scalar on every call (reseed any rng inside).
// At most `per_param` entries of each parameter are probed, spread evenly.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck gradient_check(diff::ParameterStore& store, const std::function<diff::Var(diff::Graph&)>& loss,
                                std::size_t per_param = 0, double h = 1e-4, double floor = 1e-6) {
  diff::Graph g(&store);
  const diff::Var l = loss(g);
  g.backward(l);
  const diff::Gradients analytic = g.gradients();

  auto eval = [&] {
    diff::Graph f(&store, false);
    return loss(f).scalar();
  };

  GradCheck out;
  for (auto& [name, p] : store.entries()) {
    diff::Matrix& value = store.value(name);
    const diff::Matrix& grad = analytic.at(name);
    const auto n = static_cast<std::size_t>(value.size());
    const std::size_t stride = per_param == 0 || n <= per_param ? 1 : n / per_param;
    for (std::size_t k = 0; k < n; k += stride) {
      const auto i = static_cast<Eigen::Index>(k);
      double& x = value.data()[i];
      const double saved = x;
      auto at = [&](double dx) {
        x = saved + dx;
        return eval();
      };
      const double numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      x = saved;
      const double a = grad.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        std::ostringstream os;
        os << name << "(" << i % value.rows() << "," << i / value.rows() << ") analytic " << std::setprecision(6)
           << a << " numeric " << numeric;
        out.worst = os.str();
      }
    }
  }
  return out;
}

}  // namespace treevae::test
