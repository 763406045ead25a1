#include "biopro/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace biopro {
namespace {

double safe_eval(const std::function<double(const Eigen::VectorXd&)>& f,
                 const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const Eigen::VectorXd& steps,
                             const NelderMeadOptions& options) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const auto n = start.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> values(simplex.size());
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += steps(i);
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = safe_eval(f, simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  NelderMeadResult result;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second_worst = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).lpNorm<Eigen::Infinity>());
    const double spread = values[worst] - values[best];
    if (std::isfinite(spread) &&
        spread <= options.f_tolerance * (std::abs(values[best]) + options.f_tolerance) &&
        diameter <= options.x_tolerance * (1.0 + simplex[best].lpNorm<Eigen::Infinity>())) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + kReflect * (centroid - simplex[worst]);
    const double f_reflected = safe_eval(f, reflected);

    if (f_reflected < values[best]) {
      const Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      const double f_expanded = safe_eval(f, expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }

    const bool outside = f_reflected < values[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                : Eigen::VectorXd(centroid + kContract * (simplex[worst] - centroid));
    const double f_contracted = safe_eval(f, contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }

    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + kShrink * (simplex[i] - simplex[best]);
      values[i] = safe_eval(f, simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  result.argmin = simplex[best];
  result.value = values[best];
  result.iterations = it;
  return result;
}

}  // namespace biopro
