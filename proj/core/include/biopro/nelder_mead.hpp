#pragma once

#include <Eigen/Core>

#include <functional>

namespace biopro {

struct NelderMeadOptions {
  int max_iterations = 5000;
  // Stop when the spread of simplex values falls below
  // f_tolerance·(|f_best| + f_tolerance) and the simplex diameter below x_tolerance.
  double f_tolerance = 1e-13;
  double x_tolerance = 1e-10;
};

struct NelderMeadResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimisation. `steps` sets the initial simplex
/// edge along each coordinate. The best vertex never gets worse, so the
/// returned value is ≤ f(start).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const Eigen::VectorXd& steps,
                             const NelderMeadOptions& options = {});

}  // namespace biopro
