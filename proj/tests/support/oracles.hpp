#pragma once

// Reference implementations used only by the tests. None of them call the
// library routine they check.

#include "biopro/calibration.hpp"
#include "biopro/embedding.hpp"
#include "biopro/selection.hpp"
#include "biopro/skew_normal.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace biopro::oracle {

/// Gaussian matrix from std::mt19937_64, independent of the library RNG.
Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
SymmetricEigen jacobi_eigen(const Matrix& a);

/// Central differences of f at every entry of p.
Matrix central_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& p,
                                   double step);

struct DescentResult {
  Matrix p;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Fixed-step gradient descent on ‖P − P_⊥‖² + λ‖P·Z_src − Z_tgt‖² from P_⊥,
/// with its own gradient formula. The step is capped at 1/L for stability.
DescentResult gradient_descent_calibration(const CalibrationProblem& problem, double step,
                                           int max_iterations, double gradient_tolerance);

/// (2/ω)φ(z)Φ(αz) with Φ from std::erfc.
double skew_normal_pdf(const SkewNormalParams& p, double x);

/// Adaptive Simpson of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Maximiser of ∫₀^δ (a·p_n − b·p_e) on [0, hi] by a dense grid of
/// cumulative Simpson integrals, refined by golden section in the best cell.
double threshold_by_grid(const SkewNormalParams& neutral, const SkewNormalParams& explicit_,
                         double lambda_c, LambdaSide side, std::size_t cells = 20000);

/// Same bracket rule as the solver: [0, max mode + 10·max ω], with modes
/// found on a dense grid of the oracle pdf.
double threshold_bracket(const SkewNormalParams& neutral, const SkewNormalParams& explicit_);

/// |(Uᵀ·H)(dim, j)| by explicit loops.
std::vector<double> scores_by_multiply(const Matrix& u, const Matrix& h, std::size_t dim);

Vector centroid(const Matrix& z);
double mean_distance_to(const Matrix& z, const Vector& point);
double mean_probe(const Matrix& z, const Vector& direction);

}  // namespace biopro::oracle
