#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "opcontour/cauchy.hpp"

namespace opcontour {

/// Vector-valued polynomial in t: sum_k powers[k] * t^k.
struct TimePoly {
  std::vector<Vector> powers;
  Vector eval(double t) const;
  int dim() const { return powers.empty() ? 0 : static_cast<int>(powers[0].size()); }
};

/// F(x, t) = c_0(t) + sum_{k=1..d} c_k(t) . x^k with componentwise powers
/// (the coordinatewise product makes C^dim with the sup norm a Banach
/// algebra). Coefficients are grid-sampled; a closed-form polynomial-in-t
/// description may be attached for off-grid evaluation and horizon resampling.
struct PolynomialNonlinearity {
  int degree = 0;
  std::vector<GridFunction> c;          // c[0..degree], each dim 1 (scalar) or dim
  std::vector<TimePoly> analytic;       // optional, parallel to c

  bool has_analytic() const { return !analytic.empty(); }
  /// Coefficient k at arbitrary t: closed form when available, else cubic
  /// interpolation of the grid samples.
  Vector coefficient_at(int k, double t) const;
  /// Resample onto another grid (requires the closed form).
  PolynomialNonlinearity resampled(TimeGrid grid) const;
};

PolynomialNonlinearity make_nonlinearity(TimeGrid grid, std::vector<TimePoly> coeffs);

GridFunction evaluate_F(const PolynomialNonlinearity& F, const GridFunction& u);

struct FixedPointConfig {
  double tolerance = 1e-10;
  int max_iterations = 40;
  double ball_radius = 10.0;
  int window = 2;  // consecutive expanding ratios that flag divergence
};

enum class IterationStatus { converged, max_iterations, ball_exit, diverged };

struct IterationTrace {
  std::vector<double> update_norms;    // ||u_{k+1} - u_k||_sup
  std::vector<double> contraction_ratios;
  bool converged = false;
  int iterations = 0;
  IterationStatus status = IterationStatus::max_iterations;
};

/// Banach fixed-point iteration u_{k+1} = wave-solve of F(u_k, .), seeded
/// with the solution for the pure forcing c_0. The returned residual is
/// recomputed as ||u'' + A^2 u - F(u,.)|| / max(||F(u,.)||, eps).
std::pair<SolutionBundle, IterationTrace> fixed_point_solve(
    const ModelOperator& A, const PolynomialNonlinearity& F,
    const FixedPointConfig& config, const ContourSpec& contour, double p = 2.0);

/// Classical 4th-order explicit integration of v' = w, w' = -A^2 v + F(v, t),
/// v(0) = w(0) = 0; the independent ground truth for the fixed point.
GridFunction ode_oracle(const ModelOperator& A, const PolynomialNonlinearity& F,
                        const TimeGrid& grid, int substeps);

struct SweepEntry {
  double T = 0.0;
  double C_hat = 0.0;
  bool ok = false;       // solver converged and the ratio is well defined
  bool skipped = false;  // zero denominator
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  bool pass = false;  // max/min of the defined C_hat values <= 10
};

/// C_hat(T) = e_norm(u, E2 partial) / e_norm(F(u,.), E0) for each horizon.
SweepResult stability_constant_sweep(const ModelOperator& A,
                                     const PolynomialNonlinearity& F,
                                     const std::vector<double>& horizons,
                                     const FixedPointConfig& config,
                                     double p = 2.0);

}  // namespace opcontour
