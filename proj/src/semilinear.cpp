#include "opcontour/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opcontour {

Vector TimePoly::eval(double t) const {
  if (powers.empty()) return Vector();
  Vector acc = Vector::Zero(powers[0].size());
  double tk = 1.0;
  for (const auto& coeff : powers) {
    acc += tk * coeff;
    tk *= t;
  }
  return acc;
}

PolynomialNonlinearity make_nonlinearity(TimeGrid grid, std::vector<TimePoly> coeffs) {
  if (coeffs.empty()) throw DimensionMismatch("nonlinearity needs at least the forcing term");
  PolynomialNonlinearity F;
  F.degree = static_cast<int>(coeffs.size()) - 1;
  for (const auto& poly : coeffs) {
    const int d = poly.dim();
    F.c.push_back(GridFunction::sample(grid, std::max(d, 1),
                                       [&](double t) { return poly.eval(t); }));
  }
  F.analytic = std::move(coeffs);
  return F;
}

Vector PolynomialNonlinearity::coefficient_at(int k, double t) const {
  if (has_analytic()) return analytic[k].eval(t);
  // Cubic Lagrange interpolation of the grid samples.
  const GridFunction& g = c[k];
  const TimeGrid& grid = g.grid();
  const double h = grid.h();
  int base = static_cast<int>(std::floor(t / h)) - 1;
  base = std::clamp(base, 0, grid.N() - 3);
  Vector acc = Vector::Zero(g.dim());
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      w *= (t - grid.node(base + b)) / (grid.node(base + a) - grid.node(base + b));
    }
    acc += w * g.at(base + a);
  }
  return acc;
}

PolynomialNonlinearity PolynomialNonlinearity::resampled(TimeGrid grid) const {
  if (!has_analytic())
    throw GridMismatch("resampling requires closed-form coefficients");
  return make_nonlinearity(grid, analytic);
}

namespace {

// x^k componentwise; the coordinatewise product is the Banach-algebra model.
Vector cw_power(const Vector& x, int k) {
  Vector acc = Vector::Ones(x.size());
  for (int i = 0; i < k; ++i) acc = acc.cwiseProduct(x);
  return acc;
}

Vector apply_coefficient(const Vector& coeff, const Vector& xk) {
  if (coeff.size() == 1) return coeff[0] * xk;  // scalar coefficient broadcasts
  if (coeff.size() != xk.size()) throw DimensionMismatch("coefficient dimension mismatch");
  return coeff.cwiseProduct(xk);
}

}  // namespace

GridFunction evaluate_F(const PolynomialNonlinearity& F, const GridFunction& u) {
  const TimeGrid& grid = u.grid();
  if (!(F.c[0].grid() == grid)) throw GridMismatch("nonlinearity sampled on a different grid");
  GridFunction out(grid, u.dim());
  for (int j = 0; j <= grid.N(); ++j) {
    Vector acc = apply_coefficient(F.c[0].at(j), Vector::Ones(u.dim()));
    for (int k = 1; k <= F.degree; ++k)
      acc += apply_coefficient(F.c[k].at(j), cw_power(u.at(j), k));
    out.set(j, acc);
  }
  return out;
}

std::pair<SolutionBundle, IterationTrace> fixed_point_solve(
    const ModelOperator& A, const PolynomialNonlinearity& F,
    const FixedPointConfig& config, const ContourSpec& contour, double p) {
  const TimeGrid grid = F.c[0].grid();
  const int dim = A.dim();

  auto wave = [&](const GridFunction& forcing) {
    CauchyProblem problem{A, +1, forcing, ProblemKind::wave, contour};
    return solve_wave(problem, p);
  };

  GridFunction c0(grid, dim);
  for (int j = 0; j <= grid.N(); ++j)
    c0.set(j, apply_coefficient(F.c[0].at(j), Vector::Ones(dim)));

  IterationTrace trace;
  SolutionBundle bundle = wave(c0);
  GridFunction u = bundle.u;
  const GridFunction seed = u;

  int expanding = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    ++trace.iterations;
    SolutionBundle next = wave(evaluate_F(F, u));
    const double update = (next.u - u).sup_norm();
    trace.update_norms.push_back(update);
    if (trace.update_norms.size() >= 2) {
      const double prevn = trace.update_norms[trace.update_norms.size() - 2];
      const double ratio = prevn > 0.0 ? update / prevn : 0.0;
      trace.contraction_ratios.push_back(ratio);
      expanding = ratio > 1.5 ? expanding + 1 : 0;
    }
    u = next.u;
    bundle = next;
    if ((u - seed).sup_norm() > config.ball_radius) {
      trace.status = IterationStatus::ball_exit;
      return {bundle, trace};
    }
    if (update <= config.tolerance * std::max(1.0, u.sup_norm())) {
      trace.converged = true;
      trace.status = IterationStatus::converged;
      break;
    }
    if (expanding >= config.window) {
      trace.status = IterationStatus::diverged;
      return {bundle, trace};
    }
  }
  if (!trace.converged) {
    trace.status = IterationStatus::max_iterations;
    return {bundle, trace};
  }

  // Residual against the converged nonlinear forcing, recomputed from u.
  const GridFunction fu = evaluate_F(F, u);
  const Matrix A2 = A.matrix() * A.matrix();
  GridFunction residual(grid, u.dim());
  residual.values() = finite_diff_derivative(u, 2).values() +
                      u.values() * A2.transpose() - fu.values();
  const double fn = std::max(lp_norm(fu, p), 1e-14);
  bundle.residual_norm = lp_norm(residual, p) / fn;
  bundle.residual_ok = bundle.residual_norm <= 1e-3;
  return {bundle, trace};
}

GridFunction ode_oracle(const ModelOperator& A, const PolynomialNonlinearity& F,
                        const TimeGrid& grid, int substeps) {
  if (substeps < 4) throw Error("oracle needs at least 4 substeps per interval");
  const int dim = A.dim();
  const Matrix A2 = A.matrix() * A.matrix();

  auto force = [&](const Vector& v, double t) {
    Vector acc = apply_coefficient(F.coefficient_at(0, t), Vector::Ones(dim));
    for (int k = 1; k <= F.degree; ++k)
      acc += apply_coefficient(F.coefficient_at(k, t), cw_power(v, k));
    return acc;
  };
  auto rhs = [&](const Vector& v, const Vector& w, double t) {
    return std::pair<Vector, Vector>{w, Vector(-(A2 * v) + force(v, t))};
  };

  GridFunction out(grid, dim);
  Vector v = Vector::Zero(dim), w = Vector::Zero(dim);
  const double dt = grid.h() / substeps;
  for (int j = 0; j < grid.N(); ++j) {
    for (int m = 0; m < substeps; ++m) {
      const double t = grid.node(j) + m * dt;
      auto [k1v, k1w] = rhs(v, w, t);
      auto [k2v, k2w] = rhs(v + 0.5 * dt * k1v, w + 0.5 * dt * k1w, t + 0.5 * dt);
      auto [k3v, k3w] = rhs(v + 0.5 * dt * k2v, w + 0.5 * dt * k2w, t + 0.5 * dt);
      auto [k4v, k4w] = rhs(v + dt * k3v, w + dt * k3w, t + dt);
      v += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      w += (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      if (v.norm() > 1e12 || w.norm() > 1e12)
        throw OverflowDetected("state norm exceeded 1e12 (blow-up)");
    }
    out.set(j + 1, v);
  }
  return out;
}

SweepResult stability_constant_sweep(const ModelOperator& A,
                                     const PolynomialNonlinearity& F,
                                     const std::vector<double>& horizons,
                                     const FixedPointConfig& config, double p) {
  SweepResult result;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double T : horizons) {
    SweepEntry entry;
    entry.T = T;
    try {
      const TimeGrid grid(T, F.c[0].grid().N());
      const PolynomialNonlinearity FT = F.resampled(grid);
      auto [bundle, trace] = fixed_point_solve(A, FT, config, auto_contour(A), p);
      if (trace.status == IterationStatus::converged) {
        const GridFunction fu = evaluate_F(FT, bundle.u);
        const double denom = e_norm(A, +1, fu, ENormLevel::E0, p).total;
        if (denom == 0.0) {
          entry.skipped = true;
        } else {
          entry.C_hat = e_norm(A, +1, bundle.u, ENormLevel::E2_partial, p).total / denom;
          entry.ok = true;
          lo = std::min(lo, entry.C_hat);
          hi = std::max(hi, entry.C_hat);
        }
      }
    } catch (const Error&) {
      // recorded as a failed entry
    }
    result.entries.push_back(entry);
  }
  result.pass = std::isfinite(lo) && lo > 0.0 && hi / lo <= 10.0;
  return result;
}

}  // namespace opcontour
