#include "opcontour/cauchy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "opcontour/parallel.hpp"

namespace opcontour {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr int kBlocks = 64;  // fixed block count keeps reductions thread-count independent

double max_im_spectrum(const ModelOperator& A) {
  Eigen::ComplexEigenSolver<Matrix> s(A.matrix(), false);
  double m = 0.0;
  for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i)
    m = std::max(m, std::abs(s.eigenvalues()[i].imag()));
  return m;
}

using ResolventFactory = std::function<Matrix(Complex)>;

// Trapezoid sum of rop(lambda) (B+lambda)^{-1} g over the segment
// Im(lambda) in [y0, y1] of the line Re(lambda) = -c, with dlambda = i dy.
// Returns the fine sum and, through `coarse`, the same sum on every other
// node (for the quadrature-error proxy).
Matrix segment_sum(const ResolventFactory& rop, double c, const GridFunction& g,
                   double y0, double y1, double spacing, Matrix* coarse) {
  int n = std::max(2, static_cast<int>(std::ceil((y1 - y0) / spacing)));
  n += n % 2;  // even, so the half-resolution nodes are a sub-grid
  const double dy = (y1 - y0) / n;
  const int rows = g.nodes();
  const int dim = g.dim();

  std::vector<Matrix> fine(kBlocks, Matrix::Zero(rows, dim));
  std::vector<Matrix> half(kBlocks, Matrix::Zero(rows, dim));
  parallel_for(kBlocks, [&](std::size_t b) {
    for (int m = static_cast<int>(b); m <= n; m += kBlocks) {
      const double y = y0 + m * dy;
      const Complex lambda(-c, y);
      const double w = (m == 0 || m == n) ? 0.5 * dy : dy;
      const Matrix rm = rop(lambda).transpose();  // applied from the right
      const Matrix term = b_resolvent_apply(lambda, g).values() * rm;
      fine[b] += (kI * w) * term;
      if (m % 2 == 0) {
        const double w2 = (m == 0 || m == n) ? dy : 2.0 * dy;
        half[b] += (kI * w2) * term;
      }
    }
  });
  Matrix f = Matrix::Zero(rows, dim);
  Matrix h = Matrix::Zero(rows, dim);
  for (int b = 0; b < kBlocks; ++b) {
    f += fine[b];
    h += half[b];
  }
  if (coarse) *coarse = h;
  return f;
}

// Correction for the truncated tails |Im(lambda)| > R. The integrand behaves
// like r1 g / lambda^2 + (r2 g - r1 g') / lambda^3 there, and the full-line
// integrals of lambda^{-2}, lambda^{-3} vanish, so the tail equals minus the
// analytic integral over the kept segment.
Matrix tail_correction(const Matrix& r1, const Matrix& r2, const GridFunction& g,
                       const GridFunction& dg, double c, double R) {
  const Complex lp(-c, R), lm(-c, -R);
  const Complex K2 = -1.0 / lp + 1.0 / lm;
  const Complex K3 = -0.5 / (lp * lp) + 0.5 / (lm * lm);
  const Matrix a = g.values() * r1.transpose();
  const Matrix b = g.values() * r2.transpose() - dg.values() * r1.transpose();
  return -(K2 * a + K3 * b);
}

// pv-integral over the line Re(lambda) = -c of rop(lambda)(B+lambda)^{-1} g,
// scaled by `prefactor`. Symmetric truncation realizes the principal value;
// with auto tuning R grows in octaves until the result is stable to 1e-6.
GridFunction line_apply(const ResolventFactory& rop, const Matrix& r1, const Matrix& r2,
                        Complex prefactor, const GridFunction& g, const ContourSpec& spec,
                        double op_scale, double* quad_estimate) {
  const double T = g.grid().T();
  const double c = spec.c;
  const GridFunction dg = finite_diff_derivative(g, 1);

  // Beyond |Im(lambda)| ~ pi N / (4T) the discrete time resolvent no longer
  // tracks e^{-lambda h} accurately and extending the segment adds noise
  // instead of accuracy; the analytic tail already covers that range.
  const double R_cap = kPi * g.grid().N() / (4.0 * T);

  double spacing, R0;
  int octaves;
  if (spec.auto_tune) {
    spacing = std::min(kPi / (16.0 * T), std::max(c, 1e-3) / 4.0);
    R0 = std::min(50.0 * std::max({1.0, op_scale, c}), R_cap);
    octaves = 6;
  } else {
    R0 = spec.R;
    spacing = 2.0 * spec.R / std::max(spec.M, 2);
    octaves = 0;
  }

  Matrix coarse;
  Matrix acc = segment_sum(rop, c, g, -R0, R0, spacing, &coarse);
  Matrix coarse_total = coarse;
  double R = R0;
  Matrix result = acc + tail_correction(r1, r2, g, dg, c, R);
  for (int oct = 0; oct < octaves; ++oct) {
    if (2.0 * R > R_cap) break;
    acc += segment_sum(rop, c, g, R, 2.0 * R, spacing, &coarse);
    coarse_total += coarse;
    acc += segment_sum(rop, c, g, -2.0 * R, -R, spacing, &coarse);
    coarse_total += coarse;
    R *= 2.0;
    const Matrix next = acc + tail_correction(r1, r2, g, dg, c, R);
    const double change = (next - result).cwiseAbs().maxCoeff();
    result = next;
    if (change <= 1e-6 * std::max(result.cwiseAbs().maxCoeff(), 1e-300)) break;
  }
  if (quad_estimate)
    *quad_estimate = std::abs(prefactor) * (acc - coarse_total).cwiseAbs().maxCoeff();

  GridFunction out(g.grid(), Matrix(prefactor * result));
  out.values().row(0).setZero();  // every causal term vanishes at t = 0
  return out;
}

ModelOperator scaled_operator(const ModelOperator& A, Complex factor) {
  return ModelOperator::dense(Matrix(factor * A.matrix()));
}

double trace_tolerance(const GridFunction& f) {
  return 1e-8 * std::max(f.sup_norm(), 1.0);
}

}  // namespace

ContourSpec auto_contour(const ModelOperator& A) {
  return ContourSpec::automatic(1.5 * max_im_spectrum(A) + 0.5);
}

GridFunction j_operator_apply(const ModelOperator& A, int sign, const GridFunction& g,
                              const ContourSpec& contour, double* quad_estimate) {
  const Complex si = double(sign) * kI;
  const ModelOperator siA = scaled_operator(A, si);
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  // (sign iA - lambda)^{-1} ~ -1/lambda - sign iA/lambda^2
  auto rop = [&](Complex lambda) { return resolvent_matrix(siA, -lambda); };
  const Matrix r1 = -I;
  const Matrix r2 = Matrix(-si * A.matrix());
  const double scale = operator_norm_2(A.matrix());
  return line_apply(rop, r1, r2, 1.0 / (2.0 * kPi * kI), g, contour, scale, quad_estimate);
}

SolutionBundle solve_schrodinger(const CauchyProblem& problem, double p) {
  const ModelOperator& A = problem.A;
  const GridFunction& f = problem.f;
  const int sign = problem.sign;
  ContourSpec contour = problem.contour;
  if (contour.auto_tune && contour.c == 0.0) contour = auto_contour(A);

  SolutionBundle bundle{GridFunction::zero(f.grid(), f.dim())};
  bundle.trace_warning = f.values().row(0).norm() > trace_tolerance(f);

  // u = (1/2pi) int (-sign iA + lambda)^{-1} (B+lambda)^{-1} f dlambda,
  // equivalently J_sign applied to -i f.
  const Complex si = double(sign) * kI;
  const ModelOperator msiA = scaled_operator(A, -si);
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  auto rop = [&](Complex lambda) { return resolvent_matrix(msiA, lambda); };
  const Matrix r2 = Matrix(si * A.matrix());
  const double scale = operator_norm_2(A.matrix());
  bundle.u = line_apply(rop, I, r2, 1.0 / (2.0 * kPi), f, contour, scale,
                        &bundle.quadrature_estimate);

  const GridFunction du = finite_diff_derivative(bundle.u, 1);
  GridFunction residual(f.grid(), f.dim());
  residual.values() = kI * du.values() -
                      double(sign) * (bundle.u.values() * A.matrix().transpose()) - f.values();
  const double fn = lp_norm(f, p);
  bundle.residual_norm = fn > 0.0 ? lp_norm(residual, p) / fn : lp_norm(residual, p);
  bundle.trace_u0 = bundle.u.values().row(0).norm();
  bundle.residual_ok = bundle.residual_norm <= 1e-3;
  return bundle;
}

GridFunction l_operator_apply(const ModelOperator& A, const GridFunction& w,
                              const ContourSpec& contour, double* quad_estimate) {
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  const ModelOperator A2 = ModelOperator::dense(Matrix(A.matrix() * A.matrix()));
  const ModelOperator piA = scaled_operator(A, kI);
  const ModelOperator miA = scaled_operator(A, -kI);
  auto rop = [&](Complex lambda) {
    const Matrix direct = resolvent_matrix(A2, lambda * lambda);
    const Matrix split = (resolvent_matrix(piA, lambda) + resolvent_matrix(miA, lambda)) /
                         (2.0 * lambda);
    const double ref = std::max(operator_norm_2(direct), 1e-300);
    if (operator_norm_2(direct - split) > 1e-6 * ref)
      throw SplitIdentityViolation("direct and split resolvent evaluations disagree");
    return direct;
  };
  const Matrix r1 = Matrix::Zero(A.dim(), A.dim());
  const double scale = operator_norm_2(A.matrix());
  return line_apply(rop, r1, I, 1.0, w, contour, scale, quad_estimate);
}

SolutionBundle solve_wave(const CauchyProblem& problem, double p) {
  const ModelOperator& A = problem.A;
  const GridFunction& f = problem.f;
  ContourSpec contour = problem.contour;
  if (contour.auto_tune && contour.c == 0.0) contour = auto_contour(A);

  SolutionBundle bundle{GridFunction::zero(f.grid(), f.dim())};
  bundle.trace_warning = f.values().row(0).norm() > trace_tolerance(f);

  double quad = 0.0;
  GridFunction lw = l_operator_apply(A, f, contour, &quad);
  bundle.quadrature_estimate = quad / (2.0 * kPi);
  bundle.u = lw * (1.0 / (2.0 * kPi * kI));

  const Matrix A2 = A.matrix() * A.matrix();
  const GridFunction ddu = finite_diff_derivative(bundle.u, 2);
  GridFunction residual(f.grid(), f.dim());
  residual.values() = ddu.values() + bundle.u.values() * A2.transpose() - f.values();
  const double fn = lp_norm(f, p);
  bundle.residual_norm = fn > 0.0 ? lp_norm(residual, p) / fn : lp_norm(residual, p);
  bundle.trace_u0 = bundle.u.values().row(0).norm();
  bundle.trace_du0 = finite_diff_derivative(bundle.u, 1).values().row(0).norm();
  bundle.residual_ok = bundle.residual_norm <= 1e-3;
  return bundle;
}

GridFunction double_contour_wave_apply(const ModelOperator& A, const GridFunction& v,
                                       const ContourSpec& inner, const ContourSpec& outer,
                                       double* quad_estimate) {
  if (outer.c <= 2.0 * inner.c)
    throw ContourOrderViolation("outer line must satisfy r > 2c");
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  const double scale = operator_norm_2(A.matrix());

  // The lambda and z resolvent pairs commute, so the double integral is the
  // composition of two single-line passes.
  auto rop_inner = [&](Complex lambda) { return resolvent_matrix(A, -kI * lambda); };
  const Matrix r1_in = Matrix(kI * I);
  double q1 = 0.0;
  GridFunction q =
      line_apply(rop_inner, r1_in, A.matrix(), 1.0 / (2.0 * kPi * kI), v, inner, scale, &q1);

  auto rop_outer = [&](Complex z) { return resolvent_matrix(A, kI * z); };
  const Matrix r1_out = Matrix(-kI * I);
  double q2 = 0.0;
  GridFunction out =
      line_apply(rop_outer, r1_out, A.matrix(), 1.0 / (2.0 * kPi * kI), q, outer, scale, &q2);
  if (quad_estimate) *quad_estimate = q1 + q2;
  return out;
}

GridFunction fourier_line_apply(const ModelOperator& A, int sign, const GridFunction& g,
                                double gamma, int M) {
  const double strip_c = max_im_spectrum(A);
  if (!(gamma > strip_c))
    throw GammaTooSmall("gamma must exceed the strip constant of the operator");

  const TimeGrid& grid = g.grid();
  const double T = grid.T();
  const int N = grid.N();
  const double h = grid.h();
  const int dim = g.dim();
  const Complex si = double(sign) * kI;

  GridFunction avg(grid, dim);
  for (int branch = 0; branch <= 1; ++branch) {
    // D_0 g = -g', D_1 g = sign i A g; both yield J g by the line formula.
    GridFunction dg(grid, dim);
    if (branch == 0)
      dg.values() = -finite_diff_derivative(g, 1).values();
    else
      dg.values() = si * (g.values() * A.matrix().transpose());

    // Damped integrand on [0, T], blended C^2 to zero on [T, 2T] so its
    // transform decays fast enough for a truncated s-grid.
    Matrix w(2 * N + 1, dim);
    for (int j = 0; j <= N; ++j)
      w.row(j) = std::exp(-gamma * grid.node(j)) * dg.values().row(j);
    {
      GridFunction damped(grid, dim);
      damped.values() = w.topRows(N + 1);
      const Eigen::RowVectorXcd v0 = w.row(N);
      const Eigen::RowVectorXcd d1 = finite_diff_derivative(damped, 1).values().row(N);
      const Eigen::RowVectorXcd d2 = finite_diff_derivative(damped, 2).values().row(N);
      for (int j = N + 1; j <= 2 * N; ++j) {
        const double tau = double(j - N) / N;
        const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
        const double H0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        const double H1 = tau - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        const double H2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        w.row(j) = H0 * v0 + (H1 * T) * d1 + (H2 * T * T) * d2;
      }
    }

    const double ds = kPi / (8.0 * T);
    const double S = 50.0 * std::max({operator_norm_2(A.matrix()), gamma, 2.0 * kPi / T});
    const int Ms = (M > 0) ? M : 2 * std::max(2, static_cast<int>(std::ceil(S / ds)));

    std::vector<Matrix> acc(kBlocks, Matrix::Zero(N + 1, dim));
    parallel_for(kBlocks, [&](std::size_t b) {
      for (int m = static_cast<int>(b); m <= Ms; m += kBlocks) {
        const double s = -S + 2.0 * S * m / Ms;
        const double ws = (m == 0 || m == Ms) ? S / Ms : 2.0 * S / Ms;
        const Complex mu = double(sign) * Complex(s, -gamma);
        // hat(s) = int e^{-isx} w(x) dx by trapezoid on [0, 2T]
        Eigen::RowVectorXcd hat = Eigen::RowVectorXcd::Zero(dim);
        for (int j = 0; j <= 2 * N; ++j) {
          const double wj = (j == 0 || j == 2 * N) ? 0.5 * h : h;
          hat += wj * std::exp(Complex(0.0, -s * h * j)) * w.row(j);
        }
        const Eigen::RowVectorXcd q =
            (hat * resolvent_matrix(A, mu).transpose()) / mu;
        for (int j = 0; j <= N; ++j)
          acc[b].row(j) += (ws * std::exp(Complex(0.0, s * grid.node(j)))) * q;
      }
    });
    Matrix total = Matrix::Zero(N + 1, dim);
    for (int b = 0; b < kBlocks; ++b) total += acc[b];
    for (int j = 0; j <= N; ++j)
      total.row(j) *= std::exp(gamma * grid.node(j)) / (2.0 * kPi);
    if (branch == 1) total += b_resolvent_apply(0.0, g).values();
    avg.values() += 0.5 * total;
  }
  avg.values().row(0).setZero();
  return avg;
}

namespace {

GridFunction strip_factor_apply(const ModelOperator& A, int sign, const GridFunction& v) {
  GridFunction out(v.grid(), v.dim());
  out.values() = double(sign) * kI * (v.values() * A.matrix().transpose()) +
                 finite_diff_derivative(v, 1).values();
  return out;
}

}  // namespace

ENormReport e_norm(const ModelOperator& A, int sign, const GridFunction& v,
                   ENormLevel level, double p) {
  ENormReport rep;
  auto push = [&](const GridFunction& g) { rep.components.push_back(lp_norm(g, p)); };
  const auto e0_terms = [&](const GridFunction& g) {
    push(g);
    GridFunction first = strip_factor_apply(A, sign, g);
    push(first);
    push(strip_factor_apply(A, -sign, first));
  };
  switch (level) {
    case ENormLevel::E0:
      e0_terms(v);
      break;
    case ENormLevel::E1: {
      push(v);
      e0_terms(strip_factor_apply(A, -sign, v));
      break;
    }
    case ENormLevel::E2_partial: {
      e0_terms(v);
      e0_terms(strip_factor_apply(A, -sign, strip_factor_apply(A, sign, v)));
      break;
    }
  }
  for (double c : rep.components) rep.total += c;
  return rep;
}

double inverse_composition_check(const ModelOperator& A, const GridFunction& f,
                                 const ContourSpec& contour, double p) {
  const double fn = lp_norm(f, p);
  if (fn == 0.0) return 0.0;
  CauchyProblem problem{A, +1, f, ProblemKind::wave, contour};
  const GridFunction direct = solve_wave(problem, p).u;
  const GridFunction composed =
      j_operator_apply(A, +1, j_operator_apply(A, -1, f, contour), contour);
  return lp_norm(direct - composed, p) / fn;
}

double mixed_derivative_check(const ModelOperator& A, const GridFunction& u, double p) {
  const Matrix At = A.matrix().transpose();
  GridFunction au(u.grid(), u.dim());
  au.values() = finite_diff_derivative(u, 1).values() * At;
  GridFunction a2u(u.grid(), u.dim());
  a2u.values() = u.values() * (A.matrix() * A.matrix()).transpose();
  const double denom =
      lp_norm(u, p) + lp_norm(finite_diff_derivative(u, 2), p) + lp_norm(a2u, p);
  if (denom == 0.0) return 0.0;
  return lp_norm(au, p) / denom;
}

}  // namespace opcontour
