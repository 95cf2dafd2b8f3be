#pragma once

#include <functional>

#include "opcontour/time_calculus.hpp"

namespace opcontour {

/// Truncated vertical-line quadrature contour Re(lambda) = -c,
/// Im(lambda) in [-R, R], M trapezoid nodes. With auto_tune the spacing is
/// chosen from the horizon and R is extended in octaves until the last one
/// contributes less than 1e-6 of the accumulated integral.
struct ContourSpec {
  double c = 0.0;
  double R = 0.0;
  int M = 0;
  bool auto_tune = true;

  static ContourSpec automatic(double c) { return {c, 0.0, 0, true}; }
  static ContourSpec fixed(double c, double R, int M) { return {c, R, M, false}; }
};

/// Offset 1.5 * max |Im(spectrum)| + 0.5 keeps the line clear of the
/// singularities of both the strip and the parabola resolvent factors.
ContourSpec auto_contour(const ModelOperator& A);

enum class ProblemKind { schrodinger, wave };

struct CauchyProblem {
  ModelOperator A;
  int sign = +1;  // +1: i u' - A u = f; -1: i u' + A u = f (schrodinger only)
  GridFunction f;
  ProblemKind kind = ProblemKind::schrodinger;
  ContourSpec contour;
  bool allow_trace_warning = true;
};

struct SolutionBundle {
  GridFunction u;
  double residual_norm = 0.0;       // relative discrete L^p residual, recomputed
  double trace_u0 = 0.0;
  double trace_du0 = 0.0;           // wave only
  double quadrature_estimate = 0.0;
  bool trace_warning = false;       // forcing had a nonzero trace at t=0
  bool residual_ok = true;          // residual_norm <= 1e-3
};

/// J_{sign} g = (1/(2 pi i)) pv-int over Re(lambda)=-c of
/// (sign*iA - lambda)^{-1} (B+lambda)^{-1} g dlambda.
/// Inverse of (sign*iA + B) on zero-trace data.
GridFunction j_operator_apply(const ModelOperator& A, int sign,
                              const GridFunction& g, const ContourSpec& contour,
                              double* quad_estimate = nullptr);

/// Solves i u' - sign*A u = f, u(0)=0, by the contour representation
/// u = (1/(2 pi)) int (-sign*iA + lambda)^{-1} (B+lambda)^{-1} f dlambda.
SolutionBundle solve_schrodinger(const CauchyProblem& problem, double p = 2.0);

/// L w = int over Re(lambda)=-c of (A^2+lambda^2)^{-1} (B+lambda)^{-1} w
/// dlambda. The middle factor is evaluated both directly and through
/// (A^2+lambda^2)^{-1} = (1/(2 lambda))((iA+lambda)^{-1} + (-iA+lambda)^{-1});
/// disagreement beyond 1e-6 throws SplitIdentityViolation.
GridFunction l_operator_apply(const ModelOperator& A, const GridFunction& w,
                              const ContourSpec& contour,
                              double* quad_estimate = nullptr);

/// Solves u'' + A^2 u = f, u(0)=u'(0)=0: u = (1/(2 pi i)) L f.
SolutionBundle solve_wave(const CauchyProblem& problem, double p = 2.0);

/// Iterated-contour form (1/(2 pi i))^2 double integral of
/// (A-i lambda)^{-1} (A+i z)^{-1} (B+lambda)^{-1} (B+z)^{-1} v,
/// inner line Re = -c, outer line Re = -r, r > 2c. Since the two resolvent
/// pairs commute, the double sum factors into two successive line passes.
GridFunction double_contour_wave_apply(const ModelOperator& A, const GridFunction& v,
                                       const ContourSpec& inner, const ContourSpec& outer,
                                       double* quad_estimate = nullptr);

/// Fourier-line evaluation of J_{sign}: both branches of
/// J g = (1-(-1)^j)/2 B^{-1}g
///       + (e^{gamma t}/2 pi) int e^{ist} (s' )^{-1} (A+s')^{-1} h_j(s) ds,
/// s' = sign*s - sign*i*gamma, h_j the transform of e^{-gamma x}(D_j g)(x)
/// with D_0 = -B, D_1 = sign*iA, averaged over j in {0,1}. The integrand is
/// extended to zero on [T, 2T] with a C^2 blend before transforming.
GridFunction fourier_line_apply(const ModelOperator& A, int sign,
                                const GridFunction& g, double gamma, int M = 0);

enum class ENormLevel { E0, E1, E2_partial };

/// Discrete surrogate of the graph-type norms built from (sign*iA+B) and
/// (-sign*iA+B); components are the individual L^p norms, total their sum.
struct ENormReport {
  std::vector<double> components;
  double total = 0.0;
};

ENormReport e_norm(const ModelOperator& A, int sign, const GridFunction& v,
                   ENormLevel level, double p = 2.0);

/// || solve_wave(f) - J_plus(J_minus(f)) ||_p / ||f||_p.
double inverse_composition_check(const ModelOperator& A, const GridFunction& f,
                                 const ContourSpec& contour, double p = 2.0);

/// Observed constant in ||A u'|| <= C (||u|| + ||u''|| + ||A^2 u||).
double mixed_derivative_check(const ModelOperator& A, const GridFunction& u,
                              double p = 2.0);

}  // namespace opcontour
