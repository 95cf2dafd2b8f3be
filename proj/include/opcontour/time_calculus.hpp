#pragma once

#include <iosfwd>
#include <vector>

#include "opcontour/linop.hpp"

namespace opcontour {

/// Uniform partition of [0, T] into N intervals with trapezoid weights.
class TimeGrid {
public:
  TimeGrid(double T, int N);

  double T() const { return T_; }
  int N() const { return N_; }
  double h() const { return T_ / N_; }
  double node(int j) const { return T_ * j / N_; }
  /// Composite trapezoid weight at node j; weights sum to T.
  double weight(int j) const { return (j == 0 || j == N_) ? 0.5 * h() : h(); }

  bool operator==(const TimeGrid& o) const { return T_ == o.T_ && N_ == o.N_; }

private:
  double T_;
  int N_;
};

/// A vector-valued function sampled on a TimeGrid. Row j holds the value at
/// node j; columns are state components.
class GridFunction {
public:
  GridFunction(TimeGrid grid, int dim);
  GridFunction(TimeGrid grid, Matrix values);

  static GridFunction zero(TimeGrid grid, int dim);
  static GridFunction sample(TimeGrid grid, int dim,
                             const std::function<Vector(double)>& f);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  int nodes() const { return grid_.N() + 1; }

  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  Vector at(int j) const { return values_.row(j).transpose(); }
  void set(int j, const Vector& v) { values_.row(j) = v.transpose(); }

  GridFunction operator+(const GridFunction& o) const;
  GridFunction operator-(const GridFunction& o) const;
  GridFunction operator*(Complex a) const;

  double sup_norm() const;  // max over nodes of the max-abs component

  /// CSV: header t,re_0,im_0,...,re_{dim-1},im_{dim-1}, one row per node,
  /// 17 significant digits.
  void write_csv(std::ostream& out) const;

private:
  TimeGrid grid_;
  int dim_;
  Matrix values_;  // (N+1) x dim
};

void require_same_grid(const GridFunction& a, const GridFunction& b);

/// Discrete L^p(0,T) norm of the Euclidean pointwise norm, trapezoid weights.
double lp_norm(const GridFunction& u, double p);

/// ((B+lambda)^{-1}u)(t) = int_0^t e^{lambda(x-t)} u(x) dx by the causal
/// recursion that reproduces the composite trapezoid rule exactly.
GridFunction b_resolvent_apply(Complex lambda, const GridFunction& u);

struct BrndReport {
  double bound;       // (1 - e^{-Re(lambda) T}) / Re(lambda), or T on Re = 0
  double max_ratio;   // worst ||(B+lambda)^{-1}u||_p / (bound ||u||_p)
  bool pass;          // max_ratio <= 1 + 10/N
};

BrndReport verify_brnd(Complex lambda, const TimeGrid& grid, int probes,
                       double p = 2.0, unsigned long long seed = 0);

/// Second-order finite differences: central interior, one-sided at the ends.
GridFunction finite_diff_derivative(const GridFunction& u, int order);

struct SobolevParams {
  double s = 0.5;
  int k = 0;
  double p = 2.0;
};

struct SobolevSeminorm {
  double value;
  double diagonal_estimate;  // contribution of the near-diagonal band
};

/// Fractional seminorm [d^k u]_{s,p}: double trapezoid over node pairs with
/// the near-diagonal band replaced by a local-derivative estimate.
SobolevSeminorm sobolev_seminorm(const GridFunction& u, const SobolevParams& params);

struct SobolevNorm {
  double total;       // W^{k,p} part + seminorm
  double wk_norm;     // sum of L^p norms of derivatives up to order k
  double seminorm;
  double diagonal_estimate;
  bool trace_ok;      // vanishing traces at t=0 (zero-trace subspace flags)
};

SobolevNorm sobolev_norm(const GridFunction& u, const SobolevParams& params);

/// Borderline s = 1/p weight (int ||u(x)||^p dx/x)^{1/p}; the first cell is
/// estimated from the derivative at 0. Reported, not certified.
double borderline_trace_seminorm(const GridFunction& u, double p);

}  // namespace opcontour
