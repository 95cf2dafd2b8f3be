#include "opcontour/time_calculus.hpp"

#include <cmath>
#include <complex>
#include <ostream>
#include <random>

namespace opcontour {

TimeGrid::TimeGrid(double T, int N) : T_(T), N_(N) {
  if (!(T > 0.0)) throw GridMismatch("horizon T must be positive");
  if (N < 8) throw GridMismatch("time grid needs at least 8 intervals");
}

GridFunction::GridFunction(TimeGrid grid, int dim)
    : grid_(grid), dim_(dim), values_(Matrix::Zero(grid.N() + 1, dim)) {
  if (dim < 1) throw DimensionMismatch("grid function needs dim >= 1");
}

GridFunction::GridFunction(TimeGrid grid, Matrix values)
    : grid_(grid), dim_(static_cast<int>(values.cols())), values_(std::move(values)) {
  if (values_.rows() != grid_.N() + 1 || dim_ < 1)
    throw GridMismatch("value array does not match the grid");
}

GridFunction GridFunction::zero(TimeGrid grid, int dim) { return GridFunction(grid, dim); }

GridFunction GridFunction::sample(TimeGrid grid, int dim,
                                  const std::function<Vector(double)>& f) {
  GridFunction out(grid, dim);
  for (int j = 0; j <= grid.N(); ++j) {
    Vector v = f(grid.node(j));
    if (v.size() != dim) throw DimensionMismatch("sampler returned wrong dimension");
    out.set(j, v);
  }
  return out;
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid()) || a.dim() != b.dim())
    throw GridMismatch("grid functions live on different grids");
}

GridFunction GridFunction::operator+(const GridFunction& o) const {
  require_same_grid(*this, o);
  return GridFunction(grid_, values_ + o.values_);
}

GridFunction GridFunction::operator-(const GridFunction& o) const {
  require_same_grid(*this, o);
  return GridFunction(grid_, values_ - o.values_);
}

GridFunction GridFunction::operator*(Complex a) const {
  return GridFunction(grid_, Matrix(values_ * a));
}

double GridFunction::sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

void GridFunction::write_csv(std::ostream& out) const {
  out << "t";
  for (int d = 0; d < dim_; ++d) out << ",re_" << d << ",im_" << d;
  out << "\n";
  char buf[32];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
  };
  for (int j = 0; j <= grid_.N(); ++j) {
    emit(grid_.node(j));
    for (int d = 0; d < dim_; ++d) {
      out << ",";
      emit(values_(j, d).real());
      out << ",";
      emit(values_(j, d).imag());
    }
    out << "\n";
  }
}

double lp_norm(const GridFunction& u, double p) {
  double acc = 0.0;
  for (int j = 0; j <= u.grid().N(); ++j)
    acc += u.grid().weight(j) * std::pow(u.values().row(j).norm(), p);
  return std::pow(acc, 1.0 / p);
}

GridFunction b_resolvent_apply(Complex lambda, const GridFunction& u) {
  const TimeGrid& g = u.grid();
  const double h = g.h();
  const Complex decay = std::exp(-lambda * h);
  GridFunction out(g, u.dim());
  // v_j = e^{-lambda h} v_{j-1} + (h/2)(e^{-lambda h} u_{j-1} + u_j) is the
  // composite trapezoid value of the convolution, updated causally in O(N).
  Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Zero(u.dim());
  for (int j = 1; j <= g.N(); ++j) {
    v = decay * v + (h / 2.0) * (decay * u.values().row(j - 1) + u.values().row(j));
    out.values().row(j) = v;
  }
  return out;
}

BrndReport verify_brnd(Complex lambda, const TimeGrid& grid, int probes, double p,
                       unsigned long long seed) {
  const double re = lambda.real();
  const double bound = (re == 0.0) ? grid.T() : (1.0 - std::exp(-re * grid.T())) / re;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < std::max(probes, 16); ++k) {
    GridFunction u(grid, 1);
    for (int j = 0; j <= grid.N(); ++j)
      u.values()(j, 0) = Complex(unif(rng), unif(rng));
    const double nu = lp_norm(u, p);
    if (nu == 0.0) continue;
    worst = std::max(worst, lp_norm(b_resolvent_apply(lambda, u), p) / (bound * nu));
  }
  return {bound, worst, worst <= 1.0 + 10.0 / grid.N()};
}

GridFunction finite_diff_derivative(const GridFunction& u, int order) {
  if (order != 1 && order != 2) throw Error("derivative order must be 1 or 2");
  const TimeGrid& g = u.grid();
  const int N = g.N();
  const double h = g.h();
  const Matrix& v = u.values();
  GridFunction out(g, u.dim());
  Matrix& d = out.values();
  if (order == 1) {
    d.row(0) = (-3.0 * v.row(0) + 4.0 * v.row(1) - v.row(2)) / (2.0 * h);
    for (int j = 1; j < N; ++j) d.row(j) = (v.row(j + 1) - v.row(j - 1)) / (2.0 * h);
    d.row(N) = (3.0 * v.row(N) - 4.0 * v.row(N - 1) + v.row(N - 2)) / (2.0 * h);
  } else {
    d.row(0) = (2.0 * v.row(0) - 5.0 * v.row(1) + 4.0 * v.row(2) - v.row(3)) / (h * h);
    for (int j = 1; j < N; ++j)
      d.row(j) = (v.row(j + 1) - 2.0 * v.row(j) + v.row(j - 1)) / (h * h);
    d.row(N) =
        (2.0 * v.row(N) - 5.0 * v.row(N - 1) + 4.0 * v.row(N - 2) - v.row(N - 3)) / (h * h);
  }
  return out;
}

namespace {

GridFunction kth_derivative(const GridFunction& u, int k) {
  GridFunction g = u;
  for (int m = 0; m < k; ++m) g = finite_diff_derivative(g, 1);
  return g;
}

}  // namespace

SobolevSeminorm sobolev_seminorm(const GridFunction& u, const SobolevParams& params) {
  if (!(params.s > 0.0 && params.s < 1.0)) throw ExponentOutOfRange("s must lie in (0,1)");
  if (params.k < 0 || params.k > 2) throw ExponentOutOfRange("k must be 0, 1 or 2");
  if (params.s * params.p >= params.p + 1.0)
    throw ExponentOutOfRange("diagonal weight not integrable");
  const TimeGrid& grid = u.grid();
  const int N = grid.N();
  const double h = grid.h();
  const double p = params.p;
  const double expo = 1.0 + params.s * p;
  const GridFunction g = kth_derivative(u, params.k);

  double off = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double wi = grid.weight(i);
    for (int j = 0; j <= N; ++j) {
      if (i == j) continue;
      const double dist = h * std::abs(i - j);
      const double diff = (g.values().row(i) - g.values().row(j)).norm();
      off += wi * grid.weight(j) * std::pow(diff, p) / std::pow(dist, expo);
    }
  }

  // The excluded band |x-y| < delta around the diagonal, with the integrand
  // replaced by its local first-order model |g'(x)|^p |x-y|^{p(1-s)-1}.
  const double delta = h / 2.0;
  const double band_exp = p * (1.0 - params.s);
  const GridFunction dg = finite_diff_derivative(g, 1);
  double band = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double L = dg.values().row(i).norm();
    band += grid.weight(i) * std::pow(L, p) * 2.0 * std::pow(delta, band_exp) / band_exp;
  }
  return {std::pow(off + band, 1.0 / p), std::pow(band, 1.0 / p)};
}

SobolevNorm sobolev_norm(const GridFunction& u, const SobolevParams& params) {
  SobolevSeminorm semi = sobolev_seminorm(u, params);
  double wk = 0.0;
  GridFunction g = u;
  for (int m = 0; m <= params.k; ++m) {
    wk += lp_norm(g, params.p);
    if (m < params.k) g = finite_diff_derivative(g, 1);
  }
  const double scale = std::max(u.sup_norm(), 1.0);
  const double tol = 10.0 * scale / (u.grid().N() * double(u.grid().N()));
  bool trace_ok = true;
  GridFunction d = u;
  for (int m = 0; m < params.k; ++m) {
    if (d.values().row(0).norm() > tol) trace_ok = false;
    d = finite_diff_derivative(d, 1);
  }
  if (params.s > 1.0 / params.p && d.values().row(0).norm() > tol) trace_ok = false;
  return {wk + semi.value, wk, semi.value, semi.diagonal_estimate, trace_ok};
}

double borderline_trace_seminorm(const GridFunction& u, double p) {
  const TimeGrid& g = u.grid();
  double acc = 0.0;
  for (int j = 1; j <= g.N(); ++j)
    acc += g.weight(j) * std::pow(u.values().row(j).norm(), p) / g.node(j);
  // First cell: u ~ u'(0) x near 0, so the integrand is |u'(0)|^p x^{p-1}.
  const GridFunction du = finite_diff_derivative(u, 1);
  acc += std::pow(du.values().row(0).norm(), p) * std::pow(g.h(), p) / p;
  return std::pow(acc, 1.0 / p);
}

}  // namespace opcontour
