#include "opcontour/linop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "opcontour/parallel.hpp"

namespace opcontour {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }
int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int nthreads = std::min<std::size_t>(thread_count(), n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

ModelOperator::ModelOperator(Kind kind, Matrix m, Vector d)
    : kind_(kind), dim_(static_cast<int>(m.rows())), matrix_(std::move(m)), diag_(std::move(d)) {}

ModelOperator ModelOperator::dense(Matrix entries) {
  if (entries.rows() < 1 || entries.rows() != entries.cols())
    throw DimensionMismatch("dense operator must be square with dim >= 1");
  return ModelOperator(Kind::dense, std::move(entries), Vector());
}

ModelOperator ModelOperator::diagonal(Vector spectrum) {
  if (spectrum.size() < 1) throw DimensionMismatch("diagonal operator needs dim >= 1");
  Matrix m = spectrum.asDiagonal();
  return ModelOperator(Kind::diagonal, std::move(m), std::move(spectrum));
}

ModelOperator ModelOperator::identity(int dim) {
  return diagonal(Vector::Ones(dim));
}

double ModelOperator::scale() const {
  return matrix_.cwiseAbs().maxCoeff();
}

Vector ModelOperator::apply(const Vector& x) const {
  if (x.size() != dim_) throw DimensionMismatch("operator/vector dimension mismatch");
  if (is_diagonal()) return diag_.cwiseProduct(x);
  return matrix_ * x;
}

double vector_norm(const Vector& x, const VectorNormSpec& norm) {
  if (norm.is_euclidean()) return x.norm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), norm.p);
  return std::pow(s, 1.0 / norm.p);
}

LuFactors::LuFactors(Matrix m) : original_(m), lu_(std::move(m)), perm_(lu_.rows()) {
  const Eigen::Index n = lu_.rows();
  const double scale = std::max(lu_.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) perm_[i] = static_cast<int>(i);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(lu_(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double v = std::abs(lu_(i, k));
      if (v > best) { best = v; piv = i; }
    }
    if (best < 1e-12 * scale)
      throw SingularResolvent("pivot below 1e-12 * scale: matrix numerically singular");
    if (piv != k) {
      lu_.row(piv).swap(lu_.row(k));
      std::swap(perm_[piv], perm_[k]);
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      lu_(i, k) /= lu_(k, k);
      lu_.row(i).tail(n - k - 1) -= lu_(i, k) * lu_.row(k).tail(n - k - 1);
    }
  }
}

Vector LuFactors::solve(const Vector& rhs) const {
  const Eigen::Index n = lu_.rows();
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
    x[i] /= lu_(i, i);
  }
  return x;
}

Vector LuFactors::solve_refined(const Vector& rhs) const {
  Vector x = solve(rhs);
  const Vector r = rhs - original_ * x;
  return x + solve(r);
}

Matrix LuFactors::inverse() const {
  const Eigen::Index n = lu_.rows();
  Matrix inv(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    inv.col(j) = solve_refined(e);
    e[j] = 0.0;
  }
  return inv;
}

Vector resolvent_apply(const ModelOperator& A, Complex lambda, const Vector& f) {
  if (f.size() != A.dim()) throw DimensionMismatch("resolvent_apply: rhs dimension mismatch");
  if (A.is_diagonal()) {
    const Vector& d = A.diag();
    const double scale = std::max(d.cwiseAbs().maxCoeff() + std::abs(lambda), 1e-300);
    Vector out(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const Complex den = d[i] + lambda;
      if (std::abs(den) < 1e-12 * scale)
        throw SingularResolvent("-lambda is in the spectrum of the diagonal operator");
      out[i] = f[i] / den;
    }
    return out;
  }
  Matrix shifted = A.matrix();
  shifted.diagonal().array() += lambda;
  return LuFactors(std::move(shifted)).solve_refined(f);
}

Matrix resolvent_matrix(const ModelOperator& A, Complex lambda) {
  if (A.is_diagonal()) {
    const Vector& d = A.diag();
    const double scale = std::max(d.cwiseAbs().maxCoeff() + std::abs(lambda), 1e-300);
    Vector inv(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const Complex den = d[i] + lambda;
      if (std::abs(den) < 1e-12 * scale)
        throw SingularResolvent("-lambda is in the spectrum of the diagonal operator");
      inv[i] = 1.0 / den;
    }
    return inv.asDiagonal();
  }
  Matrix shifted = A.matrix();
  shifted.diagonal().array() += lambda;
  return LuFactors(std::move(shifted)).inverse();
}

double operator_norm_2(const Matrix& m) {
  return m.jacobiSvd().singularValues()(0);
}

OperatorNormEstimate operator_norm(const ModelOperator& A, const VectorNormSpec& norm,
                                   int probes, unsigned long long seed) {
  if (norm.is_euclidean()) {
    const double s = operator_norm_2(A.matrix());
    return {s, s, s};
  }
  // Riesz-Thorin: ||A||_p <= ||A||_1^{1/p} ||A||_inf^{1-1/p}.
  const Matrix& m = A.matrix();
  const double n1 = m.cwiseAbs().colwise().sum().maxCoeff();
  const double ninf = m.cwiseAbs().rowwise().sum().maxCoeff();
  const double upper = std::pow(n1, 1.0 / norm.p) * std::pow(ninf, 1.0 - 1.0 / norm.p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double lower = 0.0;
  for (int k = 0; k < std::max(probes, 64); ++k) {
    Vector x(A.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = Complex(gauss(rng), gauss(rng));
    const double nx = vector_norm(x, norm);
    if (nx == 0.0) continue;
    lower = std::max(lower, vector_norm(A.apply(x), norm) / nx);
  }
  // Unit basis vectors attain the column p-norm, a useful deterministic probe.
  for (int j = 0; j < A.dim(); ++j) {
    Vector e = Vector::Zero(A.dim());
    e[j] = 1.0;
    lower = std::max(lower, vector_norm(A.apply(e), norm));
  }
  return {lower, lower, upper};
}

EigenDecomposition eigendecompose(const ModelOperator& A) {
  if (A.is_diagonal()) {
    return {A.diag(), Matrix::Identity(A.dim(), A.dim()), 1.0};
  }
  Eigen::ComplexEigenSolver<Matrix> solver(A.matrix(), /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw IllConditioned("complex eigensolver failed to converge");
  const Matrix V = solver.eigenvectors();
  const auto svd = V.jacobiSvd();
  const double smin = svd.singularValues()(V.rows() - 1);
  const double smax = svd.singularValues()(0);
  const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e8))
    throw IllConditioned("eigenvector matrix condition number exceeds 1e8 (defective operator?)");
  return {solver.eigenvalues(), V, cond};
}

ModelOperator matrix_function_oracle(const ModelOperator& A,
                                     const std::function<Complex(Complex)>& f) {
  const EigenDecomposition ed = eigendecompose(A);
  Vector fx(ed.eigenvalues.size());
  for (Eigen::Index i = 0; i < fx.size(); ++i) {
    const Complex v = f(ed.eigenvalues[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw FunctionSingularOnSpectrum("function not finite on the spectrum");
    fx[i] = v;
  }
  if (A.is_diagonal()) return ModelOperator::diagonal(fx);
  const Matrix scaled = ed.eigenvectors * fx.asDiagonal();
  // X = scaled V^{-1} solved as V^T X^T = scaled^T.
  Matrix result =
      Matrix(ed.eigenvectors.transpose()).partialPivLu().solve(Matrix(scaled.transpose()));
  result.transposeInPlace();
  return ModelOperator::dense(std::move(result));
}

ModelOperator imaginary_power_oracle(const ModelOperator& A, double t) {
  const EigenDecomposition ed = eigendecompose(A);
  for (Eigen::Index i = 0; i < ed.eigenvalues.size(); ++i) {
    const Complex lam = ed.eigenvalues[i];
    if (lam.real() <= 0.0 && std::abs(lam.imag()) < 1e-14 * std::abs(lam.real()))
      throw FunctionSingularOnSpectrum("spectrum touches (-inf, 0]: imaginary power undefined");
  }
  return matrix_function_oracle(A, [t](Complex z) {
    return std::exp(Complex(0.0, t) * std::log(z));  // principal branch
  });
}

}  // namespace opcontour
