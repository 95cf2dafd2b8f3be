#pragma once

#include <complex>
#include <functional>
#include <Eigen/Dense>

#include "opcontour/errors.hpp"

namespace opcontour {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// A finite-dimensional complex linear operator, dense or diagonal.
/// Diagonal operators behave identically to the dense matrix with that
/// diagonal, but keep exact componentwise fast paths where possible.
class ModelOperator {
public:
  enum class Kind { dense, diagonal };

  static ModelOperator dense(Matrix entries);
  static ModelOperator diagonal(Vector spectrum);
  static ModelOperator identity(int dim);

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  bool is_diagonal() const { return kind_ == Kind::diagonal; }

  const Matrix& matrix() const { return matrix_; }
  /// Diagonal entries; only valid for the diagonal variant.
  const Vector& diag() const { return diag_; }

  /// Max-abs entry, used as the scale in singularity thresholds.
  double scale() const;

  Vector apply(const Vector& x) const;

private:
  ModelOperator(Kind kind, Matrix m, Vector d);
  Kind kind_;
  int dim_;
  Matrix matrix_;
  Vector diag_;
};

/// Vector norm on C^dim: the l^p norm, p in (1, inf), default Euclidean.
struct VectorNormSpec {
  double p = 2.0;
  bool is_euclidean() const { return p == 2.0; }
};

double vector_norm(const Vector& x, const VectorNormSpec& norm = {});

struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;          // right eigenvectors, columns
  double condition_estimate;    // condition number of the eigenvector matrix
};

struct OperatorNormEstimate {
  double value;        // exact for p=2; equals lower for general p
  double lower;        // random-probe lower bound
  double upper;        // Riesz-Thorin interpolation of the 1- and inf-norms
};

/// LU with partial pivoting; every resolvent solve runs through this with
/// one step of iterative refinement.
class LuFactors {
public:
  explicit LuFactors(Matrix m);  // throws SingularResolvent on tiny pivots
  Vector solve(const Vector& rhs) const;
  Vector solve_refined(const Vector& rhs) const;
  Matrix inverse() const;

private:
  Matrix original_;
  Matrix lu_;
  Eigen::VectorXi perm_;
};

/// Computes (A + lambda)^{-1} f.
Vector resolvent_apply(const ModelOperator& A, Complex lambda, const Vector& f);

/// Dense inverse of (A + lambda), same singularity policy as resolvent_apply.
Matrix resolvent_matrix(const ModelOperator& A, Complex lambda);

/// Spectral norm for p=2 (largest singular value); for general p a
/// probe-based lower bound and an interpolation upper bound.
OperatorNormEstimate operator_norm(const ModelOperator& A,
                                   const VectorNormSpec& norm = {},
                                   int probes = 64, unsigned long long seed = 0);

double operator_norm_2(const Matrix& m);

EigenDecomposition eigendecompose(const ModelOperator& A);

/// V f(diag lambda) V^{-1}; ground truth for fractional and imaginary powers.
ModelOperator matrix_function_oracle(const ModelOperator& A,
                                     const std::function<Complex(Complex)>& f);

/// A^{it} through the eigendecomposition, principal branch.
ModelOperator imaginary_power_oracle(const ModelOperator& A, double t);

}  // namespace opcontour
