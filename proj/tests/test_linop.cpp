#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opcontour/linop.hpp"

using namespace opcontour;

namespace {

ModelOperator diag2(Complex a, Complex b) {
  Vector d(2);
  d << a, b;
  return ModelOperator::diagonal(d);
}

Vector vec2(Complex a, Complex b) {
  Vector v(2);
  v << a, b;
  return v;
}

ModelOperator random_operator(std::mt19937_64& rng, int dim, double shift) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(unif(rng), unif(rng));
  m += shift * Matrix::Identity(dim, dim);
  return ModelOperator::dense(m);
}

}  // namespace

TEST_CASE("diagonal resolvent solve") {
  const ModelOperator A = diag2(1.0, 2.0);
  const Vector u = resolvent_apply(A, 1.0, vec2(1.0, 1.0));
  CHECK(std::abs(u[0] - 0.5) < 1e-14);
  CHECK(std::abs(u[1] - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("dense 2x2 inverse columns") {
  Matrix m(2, 2);
  m << 2.0, 1.0, 0.0, 2.0;
  const ModelOperator A = ModelOperator::dense(m);
  const Vector c0 = resolvent_apply(A, 0.0, vec2(1.0, 0.0));
  CHECK(std::abs(c0[0] - 0.5) < 1e-12);
  CHECK(std::abs(c0[1]) < 1e-12);
  const Vector c1 = resolvent_apply(A, 0.0, vec2(0.0, 1.0));
  CHECK(std::abs(c1[0] + 0.25) < 1e-12);
  CHECK(std::abs(c1[1] - 0.5) < 1e-12);
}

TEST_CASE("spectrum hit raises") {
  const ModelOperator A = ModelOperator::diagonal(Vector::Ones(1));
  Vector f = Vector::Ones(1);
  CHECK_THROWS_AS(resolvent_apply(A, -1.0, f), SingularResolvent);
}

TEST_CASE("dimension mismatch raises") {
  const ModelOperator A = diag2(1.0, 2.0);
  Vector f = Vector::Ones(3);
  CHECK_THROWS_AS(resolvent_apply(A, 1.0, f), DimensionMismatch);
}

TEST_CASE("operator norms") {
  CHECK(operator_norm(diag2(1.0, 2.0)).value == doctest::Approx(2.0));
  Matrix nil(2, 2);
  nil << 0.0, 1.0, 0.0, 0.0;
  CHECK(operator_norm(ModelOperator::dense(nil)).value == doctest::Approx(1.0));
  CHECK(operator_norm(ModelOperator::identity(3)).value == doctest::Approx(1.0));
  const auto p3 = operator_norm(ModelOperator::identity(3), {3.0});
  CHECK(p3.lower == doctest::Approx(1.0));
  CHECK(p3.upper == doctest::Approx(1.0));
}

TEST_CASE("general-p norm is consistent on random probes") {
  std::mt19937_64 rng(7);
  const ModelOperator A = random_operator(rng, 3, 0.0);
  const VectorNormSpec norm{1.5};
  const auto est = operator_norm(A, norm);
  CHECK(est.lower <= est.upper + 1e-12);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = Complex(unif(rng), unif(rng));
    CHECK(vector_norm(A.apply(x), norm) <= est.upper * vector_norm(x, norm) * (1 + 1e-12));
  }
}

TEST_CASE("eigendecomposition") {
  const auto ed = eigendecompose(diag2(1.0, 4.0));
  CHECK(ed.eigenvalues[0] == Complex(1.0, 0.0));
  CHECK(ed.eigenvalues[1] == Complex(4.0, 0.0));

  Matrix rot(2, 2);
  rot << 0.0, 1.0, -1.0, 0.0;
  const auto er = eigendecompose(ModelOperator::dense(rot));
  std::vector<double> ims = {er.eigenvalues[0].imag(), er.eigenvalues[1].imag()};
  std::sort(ims.begin(), ims.end());
  CHECK(ims[0] == doctest::Approx(-1.0));
  CHECK(ims[1] == doctest::Approx(1.0));

  Matrix defective(2, 2);
  defective << 2.0, 1.0, 0.0, 2.0;
  CHECK_THROWS_AS(eigendecompose(ModelOperator::dense(defective)), IllConditioned);
}

TEST_CASE("eigendecomposition invariant") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const ModelOperator A = random_operator(rng, 4, 0.0);
    const auto ed = eigendecompose(A);
    const double resid = operator_norm_2(
        A.matrix() * ed.eigenvectors -
        ed.eigenvectors * Matrix(ed.eigenvalues.asDiagonal()));
    CHECK(resid <= 1e-8 * ed.condition_estimate * std::max(operator_norm_2(A.matrix()), 1.0));
  }
}

TEST_CASE("matrix function oracle") {
  const ModelOperator A = diag2(1.0, 4.0);
  const ModelOperator inv_sqrt =
      matrix_function_oracle(A, [](Complex z) { return std::pow(z, -0.5); });
  CHECK(std::abs(inv_sqrt.matrix()(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(inv_sqrt.matrix()(1, 1) - 0.5) < 1e-12);

  const ModelOperator pow_i =
      matrix_function_oracle(A, [](Complex z) { return std::exp(Complex(0, 1) * std::log(z)); });
  CHECK(std::abs(pow_i.matrix()(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(pow_i.matrix()(1, 1) - std::exp(Complex(0, std::log(4.0)))) < 1e-12);

  // identity consistency: f(z) = z reproduces A
  std::mt19937_64 rng(3);
  const ModelOperator B = random_operator(rng, 3, 0.0);
  const ModelOperator same = matrix_function_oracle(B, [](Complex z) { return z; });
  CHECK(operator_norm_2(same.matrix() - B.matrix()) <= 1e-8 * operator_norm_2(B.matrix()));
}

TEST_CASE("imaginary powers") {
  const ModelOperator I3 = ModelOperator::identity(3);
  CHECK(operator_norm_2(imaginary_power_oracle(I3, 0.7).matrix() -
                        Matrix::Identity(3, 3)) < 1e-12);

  Vector e(1);
  e << std::exp(1.0);
  const ModelOperator Ae = ModelOperator::diagonal(e);
  CHECK(std::abs(imaginary_power_oracle(Ae, 3.14159265358979312).matrix()(0, 0) -
                 Complex(-1.0, 0.0)) < 1e-12);

  // group property A^{it} A^{is} = A^{i(t+s)}
  const ModelOperator A = diag2(Complex(1.0, 0.3), Complex(2.0, -0.2));
  const Matrix lhs =
      imaginary_power_oracle(A, 0.4).matrix() * imaginary_power_oracle(A, 0.35).matrix();
  const Matrix rhs = imaginary_power_oracle(A, 0.75).matrix();
  CHECK(operator_norm_2(lhs - rhs) < 1e-8);
}

TEST_CASE("resolvent identity on random probes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const ModelOperator A = random_operator(rng, 4, 3.0);
  for (int t = 0; t < 100; ++t) {
    const Complex l(unif(rng), 5.0 + unif(rng));
    const Complex m(unif(rng), -5.0 - unif(rng));
    Vector x(4);
    for (int i = 0; i < 4; ++i) x[i] = Complex(unif(rng), unif(rng));
    const Vector lhs = resolvent_apply(A, l, x) - resolvent_apply(A, m, x);
    const Vector rhs = (m - l) * resolvent_apply(A, l, resolvent_apply(A, m, x));
    CHECK((lhs - rhs).norm() <= 1e-8 * std::max(lhs.norm(), 1.0));
  }
}

TEST_CASE("diagonal fast path is componentwise exact") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector d(4);
  for (int i = 0; i < 4; ++i) d[i] = Complex(2.0 + unif(rng), unif(rng));
  const ModelOperator A = ModelOperator::diagonal(d);
  const Complex lambda(0.7, 1.3);
  Vector f(4);
  for (int i = 0; i < 4; ++i) f[i] = Complex(unif(rng), unif(rng));
  const Vector u = resolvent_apply(A, lambda, f);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(u[i] - f[i] / (d[i] + lambda)) <= 1e-12 * std::abs(u[i]));
}

TEST_CASE("p=2 norm matches eigenvalues for normal operators") {
  const ModelOperator A = diag2(Complex(3.0, 1.0), Complex(-1.0, 2.0));
  const double expected = std::max(std::abs(Complex(3.0, 1.0)), std::abs(Complex(-1.0, 2.0)));
  CHECK(operator_norm(A).value == doctest::Approx(expected).epsilon(1e-8));
}
