#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "opcontour/time_calculus.hpp"

using namespace opcontour;

namespace {

GridFunction scalar(const TimeGrid& grid, const std::function<Complex(double)>& f) {
  return GridFunction::sample(grid, 1, [&](double t) {
    Vector v(1);
    v << f(t);
    return v;
  });
}

}  // namespace

TEST_CASE("grid basics") {
  const TimeGrid g(2.0, 8);
  CHECK(g.h() == doctest::Approx(0.25));
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(8) == 2.0);
  double total = 0.0;
  for (int j = 0; j <= 8; ++j) total += g.weight(j);
  CHECK(total == doctest::Approx(2.0));
  CHECK_THROWS_AS(TimeGrid(1.0, 4), GridMismatch);
  CHECK_THROWS_AS(TimeGrid(-1.0, 16), GridMismatch);
}

TEST_CASE("csv serialization round trip format") {
  const TimeGrid g(1.0, 8);
  GridFunction u = scalar(g, [](double t) { return Complex(t, -t); });
  std::ostringstream out;
  u.write_csv(out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,re_0,im_0");
  std::string first;
  std::getline(in, first);
  CHECK(first == "0,0,-0");
  int rows = 2;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);
}

TEST_CASE("b resolvent closed forms") {
  const TimeGrid g(1.0, 512);
  const GridFunction one = scalar(g, [](double) { return 1.0; });

  const GridFunction integral = b_resolvent_apply(0.0, one);
  for (int j = 0; j <= g.N(); j += 64)
    CHECK(std::abs(integral.at(j)[0] - g.node(j)) < 1e-13);

  const GridFunction decay = b_resolvent_apply(1.0, one);
  CHECK(std::abs(decay.at(g.N())[0] - (1.0 - std::exp(-1.0))) < 1e-5);
  CHECK(decay.at(0).norm() == 0.0);

  const GridFunction z = b_resolvent_apply(Complex(0, 1), GridFunction::zero(g, 1));
  CHECK(z.sup_norm() == 0.0);
}

TEST_CASE("b resolvent causality") {
  const TimeGrid g(1.0, 64);
  GridFunction u = scalar(g, [](double t) { return std::sin(3.0 * t); });
  const GridFunction base = b_resolvent_apply(Complex(0.5, 2.0), u);
  GridFunction bumped = u;
  bumped.values()(50, 0) += 10.0;
  const GridFunction after = b_resolvent_apply(Complex(0.5, 2.0), bumped);
  for (int j = 0; j < 50; ++j)
    CHECK(std::abs(after.at(j)[0] - base.at(j)[0]) == 0.0);
  CHECK(std::abs(after.at(51)[0] - base.at(51)[0]) > 1e-6);
}

TEST_CASE("b resolvent identity") {
  const TimeGrid g(1.0, 256);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Complex l(1.0, 2.0), m(-0.5, -1.0);
  GridFunction u = scalar(g, [&](double t) { return std::cos(2.0 * t) + 0.3 * t; });
  const GridFunction lhs =
      b_resolvent_apply(l, u) - b_resolvent_apply(m, u);
  GridFunction rhs = b_resolvent_apply(l, b_resolvent_apply(m, u)) * (m - l);
  CHECK((lhs - rhs).sup_norm() < 10.0 / (256.0 * 256.0));
  (void)rng;
  (void)unif;
}

TEST_CASE("discrete residual of the b resolvent") {
  const TimeGrid g(1.0, 512);
  const Complex lambda(1.0, 1.5);
  GridFunction u = scalar(g, [](double t) { return std::sin(2.0 * t); });
  const GridFunction v = b_resolvent_apply(lambda, u);
  const GridFunction dv = finite_diff_derivative(v, 1);
  double worst = 0.0;
  for (int j = 1; j <= g.N(); ++j)
    worst = std::max(worst, std::abs(dv.at(j)[0] + lambda * v.at(j)[0] - u.at(j)[0]));
  CHECK(worst < 20.0 / (512.0 * 512.0));
}

TEST_CASE("grid refinement improves the b resolvent") {
  const Complex lambda(2.0, 1.0);
  auto error_at = [&](int N) {
    const TimeGrid g(1.0, N);
    const GridFunction one = scalar(g, [](double) { return 1.0; });
    const GridFunction v = b_resolvent_apply(lambda, one);
    double worst = 0.0;
    for (int j = 0; j <= N; ++j) {
      const Complex exact = (1.0 - std::exp(-lambda * g.node(j))) / lambda;
      worst = std::max(worst, std::abs(v.at(j)[0] - exact));
    }
    return worst;
  };
  const double ratio = error_at(128) / error_at(256);
  CHECK(ratio > 4.0 * 0.7);
  CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("resolvent bound of the derivation operator") {
  const TimeGrid g(1.0, 512);
  {
    const auto rep = verify_brnd(1.0, g, 16);
    CHECK(rep.bound == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(rep.pass);
  }
  {
    const auto rep = verify_brnd(Complex(0.0, 2.0), g, 16);
    CHECK(rep.bound == doctest::Approx(1.0));
    CHECK(rep.pass);
  }
  {
    const auto rep = verify_brnd(10.0, g, 16);
    CHECK(rep.bound == doctest::Approx(0.1 - 0.1 * std::exp(-10.0)));
    CHECK(rep.pass);
  }
}

TEST_CASE("bound holds for random offsets") {
  const TimeGrid g(1.0, 256);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Complex lambda(5.0 * unif(rng), 5.0 * unif(rng));
    const auto rep = verify_brnd(lambda, g, 16, 2.0, rng());
    CHECK(rep.max_ratio <= 1.0 + 10.0 / g.N());
  }
}

TEST_CASE("finite differences are exact on quadratics") {
  const TimeGrid g(1.0, 32);
  GridFunction u = scalar(g, [](double t) { return t * t; });
  const GridFunction d1 = finite_diff_derivative(u, 1);
  const GridFunction d2 = finite_diff_derivative(u, 2);
  for (int j = 0; j <= g.N(); ++j) {
    CHECK(std::abs(d1.at(j)[0] - 2.0 * g.node(j)) < 1e-12);
    CHECK(std::abs(d2.at(j)[0] - 2.0) < 1e-11);
  }
  const GridFunction c = scalar(g, [](double) { return 4.2; });
  CHECK(finite_diff_derivative(c, 1).sup_norm() < 1e-13);
}

TEST_CASE("fractional seminorm of the identity function") {
  const TimeGrid g(1.0, 512);
  GridFunction u = scalar(g, [](double t) { return t; });
  const auto half = sobolev_seminorm(u, {0.5, 0, 2.0});
  CHECK(std::abs(half.value - 1.0) < 0.02);

  const GridFunction c = scalar(g, [](double) { return 2.0; });
  CHECK(sobolev_seminorm(c, {0.5, 0, 2.0}).value == 0.0);

  // closed form: seminorm^2 = 2/((a+1)(a+2)) with a = p(1-s)-1 = 1/2 here
  const auto quarter = sobolev_seminorm(u, {0.25, 0, 2.0});
  const double expected = std::sqrt(2.0 / (1.5 * 2.5));
  CHECK(std::abs(quarter.value - expected) < 0.02 * expected);
}

TEST_CASE("seminorm grid refinement") {
  auto value_at = [](int N) {
    const TimeGrid g(1.0, N);
    GridFunction u = scalar(g, [](double t) { return std::sin(2.0 * t); });
    return sobolev_seminorm(u, {0.4, 0, 2.0}).value;
  };
  const double coarse = value_at(128);
  const double fine = value_at(256);
  const double finer = value_at(512);
  CHECK(std::abs(fine - finer) < std::abs(coarse - finer));
}

TEST_CASE("sobolev norm pieces") {
  const TimeGrid g(1.0, 512);
  CHECK(sobolev_norm(GridFunction::zero(g, 1), {0.5, 0, 2.0}).total == 0.0);

  GridFunction u = scalar(g, [](double t) { return t; });
  const auto n = sobolev_norm(u, {0.5, 0, 2.0});
  CHECK(std::abs(n.total - (1.0 / std::sqrt(3.0) + 1.0)) < 0.02 * n.total);

  const GridFunction one = scalar(g, [](double) { return 1.0; });
  CHECK(!sobolev_norm(one, {0.75, 0, 2.0}).trace_ok);
  CHECK(sobolev_norm(u, {0.75, 0, 2.0}).trace_ok);
}

TEST_CASE("borderline trace weight stays finite") {
  const TimeGrid g(1.0, 512);
  GridFunction u = scalar(g, [](double t) { return t; });
  const double v = borderline_trace_seminorm(u, 2.0);
  CHECK(v > 0.0);
  CHECK(v < 2.0);  // exact value 1/sqrt(2) for u = t
  CHECK(std::abs(v - 1.0 / std::sqrt(2.0)) < 0.01);
}

TEST_CASE("exponent guards") {
  const TimeGrid g(1.0, 64);
  GridFunction u = scalar(g, [](double t) { return t; });
  CHECK_THROWS_AS(sobolev_seminorm(u, {1.5, 0, 2.0}), ExponentOutOfRange);
  CHECK_THROWS_AS(sobolev_seminorm(u, {0.5, 3, 2.0}), ExponentOutOfRange);
}
