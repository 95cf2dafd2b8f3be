#include "opcontour/operator_classes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace opcontour {

namespace {

constexpr double kPi = std::numbers::pi;

// 32 samples per decade spanning [1e-2, 1e4] times the operator scale.
std::vector<double> magnitude_ladder(double scale) {
  const double base = std::max(scale, 1.0);
  std::vector<double> out;
  for (int k = 0; k <= 6 * 32; ++k)
    out.push_back(1e-2 * base * std::pow(10.0, k / 32.0));
  return out;
}

double resolvent_norm(const ModelOperator& A, Complex lambda) {
  return operator_norm_2(resolvent_matrix(A, lambda));
}

struct Sampler {
  ClassificationReport report;
  double K_max;

  void visit(const ModelOperator& A, Complex lambda, double weight = 1.0) {
    ++report.sample_count;
    double q;
    try {
      q = weight * resolvent_norm(A, lambda);
    } catch (const SingularResolvent&) {
      report.singular = true;
      report.worst_point = lambda;
      return;
    }
    if (q > report.K_hat) {
      report.K_hat = q;
      report.worst_point = lambda;
    }
  }

  ClassificationReport finish() {
    report.pass = !report.singular && report.K_hat <= K_max;
    return report;
  }
};

// Robust singularity detection: the sampled ladder can straddle an
// eigenvalue, so region membership of the spectrum of -A is checked directly.
bool spectrum_hits(const ModelOperator& A, const std::function<bool(Complex)>& in_region) {
  Vector eig;
  try {
    eig = eigendecompose(A).eigenvalues;
  } catch (const IllConditioned&) {
    Eigen::ComplexEigenSolver<Matrix> s(A.matrix(), false);
    eig = s.eigenvalues();
  }
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    if (in_region(-eig[i])) return true;
  return false;
}

Complex spectrum_witness(const ModelOperator& A, const std::function<bool(Complex)>& in_region) {
  Eigen::ComplexEigenSolver<Matrix> s(A.matrix(), false);
  for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i)
    if (in_region(-s.eigenvalues()[i])) return -s.eigenvalues()[i];
  return 0.0;
}

}  // namespace

SectorRegion default_sector_region(const ModelOperator& A, double phi) {
  SectorRegion r;
  r.phi = phi;
  r.radii = magnitude_ladder(A.scale());
  r.radii.insert(r.radii.begin(), 0.0);
  return r;
}

StripRegion default_strip_region(const ModelOperator& A, double c) {
  StripRegion r;
  r.c = c;
  const double top = 1e4 * std::max(A.scale(), 1.0);
  for (double m = c; m <= top; m *= std::pow(10.0, 1.0 / 32.0)) {
    r.im_samples.push_back(m);
    r.im_samples.push_back(-m);
  }
  r.re_samples = {0.0, c, -c, 10.0 * c, -10.0 * c, 100.0 * c, -100.0 * c};
  Eigen::ComplexEigenSolver<Matrix> s(A.matrix(), false);
  for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i)
    r.re_samples.push_back(-s.eigenvalues()[i].real());
  return r;
}

ParabolaRegion default_parabola_region(const ModelOperator& A, double c) {
  ParabolaRegion r;
  r.c = c;
  const double top = 1e2 * std::max(std::sqrt(A.scale()), 1.0);
  for (double y = 1e-2 * c; y <= top; y *= std::pow(10.0, 1.0 / 32.0)) {
    r.y_samples.push_back(y);
    r.y_samples.push_back(-y);
  }
  r.y_samples.push_back(0.0);
  r.interior_offsets = {0.0, c * c, 10.0 * c * c, 100.0 * c * c};
  return r;
}

ClassificationReport check_sectorial(const ModelOperator& A, const SectorRegion& region,
                                     double K_max) {
  Sampler s{{}, K_max};
  s.report.tag = ClassTag::sectorial;
  auto in_sector = [&](Complex z) {
    if (z == Complex(0, 0)) return true;
    return std::abs(std::arg(z)) <= region.phi + 1e-12;
  };
  if (spectrum_hits(A, in_sector)) {
    s.report.singular = true;
    s.report.worst_point = spectrum_witness(A, in_sector);
    return s.finish();
  }
  const int arcs = std::max(region.samples_per_arc, 1);
  for (double radius : region.radii) {
    for (int a = 0; a < arcs; ++a) {
      const double ang = (arcs == 1) ? 0.0 : -region.phi + 2.0 * region.phi * a / (arcs - 1);
      const Complex lambda = radius * std::exp(Complex(0.0, ang));
      s.visit(A, lambda, 1.0 + std::abs(lambda));
      if (arcs > 1 && region.phi == 0.0) break;
    }
  }
  return s.finish();
}

ClassificationReport check_strip(const ModelOperator& A, const StripRegion& region,
                                 double K_max) {
  Sampler s{{}, K_max};
  s.report.tag = ClassTag::strip;
  auto in_strip = [&](Complex z) { return std::abs(z.imag()) >= region.c - 1e-12; };
  if (spectrum_hits(A, in_strip)) {
    s.report.singular = true;
    s.report.worst_point = spectrum_witness(A, in_strip);
    return s.finish();
  }
  for (double im : region.im_samples)
    for (double re : region.re_samples) s.visit(A, Complex(re, im));
  return s.finish();
}

ClassificationReport check_strip_decay(const ModelOperator& A, const StripRegion& region) {
  ClassificationReport rep;
  rep.tag = ClassTag::strip_decay;
  auto in_strip = [&](Complex z) { return std::abs(z.imag()) >= region.c - 1e-12; };
  if (spectrum_hits(A, in_strip)) {
    rep.singular = true;
    rep.worst_point = spectrum_witness(A, in_strip);
    return rep;
  }
  // Least-squares slope of log||(A+lambda)^{-1}|| against log|Im| along the
  // geometric ladder |Im| = 2^k c.
  std::vector<double> lx, ly;
  for (int k = 0; k <= 12; ++k) {
    const Complex lambda(0.0, region.c * std::pow(2.0, k));
    lx.push_back(std::log(std::abs(lambda.imag())));
    ly.push_back(std::log(resolvent_norm(A, lambda)));
    ++rep.sample_count;
  }
  const auto n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.decay_exponent = -slope;
  rep.K_hat = std::exp(*std::max_element(ly.begin(), ly.end()));
  rep.pass = rep.decay_exponent >= 0.9;
  return rep;
}

ClassificationReport check_parabola(const ModelOperator& L, const ParabolaRegion& region,
                                    double K_max, const ModelOperator& sqrt_L) {
  const Matrix sq = sqrt_L.matrix() * sqrt_L.matrix();
  if (operator_norm_2(sq - L.matrix()) > 1e-8 * std::max(operator_norm_2(L.matrix()), 1.0))
    throw InconsistentSquareRoot("provided square root does not square back to the operator");
  ClassificationReport rep;
  rep.tag = ClassTag::parabola;
  const double c = region.c;
  auto in_parabola = [&](Complex z) {
    return z.real() >= c * c - z.imag() * z.imag() / (4.0 * c * c) - 1e-12;
  };
  if (spectrum_hits(L, in_parabola)) {
    rep.singular = true;
    rep.worst_point = spectrum_witness(L, in_parabola);
    rep.pass = false;
    return rep;
  }
  for (double y : region.y_samples) {
    const Complex boundary = Complex(c, y) * Complex(c, y);
    for (double off : region.interior_offsets) {
      const Complex z = boundary + off;
      ++rep.sample_count;
      double q;
      try {
        const Matrix res = resolvent_matrix(L, z);
        q = std::max(std::sqrt(std::abs(z)) * operator_norm_2(res),
                     operator_norm_2(sqrt_L.matrix() * res));
      } catch (const SingularResolvent&) {
        rep.singular = true;
        rep.worst_point = z;
        continue;
      }
      if (q > rep.K_hat) {
        rep.K_hat = q;
        rep.worst_point = z;
      }
    }
  }
  rep.pass = !rep.singular && rep.K_hat <= K_max;
  return rep;
}

namespace {

// L^2(0,1;X) norm of sum_k eps_k v_k over explicit sign patterns.
double rademacher_average(const std::vector<Vector>& v,
                          const std::vector<std::vector<int>>& patterns,
                          const VectorNormSpec& norm) {
  double acc = 0.0;
  for (const auto& signs : patterns) {
    Vector sum = Vector::Zero(v[0].size());
    for (std::size_t k = 0; k < v.size(); ++k)
      sum += double(signs[k]) * v[k];
    const double nv = vector_norm(sum, norm);
    acc += nv * nv;
  }
  return std::sqrt(acc / patterns.size());
}

}  // namespace

RBoundEstimate estimate_r_bound(const std::vector<ModelOperator>& family,
                                const RademacherTrialSpec& spec,
                                const VectorNormSpec& norm) {
  if (family.empty()) throw DimensionMismatch("empty operator family");
  const int dim = family[0].dim();
  for (const auto& op : family)
    if (op.dim() != dim) throw DimensionMismatch("family members differ in dimension");

  const std::size_t n = family.size();
  double sup = 0.0;
  std::vector<Vector> top_vectors;  // maximizing singular vectors per member
  for (const auto& op : family) {
    Eigen::JacobiSVD<Matrix> svd(op.matrix(), Eigen::ComputeThinV);
    sup = std::max(sup, svd.singularValues()(0));
    top_vectors.push_back(svd.matrixV().col(0));
  }

  // In the Euclidean case the sign average collapses exactly:
  // E ||sum eps_k v_k||^2 = sum ||v_k||^2, so no enumeration is needed.
  const bool hilbert = norm.is_euclidean();
  const bool exhaustive = hilbert || n <= 16;
  std::vector<std::vector<int>> patterns;
  std::mt19937_64 rng(spec.seed);
  if (hilbert) {
    // no patterns required
  } else if (exhaustive) {
    for (std::size_t mask = 0; mask < (1ull << n); ++mask) {
      std::vector<int> signs(n);
      for (std::size_t k = 0; k < n; ++k) signs[k] = (mask >> k) & 1 ? 1 : -1;
      patterns.push_back(std::move(signs));
    }
  } else {
    for (int t = 0; t < std::max(spec.trials, 100); ++t) {
      std::vector<int> signs(n);
      for (std::size_t k = 0; k < n; ++k) signs[k] = (rng() & 1) ? 1 : -1;
      patterns.push_back(std::move(signs));
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = 0.0;
  auto average = [&](const std::vector<Vector>& v) {
    if (hilbert) {
      double acc = 0.0;
      for (const auto& vk : v) acc += vk.squaredNorm();
      return std::sqrt(acc);
    }
    return rademacher_average(v, patterns, norm);
  };
  auto try_probe = [&](const std::vector<Vector>& x) {
    std::vector<Vector> ax(n);
    for (std::size_t k = 0; k < n; ++k) ax[k] = family[k].apply(x[k]);
    const double denom = average(x);
    if (denom == 0.0) return;
    best = std::max(best, average(ax) / denom);
  };

  for (int t = 0; t < std::max(spec.probes, 1); ++t) {
    std::vector<Vector> x(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = Vector(dim);
      for (int i = 0; i < dim; ++i) x[k][i] = Complex(gauss(rng), gauss(rng));
    }
    try_probe(x);
  }
  // Concentrated probes: only member k active, at its top singular vector.
  // Guarantees the estimate reaches sup_k ||A_k|| up to the average ratio.
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Vector> x(n, Vector::Zero(dim));
    x[k] = top_vectors[k];
    try_probe(x);
  }

  return {best, sup, exhaustive};
}

namespace {

using TailFn = std::function<Matrix(const ModelOperator&, double, double)>;

// Shared doubling driver for the ray integrals in log s.
Matrix ray_integral(const ModelOperator& A, const RayQuadrature& quad,
                    const std::function<Matrix(double)>& integrand,
                    const TailFn& small_tail, const TailFn& large_tail, double theta) {
  const double lo = std::log(quad.s_min);
  const double hi = std::log(quad.s_max);
  Matrix prev;
  int M = std::max(quad.M, 8);
  for (int pass = 0; pass < 7; ++pass, M *= 2) {
    Matrix acc = Matrix::Zero(A.dim(), A.dim());
    const double dlog = (hi - lo) / M;
    for (int m = 0; m <= M; ++m) {
      const double s = std::exp(lo + m * dlog);
      const double w = (m == 0 || m == M) ? 0.5 * dlog : dlog;
      acc += w * s * integrand(s);  // ds = s dsigma
    }
    acc += small_tail(A, quad.s_min, theta) + large_tail(A, quad.s_max, theta);
    if (pass > 0) {
      const double scale = std::max(operator_norm_2(acc), 1e-300);
      if (operator_norm_2(acc - prev) <= 1e-6 * scale) return acc;
    }
    prev = acc;
  }
  throw QuadratureNotConverged("ray quadrature did not stabilize under node doubling");
}

void require_positive_sector(const ModelOperator& A) {
  Eigen::ComplexEigenSolver<Matrix> s(A.matrix(), false);
  for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i) {
    const Complex lam = s.eigenvalues()[i];
    if (lam.real() <= 0.0 && std::abs(lam.imag()) <= 1e-12 * std::max(std::abs(lam.real()), 1.0))
      throw NotSectorial("spectrum touches (-inf, 0]");
  }
}

}  // namespace

ModelOperator balakrishnan_power(const ModelOperator& A, double theta,
                                 const RayQuadrature& quad) {
  if (!(theta > 0.0 && theta < 1.0)) throw ExponentOutOfRange("theta must lie in (0,1)");
  require_positive_sector(A);
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  const Matrix Am = A.matrix();
  const Matrix Ainv = LuFactors(Am).inverse();
  // Analytic tails from the geometric expansions of (A+s)^{-1} at both ends.
  auto small_tail = [&](const ModelOperator&, double smin, double th) -> Matrix {
    return Ainv * (std::pow(smin, 1.0 - th) / (1.0 - th)) -
           Ainv * Ainv * (std::pow(smin, 2.0 - th) / (2.0 - th));
  };
  auto large_tail = [&](const ModelOperator&, double smax, double th) -> Matrix {
    return I * (std::pow(smax, -th) / th) - Am * (std::pow(smax, -1.0 - th) / (1.0 + th)) +
           Am * Am * (std::pow(smax, -2.0 - th) / (2.0 + th));
  };
  Matrix result = ray_integral(
      A, quad,
      [&](double s) -> Matrix { return std::pow(s, -theta) * resolvent_matrix(A, s); },
      small_tail, large_tail, theta);
  result *= std::sin(kPi * theta) / kPi;
  return ModelOperator::dense(std::move(result));
}

ModelOperator q_operator(const ModelOperator& A, Complex z, double theta,
                         const RayQuadrature& quad) {
  if (!(theta > 0.0 && theta < 1.0)) throw ExponentOutOfRange("theta must lie in (0,1)");
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw BranchCutViolation("z must avoid the branch cut [0, inf)");
  require_positive_sector(A);
  const Matrix I = Matrix::Identity(A.dim(), A.dim());
  const Matrix Am = A.matrix();
  const Matrix Ainv = LuFactors(Am).inverse();
  auto small_tail = [&](const ModelOperator&, double smin, double th) -> Matrix {
    return Ainv / z * (std::pow(smin, 1.0 - th) / (1.0 - th)) +
           (Ainv / (z * z) - Ainv * Ainv / z) * (std::pow(smin, 2.0 - th) / (2.0 - th));
  };
  auto large_tail = [&](const ModelOperator&, double smax, double th) -> Matrix {
    return -(I * (std::pow(smax, -th - 1.0) / (1.0 + th)) +
             (z * I - Am) * (std::pow(smax, -th - 2.0) / (2.0 + th)));
  };
  Matrix result = ray_integral(
      A, quad,
      [&](double s) -> Matrix {
        return std::pow(s, -theta) / (z - s) * resolvent_matrix(A, s);
      },
      small_tail, large_tail, theta);
  result *= std::sin(kPi * theta) / kPi;
  return ModelOperator::dense(std::move(result));
}

Vector pv_projection(const ModelOperator& A, double a, const Vector& u, double R, int M) {
  // (1/(i pi)) int_{a-iR}^{a+iR} (A+lambda)^{-1} u dlambda
  //   = (1/pi) int_{-R}^{R} (A+a+iy)^{-1} u dy.
  Vector acc = Vector::Zero(u.size());
  const double dy = 2.0 * R / M;
  for (int m = 0; m <= M; ++m) {
    const double y = -R + m * dy;
    const double w = (m == 0 || m == M) ? 0.5 * dy : dy;
    acc += w * resolvent_apply(A, Complex(a, y), u);
  }
  return acc / kPi;
}

}  // namespace opcontour
