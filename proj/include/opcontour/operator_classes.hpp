#pragma once

#include <vector>

#include "opcontour/linop.hpp"

namespace opcontour {

/// Sector S_phi = {|arg(lambda)| <= phi} united with {0}.
struct SectorRegion {
  double phi = 0.0;
  std::vector<double> radii;
  int samples_per_arc = 9;
};

/// Strip complement Z_c = {|Im(lambda)| >= c}.
struct StripRegion {
  double c = 1.0;
  std::vector<double> im_samples;  // |im| >= c
  std::vector<double> re_samples;
};

/// Parabola region: boundary z = (c+iy)^2 plus rightward interior offsets.
struct ParabolaRegion {
  double c = 0.5;
  std::vector<double> y_samples;
  std::vector<double> interior_offsets;
};

SectorRegion default_sector_region(const ModelOperator& A, double phi);
StripRegion default_strip_region(const ModelOperator& A, double c);
ParabolaRegion default_parabola_region(const ModelOperator& A, double c);

enum class ClassTag { sectorial, strip, strip_decay, parabola, r_strip, r_parabola };

struct ClassificationReport {
  ClassTag tag;
  double K_hat = 0.0;           // sampled supremum (a lower bound of the true constant)
  Complex worst_point{0, 0};
  bool pass = false;
  int sample_count = 0;
  bool singular = false;        // resolvent singularity inside the region
  double decay_exponent = 0.0;  // only for strip_decay
};

/// Samples (1+|lambda|)||(A+lambda)^{-1}|| over the sector.
ClassificationReport check_sectorial(const ModelOperator& A, const SectorRegion& region,
                                     double K_max);

/// Samples ||(A+lambda)^{-1}|| over Z_c.
ClassificationReport check_strip(const ModelOperator& A, const StripRegion& region,
                                 double K_max);

/// Fits ||(A+lambda)^{-1}|| ~ C |Im(lambda)|^{-alpha} along a geometric
/// ladder; pass when alpha >= 0.9.
ClassificationReport check_strip_decay(const ModelOperator& A, const StripRegion& region);

/// Samples sqrt|z| ||(L+z)^{-1}|| and ||L^{1/2}(L+z)^{-1}|| over the parabola
/// region; sqrt_L must square back to L within 1e-8.
ClassificationReport check_parabola(const ModelOperator& L, const ParabolaRegion& region,
                                    double K_max, const ModelOperator& sqrt_L);

struct RademacherTrialSpec {
  int n = 0;             // family subset size per trial; 0 = whole family
  int trials = 4096;     // random sign vectors when not exhaustive
  int probes = 16;       // probe vectors per trial
  unsigned long long seed = 0;
};

struct RBoundEstimate {
  double estimate;       // max observed Rademacher-average ratio (lower bound)
  double sup_norm;       // sup_k ||A_k||; equals the R-bound when p = 2
  bool exhaustive;       // all sign patterns enumerated
};

RBoundEstimate estimate_r_bound(const std::vector<ModelOperator>& family,
                                const RademacherTrialSpec& spec,
                                const VectorNormSpec& norm = {});

/// Log-substituted ray quadrature for the fractional-power integrals.
struct RayQuadrature {
  int M = 400;
  double s_min = 1e-8;
  double s_max = 1e8;
};

/// A^{-theta} = (sin(pi theta)/pi) int_0^inf s^{-theta} (A+s)^{-1} ds,
/// trapezoid in log s with analytic corrections for both truncated tails;
/// nodes are doubled until the result is stable to 1e-6 relative.
ModelOperator balakrishnan_power(const ModelOperator& A, double theta,
                                 const RayQuadrature& quad = {});

/// Q_A(z) = (sin(pi theta)/pi) int_0^inf s^{-theta}/(z-s) (A+s)^{-1} ds for
/// z off [0, inf); satisfies
/// (A+z)^{-1} A^{-theta} = (-z)^{-theta} (A+z)^{-1} + Q_A(z).
ModelOperator q_operator(const ModelOperator& A, Complex z, double theta,
                         const RayQuadrature& quad = {});

/// (1/(i pi)) pv-integral over the line Re(lambda)=a of (A+lambda)^{-1} u,
/// symmetric truncation at |Im| <= R, M trapezoid nodes. Recovers u with
/// error O(1/R) when the line and the half-plane right of it avoid the
/// spectrum of -A.
Vector pv_projection(const ModelOperator& A, double a, const Vector& u,
                     double R, int M);

}  // namespace opcontour
