#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "trimode/distributions.hpp"
#include "trimode/dynamics.hpp"

namespace trimode {

/// Ordering parameter s maps coefficients to B_is = B_i + (1-s)/2; the sign
/// of the s-ordered determinant selects the branch of the intensity
/// quasi-distribution.
struct OrderedParams {
  GsnParams base;
  double s = 1.0;
  double b0s = 0.0, b12s = 0.0, k012s = 0.0;

  static OrderedParams make(const GsnParams& g, double s);
};

/// Ordering threshold where the s-ordered determinant vanishes.  Values are
/// reported raw; callers must treat results outside [-1, 1] as "no threshold
/// within the ordering range" (no silent clamping).
double s_threshold(const GsnParams& g);

enum class QuasiBranch { regular, generalized_approx };

/// Pointwise s-ordered quasi-distribution of integrated intensities.
/// Regular branch (k012s > 0): nonnegative Bessel form.  Generalized branch
/// (k012s < 0): oscillating sinc approximation that may go negative.
/// Throws NumericError inside the near-threshold rejection band.
double quasi_density(const OrderedParams& p, double w0, double w12);

QuasiBranch quasi_branch(const OrderedParams& p);

struct QuasiAxes {
  Eigen::ArrayXd w0, w12;

  /// [0, M B_is + 10 sqrt(M) B_is] per arm, from the gamma-like marginal scale.
  static QuasiAxes auto_range(const OrderedParams& p, int n_w0, int n_w12);
};

struct QuasiGrid {
  OrderedParams ordered;
  Eigen::ArrayXd w0_axis, w12_axis;
  Eigen::ArrayXXd values;  // rows follow w0, columns follow w12
  QuasiBranch branch = QuasiBranch::regular;
};

QuasiGrid quasi_grid(const GsnParams& g, double s, const QuasiAxes& axes);

struct RegularMoments {
  double normalization = 0.0;
  double mean_w0 = 0.0;
  double mean_w12 = 0.0;
};

/// Quadrature moments of the regular-branch density over the grid's
/// rectangle; first moments must approach M * B_is.
RegularMoments regular_moments(const QuasiGrid& q, double quad_tol = 1e-6);

/// Joint count distribution obtained by Poisson-mixing the normally ordered
/// intensity quasi-distribution (classical regime only: the s=1 determinant
/// must be positive, otherwise NonclassicalParamsError).  Serves as the
/// independent quadrature oracle for the closed-form joint law.
JointPn mandel_transform(const GsnParams& g, std::int64_t n0_max, std::int64_t n12_max,
                         double quad_tol = 1e-9, int threads = 0);

}  // namespace trimode
