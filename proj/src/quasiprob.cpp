#include "trimode/quasiprob.hpp"

#include <cmath>
#include <limits>

#include "trimode/errors.hpp"
#include "trimode/numerics.hpp"
#include "trimode/parallel.hpp"

namespace trimode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative width of the rejection band around k012s = 0, where both closed
// forms degenerate.
constexpr double kThresholdBand = 1e-6;

// log( I_nu(z) / (z/2)^nu ), finite and smooth through z = 0.
double log_bessel_i_over_power(double nu, double z) {
  if (z < 2.0 * std::sqrt(nu + 1.0)) {
    // series sum_k (z^2/4)^k / (k! (nu+1)...(nu+k))
    const double q = 0.25 * z * z;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 500; ++k) {
      term *= q / (k * (nu + k));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return -std::lgamma(nu + 1.0) + std::log(sum);
  }
  return std::log(bessel_i_scaled(nu, z)) + z - nu * std::log(0.5 * z);
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

OrderedParams OrderedParams::make(const GsnParams& g, double s) {
  if (!(s >= -1.0 && s <= 1.0)) {
    throw std::domain_error("ordering parameter s must lie in [-1, 1]");
  }
  OrderedParams p;
  p.base = g;
  p.s = s;
  p.b0s = g.b0 + 0.5 * (1.0 - s);
  p.b12s = g.b12 + 0.5 * (1.0 - s);
  p.k012s = p.b0s * p.b12s - g.d012 * g.d012;
  return p;
}

double s_threshold(const GsnParams& g) {
  const double sum = g.b0 + g.b12;
  return 1.0 + sum - std::sqrt(sum * sum - 4.0 * g.k012);
}

QuasiBranch quasi_branch(const OrderedParams& p) {
  const double band = kThresholdBand * p.b0s * p.b12s;
  if (std::fabs(p.k012s) <= band) {
    throw NumericError(
        "quasi_density: k012s lies inside the near-threshold rejection band; adjust s");
  }
  return p.k012s > 0.0 ? QuasiBranch::regular : QuasiBranch::generalized_approx;
}

double quasi_density(const OrderedParams& p, double w0, double w12) {
  if (w0 < 0.0 || w12 < 0.0) {
    throw std::domain_error("quasi_density: intensities must be nonnegative");
  }
  const double modes = p.base.modes;
  const double d2 = p.base.d012 * p.base.d012;
  if (quasi_branch(p) == QuasiBranch::regular) {
    const double ks = p.k012s;
    if (w0 == 0.0 || w12 == 0.0) {
      if (modes > 1.0) return 0.0;
      if (modes < 1.0) return std::numeric_limits<double>::infinity();
      return std::exp(-(p.b12s * w0 + p.b0s * w12) / ks) / ks;
    }
    const double z = 2.0 * std::sqrt(d2 * w0 * w12) / ks;
    const double logp = -std::lgamma(modes) - modes * std::log(ks) +
                        (modes - 1.0) * std::log(w0 * w12) -
                        (p.b12s * w0 + p.b0s * w12) / ks +
                        log_bessel_i_over_power(modes - 1.0, z);
    return std::exp(logp);
  }
  const double a = 1.0 / std::sqrt(-p.k012s);
  double log_mag;
  if (w0 == 0.0 || w12 == 0.0) {
    if (modes > 1.0) return 0.0;
    if (modes < 1.0) return std::numeric_limits<double>::infinity();
    log_mag = 0.0;
  } else {
    log_mag = 0.5 * (modes - 1.0) * std::log(w0 * w12);
  }
  log_mag += std::log(a) - std::log(M_PI) - std::lgamma(modes) -
             0.5 * modes * std::log(p.b0s * p.b12s) -
             0.5 * w0 / p.b0s - 0.5 * w12 / p.b12s;
  const double arg = a * (std::sqrt(p.b12s / p.b0s) * w0 - std::sqrt(p.b0s / p.b12s) * w12);
  return std::exp(log_mag) * sinc(arg);
}

QuasiAxes QuasiAxes::auto_range(const OrderedParams& p, int n_w0, int n_w12) {
  if (n_w0 < 2 || n_w12 < 2) throw std::domain_error("auto_range: need at least 2 points per axis");
  const double m = p.base.modes;
  QuasiAxes axes;
  axes.w0 = Eigen::ArrayXd::LinSpaced(n_w0, 0.0, m * p.b0s + 10.0 * std::sqrt(m) * p.b0s);
  axes.w12 = Eigen::ArrayXd::LinSpaced(n_w12, 0.0, m * p.b12s + 10.0 * std::sqrt(m) * p.b12s);
  return axes;
}

QuasiGrid quasi_grid(const GsnParams& g, double s, const QuasiAxes& axes) {
  if (axes.w0.size() == 0 || axes.w12.size() == 0) {
    throw std::domain_error("quasi_grid: empty axes");
  }
  if (axes.w0.minCoeff() < 0.0 || axes.w12.minCoeff() < 0.0) {
    throw std::domain_error("quasi_grid: axes must be nonnegative");
  }
  QuasiGrid q;
  q.ordered = OrderedParams::make(g, s);
  q.branch = quasi_branch(q.ordered);
  q.w0_axis = axes.w0;
  q.w12_axis = axes.w12;
  q.values.resize(axes.w0.size(), axes.w12.size());
  parallel_for_chunks(axes.w0.size(), 0, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < axes.w12.size(); ++j) {
        q.values(i, j) = quasi_density(q.ordered, axes.w0[i], axes.w12[j]);
      }
    }
  });
  return q;
}

RegularMoments regular_moments(const QuasiGrid& q, double quad_tol) {
  if (q.branch != QuasiBranch::regular) {
    throw NumericError("regular_moments: requires the regular (nonnegative) branch");
  }
  const Rectangle rect{q.w0_axis.minCoeff(), q.w0_axis.maxCoeff(),
                       q.w12_axis.minCoeff(), q.w12_axis.maxCoeff()};
  const OrderedParams p = q.ordered;
  RegularMoments out;
  out.normalization =
      quad2d([&](double x, double y) { return quasi_density(p, x, y); }, rect, quad_tol).value;
  out.mean_w0 =
      quad2d([&](double x, double y) { return x * quasi_density(p, x, y); }, rect,
             quad_tol * std::max(1.0, p.base.modes * p.b0s))
          .value /
      out.normalization;
  out.mean_w12 =
      quad2d([&](double x, double y) { return y * quasi_density(p, x, y); }, rect,
             quad_tol * std::max(1.0, p.base.modes * p.b12s))
          .value /
      out.normalization;
  return out;
}

JointPn mandel_transform(const GsnParams& g, std::int64_t n0_max, std::int64_t n12_max,
                         double quad_tol, int threads) {
  const OrderedParams normal = OrderedParams::make(g, 1.0);
  if (!(normal.k012s > kThresholdBand * normal.b0s * normal.b12s)) {
    throw NonclassicalParamsError(
        "mandel_transform: nonclassical regime (s=1 determinant not positive); "
        "no classical intensity mixture exists");
  }
  Eigen::ArrayXXd probs(n0_max + 1, n12_max + 1);
  parallel_for_chunks(n0_max + 1, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t n0 = begin; n0 < end; ++n0) {
      for (std::int64_t n12 = 0; n12 <= n12_max; ++n12) {
        // Counting kernels localize the integrand around (n0, n12).
        const double s0 = std::sqrt(static_cast<double>(n0) + 1.0);
        const double s12 = std::sqrt(static_cast<double>(n12) + 1.0);
        const Rectangle rect{std::max(0.0, n0 - 12.0 * s0 - 12.0), n0 + 12.0 * s0 + 12.0,
                             std::max(0.0, n12 - 12.0 * s12 - 12.0), n12 + 12.0 * s12 + 12.0};
        const double lg0 = std::lgamma(static_cast<double>(n0) + 1.0);
        const double lg12 = std::lgamma(static_cast<double>(n12) + 1.0);
        auto f = [&](double w0, double w12) {
          if (w0 <= 0.0 || w12 <= 0.0) return 0.0;
          const double lp = -w0 + n0 * std::log(w0) - lg0 - w12 + n12 * std::log(w12) - lg12;
          return quasi_density(normal, w0, w12) * std::exp(lp);
        };
        probs(n0, n12) = quad2d(f, rect, quad_tol, 100000).value;
      }
    }
  });
  return JointPn::from_grid(g, probs, 0.0);
}

}  // namespace trimode
