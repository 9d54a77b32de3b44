#include "trimode/dynamics.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "trimode/errors.hpp"

namespace trimode {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

Eigen::Matrix3cd drift_matrix(const CouplingConfig& config) {
  const auto g0 = config.gamma0;
  const auto g1 = config.gamma1;
  Eigen::Matrix3cd a;
  a << 0.0, 0.0, -kI * g0,
       0.0, 0.0, kI * std::conj(g1),
       kI * std::conj(g0), kI * g1, 0.0;
  return a;
}

BogoliubovMatrix evolve(const CouplingConfig& config) {
  if (config.t < 0.0 || config.modes <= 0.0) {
    throw std::domain_error("evolve: requires t >= 0 and modes > 0");
  }
  const Eigen::Matrix3cd a = config.t * drift_matrix(config);
  return a.exp();
}

TriModeGsn coefficients(const BogoliubovMatrix& u) {
  TriModeGsn tri;
  tri.b0 = std::norm(u(0, 1)) + std::norm(u(0, 2));
  tri.b1 = std::norm(u(1, 0));
  tri.b2 = std::norm(u(2, 0));
  // Vacuum expectations of the evolved operators: a_i(t) mixes the initial
  // (a0, a1^dag, a2^dag) with U's rows, so only <a0 a0^dag> = 1 survives.
  tri.d01 = u(0, 0) * std::conj(u(1, 0));
  tri.d02 = u(0, 0) * std::conj(u(2, 0));
  tri.d12bar = -u(1, 0) * std::conj(u(2, 0));
  return tri;
}

GsnParams GsnParams::make(double b0, double b12, double d012, double modes) {
  if (b0 < 0.0 || b12 < 0.0 || d012 < 0.0 || modes <= 0.0) {
    throw std::domain_error("GsnParams: requires b0, b12, d012 >= 0 and modes > 0");
  }
  GsnParams g;
  g.b0 = b0;
  g.b12 = b12;
  g.d012 = d012;
  g.modes = modes;
  g.k012 = b0 * b12 - d012 * d012;
  return g;
}

GsnParams compound(const TriModeGsn& tri, double modes) {
  const double b12 = tri.b1 + tri.b2 - 2.0 * tri.d12bar.real();
  if (b12 < -1e-9 * (1.0 + tri.b1 + tri.b2)) {
    throw NumericError("compound: negative compound mean noise; phase convention outside the real-gamma1 reduction");
  }
  const double d012 = std::abs(tri.d01 + tri.d02);
  return GsnParams::make(tri.b0, std::max(b12, 0.0), d012, modes);
}

IntensityCovariances intensity_covariances(const TriModeGsn& tri, double modes) {
  IntensityCovariances c;
  c.var_w0 = modes * tri.b0 * tri.b0;
  c.var_w1 = modes * tri.b1 * tri.b1;
  c.var_w2 = modes * tri.b2 * tri.b2;
  c.cov_w0_w1 = modes * std::norm(tri.d01);
  c.cov_w0_w2 = modes * std::norm(tri.d02);
  c.cov_w1_w2 = modes * std::norm(tri.d12bar);
  c.var_w12 = c.var_w1 + c.var_w2 + 2.0 * c.cov_w1_w2;
  c.cov_w0_w12 = modes * std::norm(tri.d01 + tri.d02);
  return c;
}

CompoundIntensityCovariances intensity_covariances(const GsnParams& g) {
  CompoundIntensityCovariances c;
  c.var_w0 = g.modes * g.b0 * g.b0;
  c.var_w12 = g.modes * g.b12 * g.b12;
  c.cov_w0_w12 = g.modes * g.d012 * g.d012;
  return c;
}

}  // namespace trimode
