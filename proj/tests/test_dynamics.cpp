#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>

#include "trimode/dynamics.hpp"
#include "trimode/errors.hpp"

using namespace trimode;

namespace {

// Fixed-step RK4 integration of dU/dt = A U from the identity; independent
// of the matrix-exponential route.
Eigen::Matrix3cd integrate_ode(const Eigen::Matrix3cd& a, double t, int steps) {
  Eigen::Matrix3cd u = Eigen::Matrix3cd::Identity();
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Matrix3cd k1 = a * u;
    const Eigen::Matrix3cd k2 = a * (u + 0.5 * h * k1);
    const Eigen::Matrix3cd k3 = a * (u + 0.5 * h * k2);
    const Eigen::Matrix3cd k4 = a * (u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

void check_row_norms(const BogoliubovMatrix& u) {
  // signed quadratic forms conserved by the transform: the annihilation row
  // weighs creation entries negatively, the creation rows conversely
  CHECK(std::fabs(std::norm(u(0, 0)) - std::norm(u(0, 1)) - std::norm(u(0, 2)) - 1.0) < 1e-10);
  CHECK(std::fabs(std::norm(u(1, 1)) + std::norm(u(1, 2)) - std::norm(u(1, 0)) - 1.0) < 1e-10);
  CHECK(std::fabs(std::norm(u(2, 2)) + std::norm(u(2, 1)) - std::norm(u(2, 0)) - 1.0) < 1e-10);
}

}  // namespace

TEST_CASE("zero time evolves to the identity") {
  const BogoliubovMatrix u = evolve({{1.0, 0.3}, {0.5, -0.2}, 0.0, 1.0});
  CHECK((u - Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("decoupled down-conversion gives the two-mode squeezer") {
  const double g0 = 0.8, t = 1.3;
  const BogoliubovMatrix u = evolve({{g0, 0.0}, {0.0, 0.0}, t, 1.0});
  CHECK(std::abs(u(0, 0)) == doctest::Approx(std::cosh(g0 * t)).epsilon(1e-12));
  CHECK(std::abs(u(0, 2)) == doctest::Approx(std::sinh(g0 * t)).epsilon(1e-12));
  CHECK(std::abs(u(0, 1)) < 1e-14);
  const TriModeGsn tri = coefficients(u);
  CHECK(tri.b1 == doctest::Approx(0.0).epsilon(1e-14));
  const double sh = std::sinh(g0 * t);
  const double ch = std::cosh(g0 * t);
  CHECK(tri.b0 == doctest::Approx(sh * sh).epsilon(1e-12));
  CHECK(tri.b2 == doctest::Approx(sh * sh).epsilon(1e-12));
  CHECK(std::abs(tri.d02) == doctest::Approx(ch * sh).epsilon(1e-12));
  CHECK(std::abs(tri.d01) < 1e-14);
  CHECK(std::abs(tri.d12bar) < 1e-14);

  // compound reduction collapses to the two-mode case
  const GsnParams g = compound(tri, 1.0);
  CHECK(g.b12 == doctest::Approx(tri.b2).epsilon(1e-12));
  CHECK(g.d012 == doctest::Approx(std::abs(tri.d02)).epsilon(1e-12));
  CHECK(g.k012 == doctest::Approx(-tri.b2).epsilon(1e-9));
}

TEST_CASE("matrix exponential agrees with an independent ODE integration") {
  const CouplingConfig cfg{{1.0, 0.0}, {0.7, 0.0}, 1.3, 1.0};
  const BogoliubovMatrix u = evolve(cfg);
  const Eigen::Matrix3cd ref = integrate_ode(drift_matrix(cfg), cfg.t, 20000);
  CHECK((u - ref).cwiseAbs().maxCoeff() < 1e-9);
  check_row_norms(u);
}

TEST_CASE("vacuum stays vacuum under the identity transform") {
  const TriModeGsn tri = coefficients(Eigen::Matrix3cd::Identity());
  CHECK(tri.b0 == 0.0);
  CHECK(tri.b1 == 0.0);
  CHECK(tri.b2 == 0.0);
  CHECK(std::abs(tri.d01) == 0.0);
  CHECK(std::abs(tri.d02) == 0.0);
  CHECK(std::abs(tri.d12bar) == 0.0);
  const GsnParams g = compound(tri, 2.0);
  CHECK(g.k012 == 0.0);
}

TEST_CASE("determinant identities and photon-number conservation hold") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(0.1, 1.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> ts(0.05, 2.0);
  for (int i = 0; i < 100; ++i) {
    const std::complex<double> g0 = std::polar(mag(rng), phase(rng));
    const std::complex<double> g1 = std::polar(mag(rng), phase(rng));
    const double t = ts(rng);
    const BogoliubovMatrix u = evolve({g0, g1, t, 1.0});
    check_row_norms(u);
    const TriModeGsn tri = coefficients(u);
    const double scale = 1.0 + tri.b0;
    CHECK(std::fabs(tri.b1 * tri.b2 - std::norm(tri.d12bar)) < 1e-10 * scale * scale);
    CHECK(std::fabs(tri.b0 * tri.b1 - std::norm(tri.d01) + tri.b1) < 1e-9 * scale * scale);
    CHECK(std::fabs(tri.b0 * tri.b2 - std::norm(tri.d02) + tri.b2) < 1e-9 * scale * scale);
    CHECK(std::fabs(tri.b0 - tri.b1 - tri.b2) < 1e-9 * scale);
  }
}

TEST_CASE("evolution composes as a semigroup") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> mag(0.1, 1.2);
  std::uniform_real_distribution<double> ts(0.05, 1.0);
  for (int i = 0; i < 30; ++i) {
    const CouplingConfig base{{mag(rng), 0.1 * mag(rng)}, {mag(rng), 0.0}, 0.0, 1.0};
    const double t1 = ts(rng), t2 = ts(rng);
    CouplingConfig c1 = base, c2 = base, c12 = base;
    c1.t = t1;
    c2.t = t2;
    c12.t = t1 + t2;
    const Eigen::Matrix3cd lhs = evolve(c12);
    const Eigen::Matrix3cd rhs = evolve(c2) * evolve(c1);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9 * lhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("real couplings always give a negative compound determinant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(0.05, 1.5);
  std::uniform_real_distribution<double> ts(0.05, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double g0 = mag(rng), g1 = mag(rng), t = ts(rng);
    const TriModeGsn tri = coefficients(evolve({{g0, 0.0}, {g1, 0.0}, t, 1.0}));
    const GsnParams g = compound(tri, 1.0);
    CHECK(g.k012 < 0.0);
    CHECK(std::fabs(g.k012 + tri.b1 + tri.b2) < 1e-9 * (1.0 + tri.b1 + tri.b2));
  }
}

TEST_CASE("intensity covariances from the coefficients") {
  const TriModeGsn zero{};
  const IntensityCovariances z = intensity_covariances(zero, 3.0);
  CHECK(z.var_w0 == 0.0);
  CHECK(z.var_w12 == 0.0);
  CHECK(z.cov_w0_w12 == 0.0);

  // reference parameter set: closed forms M B^2 and M d^2
  const GsnParams g = GsnParams::make(87.765104, 92.861384, 90.371968, 13.3665);
  const CompoundIntensityCovariances c = intensity_covariances(g);
  CHECK(c.var_w0 == doctest::Approx(13.3665 * 87.765104 * 87.765104).epsilon(1e-14));
  CHECK(c.var_w12 == doctest::Approx(13.3665 * 92.861384 * 92.861384).epsilon(1e-14));
  CHECK(c.cov_w0_w12 == doctest::Approx(13.3665 * 90.371968 * 90.371968).epsilon(1e-14));

  // with a real amplification coupling, var W12 = M (b1 + b2)^2
  const TriModeGsn tri = coefficients(evolve({{1.0, 0.0}, {0.7, 0.0}, 1.3, 1.0}));
  const IntensityCovariances w = intensity_covariances(tri, 4.0);
  const double b12sum = tri.b1 + tri.b2;
  CHECK(w.var_w12 == doctest::Approx(4.0 * b12sum * b12sum).epsilon(1e-9));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(evolve({{1.0, 0.0}, {0.5, 0.0}, -1.0, 1.0}), std::domain_error);
  CHECK_THROWS_AS(GsnParams::make(-1.0, 1.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(GsnParams::make(1.0, 1.0, 0.0, 0.0), std::domain_error);
}
