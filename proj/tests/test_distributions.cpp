#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "trimode/distributions.hpp"
#include "trimode/errors.hpp"

using namespace trimode;

namespace {

double rel_err(double got, double want) { return std::fabs(got - want) / std::fabs(want); }

// Reference coefficient sets at the detector and photon levels.
GsnParams pe_params() { return GsnParams::make(87.765104, 92.861384, 90.371968, 13.3665); }
GsnParams ph_params() {
  const GsnParams pe = pe_params();
  return GsnParams::make(pe.b0 / 0.28, pe.b12 / 0.28, pe.d012 / 0.28, pe.modes);
}

// Ideal lossless state: k012 = -b0 = -b12, all mass on the diagonal.
GsnParams ideal_lossless() { return GsnParams::make(1.0, 1.0, std::sqrt(2.0), 1.0); }

GsnParams random_classical(std::mt19937_64& rng, double bmax = 5.0, double mmax = 4.0) {
  std::uniform_real_distribution<double> bs(0.3, bmax);
  std::uniform_real_distribution<double> ms(0.5, mmax);
  std::uniform_real_distribution<double> corr(0.05, 0.95);
  const double b0 = bs(rng), b12 = bs(rng);
  return GsnParams::make(b0, b12, std::sqrt(corr(rng) * b0 * b12), ms(rng));
}

struct GridMoments {
  double mean0 = 0, mean12 = 0, var_w0 = 0, var_w12 = 0, cov_w = 0;
};

GridMoments grid_moments(const JointPn& j) {
  const auto& grid = j.log_grid();
  double m0 = 0, m12 = 0, s00 = 0, s1212 = 0, s012 = 0;
  for (std::int64_t a = 0; a <= j.n0_max(); ++a) {
    for (std::int64_t b = 0; b <= j.n12_max(); ++b) {
      const double l = grid(a, b);
      if (!std::isfinite(l)) continue;
      const double p = std::exp(l);
      m0 += p * a;
      m12 += p * b;
      s00 += p * a * (a - 1.0);  // factorial moments give the intensity moments
      s1212 += p * b * (b - 1.0);
      s012 += p * a * b;
    }
  }
  GridMoments g;
  g.mean0 = m0;
  g.mean12 = m12;
  g.var_w0 = s00 - m0 * m0;
  g.var_w12 = s1212 - m12 * m12;
  g.cov_w = s012 - m0 * m12;
  return g;
}

}  // namespace

TEST_CASE("Mandel-Rice closed form and truncation bound") {
  // M = 1 is the Bose-Einstein (geometric) law
  for (int n = 0; n < 12; ++n) {
    const double want = std::pow(2.0, n) / std::pow(3.0, n + 1);
    CHECK(rel_err(std::exp(log_mandel_rice(n, 2.0, 1.0)), want) < 1e-12);
  }
  CHECK(log_mandel_rice(0, 0.0, 2.0) == 0.0);
  CHECK(std::isinf(log_mandel_rice(3, 0.0, 2.0)));

  const std::int64_t n = mandel_rice_truncation(2.0, 1.5, 1e-10);
  double tail = 1.0;
  for (std::int64_t k = 0; k <= n; ++k) tail -= std::exp(log_mandel_rice(k, 2.0, 1.5));
  CHECK(tail < 1e-10);
  CHECK(tail > -1e-12);
}

TEST_CASE("single surviving term at the origin") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const GsnParams g = random_classical(rng);
    const JointPn j(g);
    const double want = -g.modes * std::log1p(g.b0 + g.b12 + g.k012);
    CHECK(rel_err(j.log_prob(0, 0), want) < 1e-13);
  }
  // nonclassical side as well
  const GsnParams g = ph_params();
  const JointPn j(g, {.cell_budget = 0});
  CHECK(rel_err(j.log_prob(0, 0), -g.modes * std::log1p(g.b0 + g.b12 + g.k012)) < 1e-13);
}

TEST_CASE("ideal lossless state is diagonal Mandel-Rice") {
  const JointPn j(ideal_lossless());
  REQUIRE(j.dense());
  for (int n = 0; n < 15; ++n) {
    CHECK(rel_err(std::exp(j.log_prob(n, n)), std::pow(2.0, -(n + 1.0))) < 1e-12);
    if (n > 0) CHECK(std::exp(j.log_prob(n, n - 1)) == 0.0);
    CHECK(std::exp(j.log_prob(n, n + 2)) == 0.0);
  }
  // marginal equals the diagonal values
  const Eigen::ArrayXd m0 = marginal(j, 0);
  for (int n = 0; n < 10; ++n) {
    CHECK(rel_err(m0[n], std::pow(2.0, -(n + 1.0))) < 1e-12);
  }
}

TEST_CASE("normalization within the declared tail bound") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 12; ++i) {
    const GsnParams g = random_classical(rng);
    const JointPn j(g);
    const double sum = j.exp_sum();
    CHECK(sum <= 1.0 + 1e-9);
    CHECK(sum >= 1.0 - j.tail_mass_bound() - 1e-9);
    const auto& grid = j.log_grid();
    CHECK(grid.maxCoeff() <= 0.0);
  }
}

TEST_CASE("swapping the arms transposes the grid bit-exactly") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 6; ++i) {
    const GsnParams g = random_classical(rng);
    const GsnParams swapped = GsnParams::make(g.b12, g.b0, g.d012, g.modes);
    const JointPn a(g), b(swapped);
    REQUIRE(a.n0_max() == b.n12_max());
    for (std::int64_t n0 = 0; n0 <= std::min<std::int64_t>(a.n0_max(), 25); ++n0) {
      for (std::int64_t n12 = 0; n12 <= std::min<std::int64_t>(a.n12_max(), 25); ++n12) {
        CHECK(a.log_prob(n0, n12) == b.log_prob(n12, n0));
      }
    }
  }
}

TEST_CASE("independent arms factor into Mandel-Rice marginals") {
  const GsnParams g = GsnParams::make(2.0, 1.0, 0.0, 1.0);
  const JointPn j(g);
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 8; ++b) {
      const double want = log_mandel_rice(a, 2.0, 1.0) + log_mandel_rice(b, 1.0, 1.0);
      CHECK(rel_err(j.log_prob(a, b), want) < 1e-12);
    }
  }
  const Eigen::ArrayXd m = marginal(j, 0);
  for (int n = 0; n < 12; ++n) {
    CHECK(rel_err(m[n], std::exp(log_mandel_rice(n, 2.0, 1.0))) < 1e-8);
  }
}

TEST_CASE("flagged classical cells are rescued to full accuracy") {
  // heavy alternating cancellation (~44 nats) in the classical regime
  const GsnParams g = GsnParams::make(1.009, 3.359, std::sqrt(0.233), 1.633);
  const JointPn j(g, {.target_tail = 1e-12});
  CHECK(rel_err(j.log_prob(30, 30), -25.605938747664044372) < 1e-11);
  CHECK(rel_err(j.log_prob(25, 12), -19.518407923260297664) < 1e-11);
  const auto q = j.quality();
  CHECK(q.flagged_cells > 0);
  CHECK(q.rescued_cells > 0);
  CHECK(q.worst_cancellation_nats > 30.0);
}

TEST_CASE("windowed evaluation matches full summation at scale") {
  // deep rows exercise the pairing-index window; references are 40-digit sums
  const JointPn pe(pe_params(), {.cell_budget = 0});
  CHECK(rel_err(pe.log_prob(1100, 1163), -11.366919395359045430) < 1e-12);
  CHECK(rel_err(pe.log_prob(1250, 1100), -23.686700275644513387) < 1e-12);
  const JointPn ph(ph_params(), {.cell_budget = 0});
  CHECK(rel_err(ph.log_prob(3000, 3170), -13.057274784475192406) < 1e-12);
}

TEST_CASE("grid mode tracks the arm ratio near the diagonal") {
  const GsnParams g = pe_params();
  const JointPn j(g, {.cell_budget = 0});
  double best = -1e308;
  std::int64_t best_n0 = 0, best_n12 = 0;
  for (std::int64_t n0 = 950; n0 <= 1280; n0 += 2) {
    const auto seg = j.row_window(n0);
    for (Eigen::Index i = 0; i < seg.log_probs.size(); ++i) {
      if (seg.log_probs[i] > best) {
        best = seg.log_probs[i];
        best_n0 = n0;
        best_n12 = seg.n12_lo + i;
      }
    }
  }
  // highest cells hug the diagonal: the mode lies on the ridge
  // n12/n0 = b12/b0, a few percent above 1 for these arms
  const double ratio = static_cast<double>(best_n12) / static_cast<double>(best_n0);
  CHECK(std::fabs(ratio - g.b12 / g.b0) < 0.01);
  CHECK(std::llabs(best_n12 - best_n0) < 0.08 * best_n0);
}

TEST_CASE("marginal of the detector-level grid has mean M b0") {
  const GsnParams g = pe_params();
  const JointPn j(g, {.cell_budget = 0});
  const Eigen::ArrayXd m = marginal(j, 0);
  double mean = 0.0;
  for (Eigen::Index n = 0; n < m.size(); ++n) mean += m[n] * static_cast<double>(n);
  CHECK(std::fabs(mean - g.modes * g.b0) < 0.5);
}

TEST_CASE("grid moments reproduce the closed-form intensity moments") {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 8; ++i) {
    const GsnParams g = random_classical(rng, 4.0, 3.0);
    const JointPn j(g, {.target_tail = 1e-13});
    const GridMoments m = grid_moments(j);
    CHECK(rel_err(m.mean0, g.modes * g.b0) < 1e-6);
    CHECK(rel_err(m.var_w0, g.modes * g.b0 * g.b0) < 1e-6);
    CHECK(rel_err(m.cov_w, g.modes * g.d012 * g.d012) < 1e-6);
  }
}

TEST_CASE("difference variance identity re-derived from the grid") {
  std::mt19937_64 rng(56);
  for (int i = 0; i < 6; ++i) {
    const GsnParams g = random_classical(rng, 4.0, 3.0);
    const JointPn j(g, {.target_tail = 1e-13});
    const DifferencePn d = difference_distribution(j);
    const GridMoments m = grid_moments(j);
    const double lhs = d.variance;
    const double rhs = m.mean0 + m.mean12 + g.modes * (g.b0 - g.b12) * (g.b0 - g.b12) +
                       2.0 * g.modes * g.k012;
    CHECK(std::fabs(lhs - rhs) < 1e-6 * (std::fabs(rhs) + m.mean0 + m.mean12));
    CHECK(std::fabs(d.retained_mass - 1.0) < j.tail_mass_bound() + 1e-9);
  }
}

TEST_CASE("conditional on the ideal lossless state is a point mass") {
  const ConditionalPn c = conditional(ideal_lossless(), 5);
  CHECK(c.mean == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(c.variance == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.fano == 0.0);
  CHECK(fano_asymptote(ideal_lossless()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero-determinant conditional is negative binomial") {
  const double b0 = 2.0, b12 = 3.0, modes = 2.5;
  const GsnParams g = GsnParams::make(b0, b12, std::sqrt(b0 * b12), modes);
  const std::int64_t n0 = 7;
  const ConditionalPn c = conditional(g, n0);
  const double shape = static_cast<double>(n0) + modes;
  const double q = b12 / (1.0 + b0 + b12);
  // negative binomial with the effective shape n0 + M
  for (Eigen::Index i = 0; i < c.probs.size(); ++i) {
    const double k = static_cast<double>(c.n12_lo + i);
    const double want = std::exp(std::lgamma(k + shape) - std::lgamma(shape) -
                                 std::lgamma(k + 1.0) + k * std::log(q) +
                                 shape * std::log(1.0 - q));
    CHECK(std::fabs(c.probs[i] - want) < 1e-10);
  }
  CHECK(rel_err(c.mean, shape * q / (1.0 - q)) < 1e-9);
  CHECK(rel_err(c.fano, 1.0 / (1.0 - q)) < 1e-9);
  CHECK(rel_err(fano_closed(g, static_cast<double>(n0)), 1.0 / (1.0 - q)) < 1e-12);
}

TEST_CASE("closed-form Fano agrees with exact conditional sums") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 6; ++i) {
    const GsnParams g = random_classical(rng);
    JointPnOptions o;
    o.cell_budget = 0;
    const JointPn j(g, o);
    for (std::int64_t n0 : {1, 10, 100, 1000}) {
      const ConditionalPn c = conditional(j, n0);
      const double closed = fano_closed(g, static_cast<double>(n0));
      CHECK(rel_err(c.fano, closed) < 1e-6);
    }
  }
  // photon-level reference at a deep conditioning count
  const ConditionalPn c = conditional(ph_params(), 3000);
  CHECK(rel_err(c.fano, fano_closed(ph_params(), 3000.0)) < 1e-3);
}

TEST_CASE("conditional Fano boundary for the photon-level reference") {
  // The sub-Poissonian window opens between n0 = 4 and n0 = 5: F(4) > 1,
  // F(5) = 0.9971 < 1 by both routes (the nominal "n0 > 5" onset quoted for
  // this data set is loose at the boundary; the acceptance suite reports it
  // as measured).
  const GsnParams g = ph_params();
  const JointPn j(g, {.cell_budget = 0});
  CHECK(fano_closed(g, 4.0) > 1.0);
  CHECK(fano_closed(g, 5.0) < 1.0);
  CHECK(conditional(j, 4).fano > 1.0);
  const double f5 = conditional(j, 5).fano;
  CHECK(f5 < 1.0);
  CHECK(std::fabs(f5 - 0.997073) < 5e-4);
  for (std::int64_t n0 : {6, 10, 40, 200, 1000}) {
    CHECK(conditional(j, n0).fano < 1.0);
  }
}

TEST_CASE("detector-level reference stays super-Poissonian") {
  const GsnParams g = pe_params();
  const JointPn j(g, {.cell_budget = 0});
  for (std::int64_t n0 : {1, 2, 5, 20, 100, 500, 1000}) {
    CHECK(conditional(j, n0).fano > 1.0);
    CHECK(fano_closed(g, static_cast<double>(n0)) > 1.0);
  }
}

TEST_CASE("Fano factors settle onto the large-n0 asymptote") {
  for (const GsnParams& g : {pe_params(), ph_params()}) {
    const double f_inf = fano_asymptote(g);
    const double f100 = fano_closed(g, 100.0);
    const double f1000 = fano_closed(g, 1000.0);
    // convergence is ~1/n0; by 1000 the residue is a few tenths of a percent
    CHECK(std::fabs(f1000 - f_inf) < std::fabs(f100 - f_inf) / 8.0);
    CHECK(std::fabs(f1000 - f_inf) < 0.005 * f_inf);
    CHECK(rel_err(fano_closed(g, 1e7), f_inf) < 1e-5);
  }
}

TEST_CASE("difference distribution on reference and degenerate states") {
  const DifferencePn ideal = difference_distribution(JointPn(ideal_lossless()));
  CHECK(ideal.variance == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ideal.noise_reduction == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ideal.probs.size() == 1);
  CHECK(ideal.offset_lo == 0);

  // independent arms: the difference variance is the sum of the variances
  const GsnParams indep = GsnParams::make(1.5, 2.0, 0.0, 2.0);
  const JointPn j(indep, {.target_tail = 1e-13});
  const DifferencePn d = difference_distribution(j);
  const GridMoments m = grid_moments(j);
  const double var0 = m.var_w0 + m.mean0;
  const double var12 = m.var_w12 + m.mean12;
  CHECK(rel_err(d.variance, var0 + var12) < 1e-8);
}

TEST_CASE("photon-level noise reduction from the assembled difference law") {
  const DifferencePn d = difference_distribution(JointPn(ph_params(), {.cell_budget = 0}));
  CHECK(std::fabs(d.noise_reduction - 0.837) < 0.005);
}

TEST_CASE("degenerate and invalid inputs are reported") {
  // conditioning beyond the support of the ideal diagonal state
  const GsnParams zero = GsnParams::make(0.0, 0.0, 0.0, 1.0);
  CHECK_THROWS_AS(conditional(zero, 3), NumericError);
  // fictitious noise components must stay nonnegative
  CHECK_THROWS_AS(JointPn(GsnParams::make(1.0, 1.0, 2.0, 1.0)), NumericError);
  // closed-form guard
  CHECK_THROWS_AS(fano_closed(pe_params(), 0.0), std::domain_error);
}
