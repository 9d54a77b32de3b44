#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "trimode/errors.hpp"
#include "trimode/numerics.hpp"
#include "trimode/quasiprob.hpp"

using namespace trimode;

namespace {
double rel_err(double got, double want) {
  return std::fabs(got - want) / std::fabs(want);
}
}  // namespace

TEST_CASE("signed log value round trip across the exponent range") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(-300.0, 300.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = (i % 2 ? 1.0 : -1.0) * std::pow(10.0, mag(rng));
    const SignedLogValue v = SignedLogValue::from_value(x);
    const double back = v.value();
    CHECK(back == doctest::Approx(x).epsilon(3e-16));
  }
  CHECK(SignedLogValue::from_value(0.0).sign == 0);
  CHECK(SignedLogValue::from_value(0.0).value() == 0.0);
  CHECK(std::isinf(SignedLogValue::from_value(0.0).log_magnitude));
}

TEST_CASE("signed log sum handles exact cancellation and identity") {
  const std::vector<SignedLogValue> cancel{SignedLogValue::from_log(1.0L, 1),
                                           SignedLogValue::from_log(1.0L, -1)};
  const SignedLogSum z = signed_log_sum(cancel);
  CHECK(z.total.sign == 0);
  CHECK(z.flagged);
  CHECK(std::isinf(z.cancellation_nats));

  const std::vector<SignedLogValue> one{SignedLogValue::from_log(0.0L, 1)};
  const SignedLogSum s = signed_log_sum(one);
  CHECK(s.total.sign == 1);
  CHECK(s.total.value() == doctest::Approx(1.0));
  CHECK_FALSE(s.flagged);

  CHECK(signed_log_sum({}).total.sign == 0);
}

TEST_CASE("signed log sum matches an extended-precision linear-space oracle") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  std::bernoulli_distribution coin;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SignedLogValue> terms;
    long double reference = 0.0L, comp = 0.0L;
    for (int i = 0; i < 1000; ++i) {
      const long double l = mag(rng);
      const int s = coin(rng) ? 1 : -1;
      terms.push_back(SignedLogValue::from_log(l, s));
      const long double v = s * std::exp(l);
      const long double t = reference + v;
      comp += std::fabs(reference) >= std::fabs(v) ? (reference - t) + v : (v - t) + reference;
      reference = t;
    }
    reference += comp;
    const SignedLogSum sum = signed_log_sum(terms);
    if (!sum.flagged) {
      CHECK(rel_err(sum.total.value(), static_cast<double>(reference)) < 1e-9);
    }
  }
}

TEST_CASE("signed log sum is permutation invariant when unflagged") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> mag(-20.0, 20.0);
  std::bernoulli_distribution coin;
  std::vector<SignedLogValue> terms;
  for (int i = 0; i < 300; ++i) {
    terms.push_back(SignedLogValue::from_log(mag(rng), coin(rng) ? 1 : -1));
  }
  const SignedLogSum a = signed_log_sum(terms);
  std::shuffle(terms.begin(), terms.end(), rng);
  const SignedLogSum b = signed_log_sum(terms);
  REQUIRE_FALSE(a.flagged);
  CHECK(rel_err(a.total.value(), b.total.value()) < 1e-12);
}

TEST_CASE("log_gamma values and domain") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(2.0) == 0.0);
  // ln Gamma(1/2) = ln sqrt(pi)
  CHECK(rel_err(log_gamma(0.5), 0.57236494292470008707) < 1e-14);
  // 50-digit evaluations, frozen
  CHECK(rel_err(log_gamma(13.3665), 20.91831002569481694) < 1e-13);
  CHECK(rel_err(log_gamma(1e-3), 6.9071788853838536825) < 1e-13);
  CHECK(rel_err(log_gamma(1e6), 12815504.569147611660) < 1e-13);
  CHECK(rel_err(log_gamma(4375.654), 32305.730385350864792) < 1e-13);
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-3.2), std::domain_error);
}

TEST_CASE("log_gamma satisfies the recurrence") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> xs(0.1, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = xs(rng);
    const double resid = log_gamma(x + 1.0) - log_gamma(x) - std::log(x);
    CHECK(std::fabs(resid) < 1e-12 * std::max(1.0, std::fabs(log_gamma(x + 1.0))));
  }
}

TEST_CASE("scaled Bessel values against frozen references") {
  CHECK(bessel_i_scaled(0.0, 0.0) == 1.0);
  CHECK(bessel_i_scaled(2.0, 0.0) == 0.0);
  // half-integer closed form I_{1/2}(x) = sqrt(2/(pi x)) sinh x
  const double x = 1.0;
  const double closed = std::sqrt(2.0 / (M_PI * x)) * std::sinh(x) * std::exp(-x);
  CHECK(rel_err(bessel_i_scaled(0.5, 1.0), closed) < 1e-12);
  // 50-digit evaluations, frozen
  CHECK(rel_err(bessel_i_scaled(0.5, 1.0), 0.34495131388824462599) < 1e-12);
  CHECK(rel_err(bessel_i_scaled(12.3665, 500.0), 0.015312771267604684643) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(12.3665, 80.0), 0.017106654498677902355) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(0.0, 10.0), 0.12783333716342860732) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(30.5, 460.0), 0.0067639358116498164409) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(2.5, 1e5), 0.0012615284144007196) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(12.3665, 1e5), 0.0012606035419987092) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(49.5, 1235.125), 0.0042092384383010723) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(3.25, 0.75), 0.0024316936124267146) < 1e-11);
  CHECK(rel_err(bessel_i_scaled(20.0, 1.0), 1.4593174056818685961e-25) < 1e-11);
  CHECK_THROWS_AS(bessel_i_scaled(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i_scaled(1.0, -1.0), std::domain_error);
}

TEST_CASE("scaled Bessel is monotone decreasing in the order") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> nus(0.0, 50.0);
  std::uniform_real_distribution<double> xs(0.0, 2000.0);
  for (int i = 0; i < 400; ++i) {
    double a = nus(rng), b = nus(rng);
    if (a > b) std::swap(a, b);  // a <= b
    const double xv = xs(rng);
    CHECK(bessel_i_scaled(b, xv) <= bessel_i_scaled(a, xv) * (1.0 + 1e-12));
    CHECK(bessel_i_scaled(b, xv) >= 0.0);
  }
}

TEST_CASE("Bessel branches agree across the validation band") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> nus(0.0, 50.0);
  std::uniform_real_distribution<double> off(0.0, 5.0);
  for (int i = 0; i < 300; ++i) {
    const double nu = nus(rng);
    const double xv = 0.5 * nu * nu + 36.0 + off(rng);
    const double series = detail::bessel_i_scaled_series(nu, xv);
    const double asym = detail::bessel_i_scaled_asymptotic(nu, xv);
    CHECK(rel_err(series, asym) < 1e-9);
  }
}

TEST_CASE("quad2d on closed-form integrals") {
  const auto expo = quad2d([](double x, double y) { return std::exp(-x - y); },
                           {0.0, 40.0, 0.0, 40.0}, 1e-9);
  CHECK(std::fabs(expo.value - 1.0) < 1e-8);
  CHECK(expo.error_bound <= 1e-9);

  const auto flat = quad2d([](double, double) { return 1.0; }, {0.0, 2.0, 0.0, 3.0}, 1e-10);
  CHECK(flat.value == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("quad2d normalizes a correlated intensity density") {
  // proper probability density of the correlated two-arm intensity model
  const GsnParams g = GsnParams::make(1.0, 1.5, 1.0, 2.0);
  const OrderedParams p = OrderedParams::make(g, 0.0);
  const auto norm = quad2d([&](double w0, double w12) { return quasi_density(p, w0, w12); },
                           {0.0, 90.0, 0.0, 90.0}, 1e-7, 200000);
  CHECK(std::fabs(norm.value - 1.0) < 1e-6);
}

TEST_CASE("quad2d reports non-convergence") {
  CHECK_THROWS_AS(quad2d([](double x, double y) { return std::exp(-x - y); },
                         {0.0, 40.0, 0.0, 40.0}, 1e-13, 3),
                  NumericError);
}
