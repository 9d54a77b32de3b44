#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>

namespace trimode {

/// A real number carried as (sign, ln|x|).  The log magnitude is kept in
/// extended precision so that encode/decode round-trips doubles across the
/// full exponent range.
struct SignedLogValue {
  long double log_magnitude = -std::numeric_limits<long double>::infinity();
  int sign = 0;  // -1, 0, +1

  static SignedLogValue from_value(double x);
  static SignedLogValue from_log(long double log_magnitude, int sign);
  double value() const;
};

/// Streaming signed sum of log-magnitude terms.  Terms are rescaled against
/// the running peak, so arbitrarily large exponents never overflow.  The
/// cancellation indicator log(max|term|) - log|sum| measures how many nats
/// were lost to alternating signs.
class SignedLogAccumulator {
 public:
  void add(long double log_magnitude, int sign);
  void add(const SignedLogValue& v) { add(v.log_magnitude, v.sign); }
  SignedLogValue total() const;
  double cancellation_nats() const;
  std::size_t size() const { return count_; }

 private:
  long double peak_ = -std::numeric_limits<long double>::infinity();
  long double pos_ = 0.0L, pos_comp_ = 0.0L;  // Neumaier sums of exp(l - peak)
  long double neg_ = 0.0L, neg_comp_ = 0.0L;
  std::size_t count_ = 0;
};

inline constexpr double kCancellationFlagNats = 30.0;

struct SignedLogSum {
  SignedLogValue total;
  double cancellation_nats = 0.0;
  bool flagged = false;  // cancellation beyond the threshold; quality warning
};

SignedLogSum signed_log_sum(std::span<const SignedLogValue> terms,
                            double flag_threshold_nats = kCancellationFlagNats);

/// ln Gamma(x) for x > 0.  Throws std::domain_error otherwise.
double log_gamma(double x);

/// Exponentially scaled modified Bessel function e^{-x} I_nu(x) for
/// nu >= 0, x >= 0, fractional orders included.  Power series below
/// x = nu^2/2 + 36, Hankel asymptotic expansion (with its reflection term)
/// above.  Throws std::domain_error on negative input.
double bessel_i_scaled(double nu, double x);

struct Rectangle {
  double x0, x1, y0, y1;
};

struct QuadResult {
  double value = 0.0;
  double error_bound = 0.0;
  long cells = 0;
};

namespace detail {
QuadResult quad2d_impl(const std::function<double(double, double)>& f,
                       Rectangle rect, double abs_tol, long max_cells);
// Both Bessel evaluation strategies, exposed for cross-validation at the
// branch boundary.
double bessel_i_scaled_series(double nu, double x);
double bessel_i_scaled_asymptotic(double nu, double x);
}

/// Globally adaptive 2-D quadrature of f over a rectangle with a tensor
/// Gauss-Kronrod 15(7) rule per cell.  Refines the worst cell until the
/// summed error estimate drops below abs_tol; throws NumericError when
/// max_cells subdivisions do not reach the tolerance.
template <class F>
QuadResult quad2d(F&& f, Rectangle rect, double abs_tol, long max_cells = 40000) {
  return detail::quad2d_impl(std::function<double(double, double)>(std::forward<F>(f)),
                             rect, abs_tol, max_cells);
}

}  // namespace trimode
