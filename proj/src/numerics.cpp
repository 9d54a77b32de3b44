#include "trimode/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "trimode/errors.hpp"

namespace trimode {

namespace {

constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();

void neumaier_add(long double& sum, long double& comp, long double term) {
  const long double t = sum + term;
  if (std::fabs(sum) >= std::fabs(term)) {
    comp += (sum - t) + term;
  } else {
    comp += (term - t) + sum;
  }
  sum = t;
}

}  // namespace

SignedLogValue SignedLogValue::from_value(double x) {
  if (x == 0.0) return {};
  return {std::log(std::fabs(static_cast<long double>(x))), x > 0.0 ? 1 : -1};
}

SignedLogValue SignedLogValue::from_log(long double log_magnitude, int sign) {
  if (sign == 0) return {};
  return {log_magnitude, sign > 0 ? 1 : -1};
}

double SignedLogValue::value() const {
  if (sign == 0) return 0.0;
  return static_cast<double>(sign * std::exp(log_magnitude));
}

void SignedLogAccumulator::add(long double log_magnitude, int sign) {
  ++count_;
  if (sign == 0 || log_magnitude == kNegInf) return;
  if (log_magnitude > peak_) {
    const long double rescale = (peak_ == kNegInf) ? 0.0L : std::exp(peak_ - log_magnitude);
    pos_ *= rescale;
    pos_comp_ *= rescale;
    neg_ *= rescale;
    neg_comp_ *= rescale;
    peak_ = log_magnitude;
  }
  const long double term = std::exp(log_magnitude - peak_);
  if (sign > 0) {
    neumaier_add(pos_, pos_comp_, term);
  } else {
    neumaier_add(neg_, neg_comp_, term);
  }
}

SignedLogValue SignedLogAccumulator::total() const {
  if (peak_ == kNegInf) return {};
  const long double net = (pos_ + pos_comp_) - (neg_ + neg_comp_);
  if (net == 0.0L) return {};
  return {peak_ + std::log(std::fabs(net)), net > 0.0L ? 1 : -1};
}

double SignedLogAccumulator::cancellation_nats() const {
  if (peak_ == kNegInf) return 0.0;
  const long double net = (pos_ + pos_comp_) - (neg_ + neg_comp_);
  if (net == 0.0L) return std::numeric_limits<double>::infinity();
  // Largest rescaled term is exactly 1.
  return static_cast<double>(-std::log(std::fabs(net)));
}

SignedLogSum signed_log_sum(std::span<const SignedLogValue> terms,
                            double flag_threshold_nats) {
  SignedLogAccumulator acc;
  for (const auto& t : terms) acc.add(t);
  SignedLogSum out;
  out.total = acc.total();
  out.cancellation_nats = acc.cancellation_nats();
  out.flagged = out.cancellation_nats > flag_threshold_nats;
  return out;
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
  return std::lgamma(x);
}

namespace detail {

// Power series for e^{-x} I_nu(x); all terms positive, accumulated with a
// streaming peak rescale so x in the hundreds cannot overflow.
double bessel_i_scaled_series(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double lx2 = std::log(0.5 * x);
  double peak = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (long k = 0; k < 200000; ++k) {
    const double l = (nu + 2.0 * k) * lx2 - std::lgamma(static_cast<double>(k) + 1.0) -
                     std::lgamma(nu + static_cast<double>(k) + 1.0);
    if (l > peak) {
      acc = acc * std::exp(peak - l) + 1.0;
      peak = l;
    } else {
      const double t = std::exp(l - peak);
      acc += t;
      if (t < 1e-18 * acc && k > x / 2.0) break;
    }
  }
  return std::exp(peak + std::log(acc) - x);
}

// Hankel expansion of e^{-x} I_nu(x) for large x, including the reflection
// term -sin(nu pi) e^{-2x} S2 that matters for fractional orders.
double bessel_i_scaled_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double s1 = 1.0, s2 = 1.0;
  double term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double f = (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * x * k);
    term *= f;
    if (std::fabs(term) > prev) break;  // asymptotic series started diverging
    prev = std::fabs(term);
    s1 += (k % 2 == 0) ? term : -term;
    s2 += term;
    if (std::fabs(term) < 1e-19 * std::fabs(s1)) break;
  }
  const double reflection = -std::sin(nu * M_PI) * std::exp(-2.0 * x) * s2;
  return (s1 + reflection) / std::sqrt(2.0 * M_PI * x);
}

}  // namespace detail

double bessel_i_scaled(double nu, double x) {
  if (nu < 0.0 || x < 0.0 || std::isnan(nu) || std::isnan(x)) {
    throw std::domain_error("bessel_i_scaled: requires nu >= 0 and x >= 0");
  }
  if (x < 0.5 * nu * nu + 36.0) return detail::bessel_i_scaled_series(nu, x);
  return detail::bessel_i_scaled_asymptotic(nu, x);
}

namespace detail {
namespace {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1].
constexpr int kHalf = 8;
constexpr double kNodes[kHalf] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWeights[kHalf] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
// Embedded 7-point Gauss weights, aligned with the odd Kronrod nodes.
constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Cell {
  Rectangle r;
  double value;
  double error;
  bool operator<(const Cell& o) const { return error < o.error; }
};

Cell evaluate_cell(const std::function<double(double, double)>& f, Rectangle r) {
  double xs[15], ys[15], wxk[15], wyk[15];
  const double cx = 0.5 * (r.x0 + r.x1), hx = 0.5 * (r.x1 - r.x0);
  const double cy = 0.5 * (r.y0 + r.y1), hy = 0.5 * (r.y1 - r.y0);
  for (int i = 0; i < kHalf; ++i) {
    xs[i] = cx - hx * kNodes[i];
    xs[14 - i] = cx + hx * kNodes[i];
    ys[i] = cy - hy * kNodes[i];
    ys[14 - i] = cy + hy * kNodes[i];
    wxk[i] = wxk[14 - i] = kWeights[i];
    wyk[i] = wyk[14 - i] = kWeights[i];
  }
  double wxg[15] = {0}, wyg[15] = {0};
  for (int i = 0; i < 4; ++i) {
    const int j = 2 * i + 1;  // odd Kronrod indices are the Gauss nodes
    wxg[j] = wxg[14 - j] = kGaussWeights[i];
    wyg[j] = wyg[14 - j] = kGaussWeights[i];
  }
  double kronrod = 0.0, gauss = 0.0;
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      const double v = f(xs[i], ys[j]);
      kronrod += wxk[i] * wyk[j] * v;
      gauss += wxg[i] * wyg[j] * v;
    }
  }
  kronrod *= hx * hy;
  gauss *= hx * hy;
  const double err = std::fabs(kronrod - gauss);
  return {r, kronrod, err};
}

}  // namespace

QuadResult quad2d_impl(const std::function<double(double, double)>& f,
                       Rectangle rect, double abs_tol, long max_cells) {
  if (!(abs_tol > 0.0)) throw std::domain_error("quad2d: abs_tol must be positive");
  if (rect.x1 <= rect.x0 || rect.y1 <= rect.y0) {
    throw std::domain_error("quad2d: empty rectangle");
  }
  std::priority_queue<Cell> heap;
  heap.push(evaluate_cell(f, rect));
  long cells = 1;
  double total_err = heap.top().error;
  double total_val = heap.top().value;
  while (total_err > abs_tol) {
    if (cells >= max_cells) {
      throw NumericError("quad2d: did not converge to abs_tol within max_cells refinements");
    }
    Cell worst = heap.top();
    heap.pop();
    total_err -= worst.error;
    total_val -= worst.value;
    const Rectangle& r = worst.r;
    Rectangle a = r, b = r;
    if (r.x1 - r.x0 >= r.y1 - r.y0) {
      const double mid = 0.5 * (r.x0 + r.x1);
      a.x1 = mid;
      b.x0 = mid;
    } else {
      const double mid = 0.5 * (r.y0 + r.y1);
      a.y1 = mid;
      b.y0 = mid;
    }
    for (const Rectangle& sub : {a, b}) {
      Cell c = evaluate_cell(f, sub);
      total_err += c.error;
      total_val += c.value;
      heap.push(c);
    }
    ++cells;
  }
  return {total_val, total_err, cells};
}

}  // namespace detail

}  // namespace trimode
