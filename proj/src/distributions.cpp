#include "trimode/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include "trimode/errors.hpp"
#include "trimode/numerics.hpp"
#include "trimode/parallel.hpp"

namespace trimode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kWindowDropNats = 60.0;   // row/term windows keep everything within e^-60 of the peak
constexpr double kRescueNats = 10.0;       // alternating sums lose digits fast; reroute early
constexpr std::int64_t kFullSumLimit = 512;

double logsumexp(const Eigen::ArrayXd& l) {
  if (l.size() == 0) return kNegInf;
  const double mx = l.maxCoeff();
  if (mx == kNegInf) return kNegInf;
  return mx + std::log((l - mx).exp().sum());
}

}  // namespace

double log_mandel_rice(std::int64_t n, double b, double modes) {
  if (n < 0) return kNegInf;
  if (b <= 0.0) return n == 0 ? 0.0 : kNegInf;
  const double nd = static_cast<double>(n);
  return std::lgamma(nd + modes) - std::lgamma(modes) - std::lgamma(nd + 1.0) +
         nd * std::log(b) - (nd + modes) * std::log1p(b);
}

namespace {

// Upper bound on the Mandel-Rice tail mass beyond n via the geometric
// envelope of the pmf ratio; infinity when the envelope is not yet < 1.
double mandel_rice_tail_bound(double b, double modes, std::int64_t n) {
  if (b <= 0.0) return 0.0;
  const double q = b / (1.0 + b);
  const double nd = static_cast<double>(n);
  const double shape = modes >= 1.0 ? (nd + 1.0 + modes) / (nd + 2.0) : 1.0;
  const double rho = q * shape;
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  return std::exp(log_mandel_rice(n + 1, b, modes)) / (1.0 - rho);
}

}  // namespace

std::int64_t mandel_rice_truncation(double b, double modes, double target_tail) {
  if (b <= 0.0) return 0;
  const double mean = modes * b;
  const double sd = std::sqrt(modes * b * (1.0 + b));
  std::int64_t n = static_cast<std::int64_t>(std::ceil(mean + 6.0 * sd)) + 8;
  while (mandel_rice_tail_bound(b, modes, n) > target_tail) {
    n = n + n / 4 + 8;
    if (n > (std::int64_t{1} << 40)) {
      throw NumericError("mandel_rice_truncation: tail target unreachable");
    }
  }
  return n;
}

namespace {

// Shared log-gamma tables: lgf[j] = lgamma(j+1), lgm[j] = lgamma(j+modes).
struct Tables {
  std::vector<double> lgf;
  std::vector<double> lgm;
  std::int64_t capacity = 0;

  Tables(double modes, std::int64_t cap) : capacity(cap) {
    lgf.resize(cap + 2);
    lgm.resize(cap + 2);
    for (std::int64_t j = 0; j <= cap + 1; ++j) {
      lgf[j] = std::lgamma(static_cast<double>(j) + 1.0);
      lgm[j] = std::lgamma(static_cast<double>(j) + modes);
    }
  }
};

struct CellResult {
  double log_p = kNegInf;
  double cancellation = 0.0;
  bool flagged = false;
  bool rescued = false;
};

}  // namespace

// Evaluates single cells of the joint law.  Immutable after construction
// apart from the grow-only table cache; safe to share across threads.
struct JointPnState {
  JointPnState(const GsnParams& g, double flag_nats, std::int64_t initial_capacity)
      : g_(g), flag_nats_(flag_nats) {
    const double scale = 1.0 + g.b0 + g.b12;
    b0k_ = g.b0 + g.k012;
    b12k_ = g.b12 + g.k012;
    if (b0k_ < -1e-9 * scale || b12k_ < -1e-9 * scale) {
      throw NumericError(
          "joint_pn: fictitious-noise components b0+k012 and b12+k012 must be nonnegative");
    }
    b0k_zero_ = b0k_ <= 1e-12 * scale;
    b12k_zero_ = b12k_ <= 1e-12 * scale;
    k_zero_ = std::fabs(g.k012) <= 1e-12 * std::max(g.b0 * g.b12, 1e-30);
    k_pos_ = !k_zero_ && g.k012 > 0.0;
    den_ = 1.0 + g.b0 + g.b12 + g.k012;
    log_den_ = std::log(den_);
    log_b0k_ = b0k_zero_ ? kNegInf : std::log(b0k_);
    log_b12k_ = b12k_zero_ ? kNegInf : std::log(b12k_);
    log_absk_ = k_zero_ ? kNegInf : std::log(std::fabs(g.k012));
    lg_modes_ = std::lgamma(g.modes);
    tables_ = std::make_shared<const Tables>(g.modes, std::max<std::int64_t>(initial_capacity, 64));
  }

  std::shared_ptr<const Tables> tables(std::int64_t needed_capacity) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (needed_capacity > tables_->capacity) {
      std::int64_t cap = tables_->capacity;
      while (cap < needed_capacity) cap = cap * 2 + 256;
      tables_ = std::make_shared<const Tables>(g_.modes, cap);
    }
    return tables_;
  }

  void record(std::int64_t flagged, std::int64_t rescued, double worst) const {
    std::lock_guard<std::mutex> lock(mutex_);
    quality_.flagged_cells += flagged;
    quality_.rescued_cells += rescued;
    quality_.worst_cancellation_nats = std::max(quality_.worst_cancellation_nats, worst);
  }

  JointPn::Quality quality() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return quality_;
  }

  CellResult log_prob(std::int64_t n0, std::int64_t n12, const Tables& t) const {
    CellResult out;
    if (n0 < 0 || n12 < 0) return out;
    std::int64_t rlo = 0;
    std::int64_t rhi = std::min(n0, n12);
    if (k_zero_) rhi = 0;
    if (b0k_zero_) { rlo = std::max(rlo, n0); rhi = std::min(rhi, n0); }
    if (b12k_zero_) { rlo = std::max(rlo, n12); rhi = std::min(rhi, n12); }
    if (rlo > rhi) return out;

    if (!k_pos_ && rhi - rlo > kFullSumLimit) {
      std::tie(rlo, rhi) = term_window(n0, n12, rlo, rhi, t);
    }

    SignedLogAccumulator acc;
    for (std::int64_t r = rlo; r <= rhi; ++r) {
      acc.add(static_cast<long double>(term_log(n0, n12, r, t)),
              k_pos_ && (r % 2 != 0) ? -1 : 1);
    }
    const SignedLogValue total = acc.total();
    out.cancellation = acc.cancellation_nats();
    out.flagged = k_pos_ && out.cancellation > flag_nats_;
    if (k_pos_ && out.cancellation > kRescueNats) {
      out.log_p = rescue_series(n0, n12);
      out.rescued = true;
      return out;
    }
    if (total.sign <= 0) return out;  // exact cancellation below resolution
    out.log_p = static_cast<double>(total.log_magnitude);
    return out;
  }

  const GsnParams& params() const { return g_; }

 private:
  // Grouped so that swapping (n0, b0) with (n12, b12) permutes only the
  // commutative sum u0 + u12 and the grid transposes bit-exactly.
  double term_log(std::int64_t n0, std::int64_t n12, std::int64_t r, const Tables& t) const {
    const std::int64_t s = n0 + n12;
    double base = t.lgm[s - r] - lg_modes_ - t.lgf[r] -
                  (static_cast<double>(s - r) + g_.modes) * log_den_;
    if (r > 0) base += static_cast<double>(r) * log_absk_;
    const double u0 =
        n0 - r > 0 ? static_cast<double>(n0 - r) * log_b0k_ - t.lgf[n0 - r] : 0.0;
    const double u12 =
        n12 - r > 0 ? static_cast<double>(n12 - r) * log_b12k_ - t.lgf[n12 - r] : 0.0;
    return base + (u0 + u12);
  }

  // Dominant window of the positive r-sum: the term ratio crosses 1 once,
  // at a root of a quadratic; keep everything within the drop.
  std::pair<std::int64_t, std::int64_t> term_window(std::int64_t n0, std::int64_t n12,
                                                    std::int64_t rlo, std::int64_t rhi,
                                                    const Tables& t) const {
    const double c = std::fabs(g_.k012) * den_ / (b0k_ * b12k_);
    const double s = static_cast<double>(n0 + n12);
    const double a = c + 1.0;
    const double b = c * s + s + g_.modes - 2.0;
    const double q = c * static_cast<double>(n0) * static_cast<double>(n12) - s - g_.modes + 1.0;
    const double disc = b * b - 4.0 * a * q;
    double rstar = 0.0;
    if (disc > 0.0) rstar = (b - std::sqrt(disc)) / (2.0 * a);
    const std::int64_t r0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(rstar), rlo, rhi);
    const double peak = term_log(n0, n12, r0, t);
    std::int64_t lo = r0, hi = r0;
    while (lo > rlo && term_log(n0, n12, lo - 1, t) > peak - kWindowDropNats) --lo;
    while (hi < rhi && term_log(n0, n12, hi + 1, t) > peak - kWindowDropNats) ++hi;
    return {lo, hi};
  }

  // Equivalent positive-term expansion of the classical-regime joint law:
  // a negative-binomial mixture of independent negative binomials.  Used
  // when the alternating r-sum loses too many digits.
  double rescue_series(std::int64_t n0, std::int64_t n12) const {
    const double k = g_.k012;
    const double d2 = g_.d012 * g_.d012;
    const double lq0 = std::log(k) - std::log(k + g_.b12);
    const double lq12 = std::log(k) - std::log(k + g_.b0);
    const double ld2 = d2 > 0.0 ? std::log(d2) : kNegInf;
    const double lgn0 = std::lgamma(static_cast<double>(n0) + 1.0);
    const double lgn12 = std::lgamma(static_cast<double>(n12) + 1.0);
    double peak = kNegInf;
    double acc = 0.0;
    for (std::int64_t j = 0; j < 2000000; ++j) {
      const double mj = g_.modes + static_cast<double>(j);
      double l = -lg_modes_ - std::lgamma(mj) - std::lgamma(static_cast<double>(j) + 1.0) -
                 (g_.modes + 2.0 * j) * std::log(k) +
                 std::lgamma(mj + static_cast<double>(n0)) - lgn0 +
                 (mj + static_cast<double>(n0)) * lq0 +
                 std::lgamma(mj + static_cast<double>(n12)) - lgn12 +
                 (mj + static_cast<double>(n12)) * lq12;
      if (j > 0) {
        if (ld2 == kNegInf) break;
        l += static_cast<double>(j) * ld2;
      }
      if (l > peak) {
        acc = acc * std::exp(peak - l) + 1.0;
        peak = l;
      } else {
        acc += std::exp(l - peak);
        if (l < peak - 46.0 && j > 4) break;
      }
    }
    return peak == kNegInf ? kNegInf : peak + std::log(acc);
  }

  GsnParams g_;
  double flag_nats_;
  double b0k_ = 0.0, b12k_ = 0.0, den_ = 1.0;
  double log_b0k_ = kNegInf, log_b12k_ = kNegInf, log_den_ = 0.0, log_absk_ = kNegInf;
  double lg_modes_ = 0.0;
  bool k_pos_ = false, k_zero_ = false, b0k_zero_ = false, b12k_zero_ = false;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const Tables> tables_;
  mutable JointPn::Quality quality_;
};

namespace {

struct RowScan {
  std::int64_t lo = 0;
  std::vector<double> logs;
  std::vector<std::uint8_t> flags;
  std::int64_t flagged = 0, rescued = 0;
  double worst = 0.0;
};

RowScan scan_row(const JointPnState& ev, const Tables& t, std::int64_t n0,
                 std::int64_t hint, std::int64_t cap) {
  RowScan out;
  auto cell = [&](std::int64_t n12) { return ev.log_prob(n0, n12, t); };
  // Probe for a finite seed: the regression hint, the diagonal, and a
  // geometric ladder.
  std::vector<std::int64_t> probes = {hint, n0, 0, 1, 2};
  for (std::int64_t p = 4; p > 0 && p <= cap; p *= 2) probes.push_back(p);
  std::int64_t seed = -1;
  double seed_log = kNegInf;
  for (std::int64_t p : probes) {
    if (p < 0 || p > cap) continue;
    const CellResult c = cell(p);
    if (c.log_p > seed_log) {
      seed_log = c.log_p;
      seed = p;
    }
  }
  if (seed < 0 || seed_log == kNegInf) return out;  // empty row
  while (true) {  // hill climb to the row mode
    if (seed < cap) {
      const CellResult up = cell(seed + 1);
      if (up.log_p > seed_log) {
        seed_log = up.log_p;
        ++seed;
        continue;
      }
    }
    if (seed > 0) {
      const CellResult down = cell(seed - 1);
      if (down.log_p > seed_log) {
        seed_log = down.log_p;
        --seed;
        continue;
      }
    }
    break;
  }
  auto note = [&](const CellResult& c) {
    if (c.flagged) ++out.flagged;
    if (c.rescued) ++out.rescued;
    out.worst = std::max(out.worst, c.cancellation);
  };
  std::vector<double> left, right;
  std::vector<std::uint8_t> left_flags, right_flags;
  const CellResult center = cell(seed);
  note(center);
  std::int64_t lo = seed;
  while (lo > 0) {
    const CellResult c = cell(lo - 1);
    if (!(c.log_p > seed_log - kWindowDropNats)) break;
    note(c);
    left.push_back(c.log_p);
    left_flags.push_back(c.flagged ? 1 : 0);
    --lo;
  }
  std::int64_t hi = seed;
  while (hi < cap) {
    const CellResult c = cell(hi + 1);
    if (!(c.log_p > seed_log - kWindowDropNats)) break;
    note(c);
    right.push_back(c.log_p);
    right_flags.push_back(c.flagged ? 1 : 0);
    ++hi;
  }
  out.lo = lo;
  out.logs.reserve(left.size() + 1 + right.size());
  out.logs.insert(out.logs.end(), left.rbegin(), left.rend());
  out.logs.push_back(center.log_p);
  out.logs.insert(out.logs.end(), right.begin(), right.end());
  out.flags.reserve(out.logs.size());
  out.flags.insert(out.flags.end(), left_flags.rbegin(), left_flags.rend());
  out.flags.push_back(center.flagged ? 1 : 0);
  out.flags.insert(out.flags.end(), right_flags.begin(), right_flags.end());
  return out;
}

}  // namespace

JointPn::JointPn(const GsnParams& g, JointPnOptions options)
    : params_(GsnParams::make(g.b0, g.b12, g.d012, g.modes)), options_(options) {
  if (!(options_.target_tail > 0.0) || options_.target_tail >= 1.0) {
    throw std::domain_error("joint_pn: target_tail must lie in (0, 1)");
  }
  n0_max_ = mandel_rice_truncation(params_.b0, params_.modes, 0.5 * options_.target_tail);
  n12_max_ = mandel_rice_truncation(params_.b12, params_.modes, 0.5 * options_.target_tail);
  tail_mass_bound_ = mandel_rice_tail_bound(params_.b0, params_.modes, n0_max_) +
                     mandel_rice_tail_bound(params_.b12, params_.modes, n12_max_);
  const std::int64_t capacity = 2 * (n0_max_ + n12_max_) + 4096;
  state_ = std::make_shared<JointPnState>(params_, options_.flag_threshold_nats, capacity);
  if ((n0_max_ + 1) * (n12_max_ + 1) <= options_.cell_budget) materialize();
}

JointPn JointPn::from_grid(const GsnParams& g, const Eigen::ArrayXXd& probs,
                           double tail_mass_bound) {
  JointPn j;
  j.params_ = GsnParams::make(g.b0, g.b12, g.d012, g.modes);
  j.n0_max_ = probs.rows() - 1;
  j.n12_max_ = probs.cols() - 1;
  j.tail_mass_bound_ = tail_mass_bound;
  j.grid_ = probs.max(0.0).log();
  j.flags_.setZero(probs.rows(), probs.cols());
  j.state_ = std::make_shared<JointPnState>(j.params_, JointPnOptions{}.flag_threshold_nats,
                                            2 * (j.n0_max_ + j.n12_max_) + 64);
  return j;
}

void JointPn::materialize() {
  const auto tables = state_->tables(n0_max_ + n12_max_ + 2);
  grid_.resize(n0_max_ + 1, n12_max_ + 1);
  flags_.resize(n0_max_ + 1, n12_max_ + 1);
  parallel_for_chunks(n0_max_ + 1, options_.threads, [&](std::int64_t begin, std::int64_t end) {
    std::int64_t flagged = 0, rescued = 0;
    double worst = 0.0;
    for (std::int64_t n0 = begin; n0 < end; ++n0) {
      for (std::int64_t n12 = 0; n12 <= n12_max_; ++n12) {
        const CellResult c = state_->log_prob(n0, n12, *tables);
        grid_(n0, n12) = c.log_p;
        flags_(n0, n12) = c.flagged ? 1 : 0;
        if (c.flagged) ++flagged;
        if (c.rescued) ++rescued;
        worst = std::max(worst, c.cancellation);
      }
    }
    state_->record(flagged, rescued, worst);
  });
}

const Eigen::ArrayXXd& JointPn::log_grid() const {
  if (!dense()) throw NumericError("joint_pn: grid exceeds the cell budget; use row access");
  return grid_;
}

const Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& JointPn::flag_grid() const {
  if (!dense()) throw NumericError("joint_pn: grid exceeds the cell budget; use row access");
  return flags_;
}

JointPn::Quality JointPn::quality() const { return state_->quality(); }

double JointPn::log_prob(std::int64_t n0, std::int64_t n12) const {
  if (n0 < 0 || n12 < 0) return kNegInf;
  if (dense() && n0 <= n0_max_ && n12 <= n12_max_) return grid_(n0, n12);
  const auto tables = state_->tables(n0 + n12 + 2);
  return state_->log_prob(n0, n12, *tables).log_p;
}

JointPn::RowSegment JointPn::row_window(std::int64_t n0) const {
  // Regression hint from the underlying correlated-intensity model.
  const double rho_slope =
      params_.b0 > 0.0 ? params_.d012 * params_.d012 / (params_.b0 * params_.b0) : 0.0;
  const double rho = params_.b0 * params_.b12 > 0.0
                         ? params_.d012 * params_.d012 / (params_.b0 * params_.b12)
                         : 0.0;
  const double guess =
      params_.modes * params_.b12 * (1.0 - rho) + rho_slope * static_cast<double>(n0);
  const std::int64_t cap = std::max<std::int64_t>(
      n12_max_ + 64, static_cast<std::int64_t>(2.5 * (std::fabs(guess) + static_cast<double>(n0))) + 256);
  const auto tables = state_->tables(n0 + cap + 2);
  const std::int64_t hint =
      std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(std::max(guess, 0.0))), 0, cap);
  RowScan scan = scan_row(*state_, *tables, n0, hint, cap);
  state_->record(scan.flagged, scan.rescued, scan.worst);
  RowSegment seg;
  seg.n12_lo = scan.lo;
  seg.log_probs = Eigen::Map<const Eigen::ArrayXd>(scan.logs.data(),
                                                   static_cast<Eigen::Index>(scan.logs.size()));
  seg.flags = std::move(scan.flags);
  return seg;
}

double JointPn::exp_sum() const {
  if (dense()) {
    double total = 0.0;
    for (std::int64_t n0 = 0; n0 <= n0_max_; ++n0) {
      const double row = logsumexp(grid_.row(n0).transpose());
      if (row != kNegInf) total += std::exp(row);
    }
    return total;
  }
  std::vector<double> row_mass(n0_max_ + 1, 0.0);
  parallel_for_chunks(n0_max_ + 1, options_.threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t n0 = begin; n0 < end; ++n0) {
      const double row = logsumexp(row_window(n0).log_probs);
      if (row != kNegInf) row_mass[n0] = std::exp(row);
    }
  });
  double total = 0.0;
  for (double v : row_mass) total += v;
  return total;
}

Eigen::ArrayXd marginal(const JointPn& j, int axis) {
  if (axis != 0 && axis != 1) throw std::domain_error("marginal: axis must be 0 or 1");
  const std::int64_t n_out = (axis == 0 ? j.n0_max() : j.n12_max()) + 1;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n_out);
  if (j.dense()) {
    const auto& grid = j.log_grid();
    for (std::int64_t n0 = 0; n0 <= j.n0_max(); ++n0) {
      for (std::int64_t n12 = 0; n12 <= j.n12_max(); ++n12) {
        const double l = grid(n0, n12);
        if (l != kNegInf) out[axis == 0 ? n0 : n12] += std::exp(l);
      }
    }
    return out;
  }
  std::vector<JointPn::RowSegment> rows(j.n0_max() + 1);
  parallel_for_chunks(j.n0_max() + 1, 0, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t n0 = begin; n0 < end; ++n0) rows[n0] = j.row_window(n0);
  });
  for (std::int64_t n0 = 0; n0 <= j.n0_max(); ++n0) {
    const auto& seg = rows[n0];
    for (Eigen::Index i = 0; i < seg.log_probs.size(); ++i) {
      const double l = seg.log_probs[i];
      if (l == kNegInf) continue;
      const std::int64_t idx = axis == 0 ? n0 : seg.n12_lo + i;
      if (idx < n_out) out[idx] += std::exp(l);
    }
  }
  return out;
}

ConditionalPn conditional(const GsnParams& g, std::int64_t n0, double target_tail) {
  JointPnOptions o;
  o.target_tail = target_tail;
  o.cell_budget = 0;  // single-row use: never materialize
  const JointPn j(g, o);
  return conditional(j, n0);
}

ConditionalPn conditional(const JointPn& j, std::int64_t n0) {
  if (n0 < 0) throw std::domain_error("conditional: n0 must be nonnegative");
  const JointPn::RowSegment seg = j.row_window(n0);
  if (seg.log_probs.size() == 0 || seg.log_probs.maxCoeff() == kNegInf) {
    throw NumericError(
        "conditional: conditioning row carries no representable mass (degenerate normalization)");
  }
  ConditionalPn c;
  c.n0 = n0;
  c.n12_lo = seg.n12_lo;
  const double norm = logsumexp(seg.log_probs);
  c.probs = (seg.log_probs - norm).exp();
  double mean = 0.0;
  for (Eigen::Index i = 0; i < c.probs.size(); ++i) {
    mean += c.probs[i] * static_cast<double>(seg.n12_lo + i);
  }
  double var = 0.0;
  for (Eigen::Index i = 0; i < c.probs.size(); ++i) {
    const double d = static_cast<double>(seg.n12_lo + i) - mean;
    var += c.probs[i] * d * d;
  }
  c.mean = mean;
  c.variance = var;
  c.fano = var > 0.0 && mean > 0.0 ? var / mean : 0.0;
  return c;
}

double fano_closed(const GsnParams& g, double n0) {
  if (!(n0 >= 1.0)) throw std::domain_error("fano_closed: requires n0 >= 1");
  if (!(g.b0 > 0.0)) throw std::domain_error("fano_closed: requires b0 > 0");
  const double a = (g.b12 + g.k012) / (1.0 + g.b0);
  const double b = g.k012 / g.b0;
  const double c = 1.0 + g.modes / n0;
  const double den = c * a - b;
  if (std::fabs(den) < 1e-12 * (std::fabs(c * a) + std::fabs(b) + 1e-300)) {
    throw NumericError("fano_closed: vanishing denominator in the conditional Fano expression");
  }
  return 1.0 + (c * a * a - b * b) / den;
}

double fano_asymptote(const GsnParams& g) {
  if (!(g.b0 > 0.0)) throw std::domain_error("fano_asymptote: requires b0 > 0");
  return 1.0 + (g.b12 + g.k012) / (1.0 + g.b0) + g.k012 / g.b0;
}

DifferencePn difference_distribution(const JointPn& j) {
  const std::int64_t width = j.n0_max() + j.n12_max() + 1;
  std::vector<JointPn::RowSegment> rows(j.n0_max() + 1);
  parallel_for_chunks(j.n0_max() + 1, 0, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t n0 = begin; n0 < end; ++n0) rows[n0] = j.row_window(n0);
  });
  Eigen::ArrayXd offsets = Eigen::ArrayXd::Zero(width);
  double mass = 0.0, mean0 = 0.0, mean12 = 0.0;
  for (std::int64_t n0 = 0; n0 <= j.n0_max(); ++n0) {
    const auto& seg = rows[n0];
    for (Eigen::Index i = 0; i < seg.log_probs.size(); ++i) {
      const double l = seg.log_probs[i];
      if (l == kNegInf) continue;
      const double p = std::exp(l);
      const std::int64_t n12 = seg.n12_lo + i;
      const std::int64_t idx = n0 - n12 + j.n12_max();
      if (idx >= 0 && idx < width) offsets[idx] += p;
      mass += p;
      mean0 += p * static_cast<double>(n0);
      mean12 += p * static_cast<double>(n12);
    }
  }
  if (mass <= 0.0) throw NumericError("difference_distribution: no representable mass");
  std::int64_t lo = 0, hi = width - 1;
  const double floor = offsets.maxCoeff() * 1e-300;
  while (lo < hi && offsets[lo] <= floor) ++lo;
  while (hi > lo && offsets[hi] <= floor) --hi;
  DifferencePn d;
  d.offset_lo = lo - j.n12_max();
  d.probs = offsets.segment(lo, hi - lo + 1);
  d.retained_mass = mass;
  double mean = 0.0;
  for (Eigen::Index i = 0; i < d.probs.size(); ++i) {
    mean += d.probs[i] * static_cast<double>(d.offset_lo + i);
  }
  mean /= mass;
  double var = 0.0;
  for (Eigen::Index i = 0; i < d.probs.size(); ++i) {
    const double x = static_cast<double>(d.offset_lo + i) - mean;
    var += d.probs[i] * x * x;
  }
  var /= mass;
  d.mean = mean;
  d.variance = var;
  d.noise_reduction = var / (mean0 / mass + mean12 / mass);
  return d;
}

}  // namespace trimode
