#include "trimode/moments.hpp"

#include <cmath>

#include "trimode/errors.hpp"

namespace trimode {

void PhotocountMoments::validate() const {
  if (var0() < -1e-9 * (1.0 + sq0) || var12() < -1e-9 * (1.0 + sq12)) {
    throw DataError("moments: negative variance");
  }
  const double bound = std::sqrt(std::max(var0(), 0.0) * std::max(var12(), 0.0));
  if (std::fabs(covariance()) > bound * (1.0 + 1e-9) + 1e-12) {
    throw DataError("moments: covariance violates the Cauchy-Schwarz bound");
  }
}

void MomentAccumulator::add(double m0, double m12) {
  if (m0 < 0.0 || m12 < 0.0) throw DataError("accumulate: negative count");
  if (n_ == 0) {
    shift0_ = m0;
    shift12_ = m12;
  }
  const double d0 = m0 - shift0_;
  const double d12 = m12 - shift12_;
  s0_ += d0;
  s12_ += d12;
  s00_ += d0 * d0;
  s1212_ += d12 * d12;
  s012_ += d0 * d12;
  ++n_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  // Re-center the other partial sums onto this accumulator's shift.
  const double c0 = other.shift0_ - shift0_;
  const double c12 = other.shift12_ - shift12_;
  const double n = static_cast<double>(other.n_);
  s00_ += other.s00_ + 2.0 * c0 * other.s0_ + n * c0 * c0;
  s1212_ += other.s1212_ + 2.0 * c12 * other.s12_ + n * c12 * c12;
  s012_ += other.s012_ + c0 * other.s12_ + c12 * other.s0_ + n * c0 * c12;
  s0_ += other.s0_ + n * c0;
  s12_ += other.s12_ + n * c12;
  n_ += other.n_;
}

PhotocountMoments MomentAccumulator::moments(MomentKind kind) const {
  if (n_ == 0) throw DataError("accumulate: empty sample stream");
  const double n = static_cast<double>(n_);
  PhotocountMoments m;
  m.kind = kind;
  m.n_pulses = n_;
  m.mean0 = shift0_ + s0_ / n;
  m.mean12 = shift12_ + s12_ / n;
  m.sq0 = s00_ / n + 2.0 * shift0_ * (s0_ / n) + shift0_ * shift0_;
  m.sq12 = s1212_ / n + 2.0 * shift12_ * (s12_ / n) + shift12_ * shift12_;
  m.cross = s012_ / n + shift0_ * (s12_ / n) + shift12_ * (s0_ / n) + shift0_ * shift12_;
  return m;
}

double EfficiencyVector::eta12() const {
  if (std::fabs(eta1 - eta2) > 1e-12 * std::max(eta1, eta2)) {
    throw ConfigError("efficiency: compound arm requires eta1 == eta2");
  }
  return eta1;
}

void EfficiencyVector::validate() const {
  for (double e : {eta0, eta1, eta2}) {
    if (!(e > 0.0) || e > 1.0) throw ConfigError("efficiency: eta must lie in (0, 1]");
  }
}

PhotocountMoments subtract_noise(const PhotocountMoments& meas,
                                 const PhotocountMoments& dark) {
  if (meas.kind != MomentKind::photocount || dark.kind != MomentKind::photocount) {
    throw DataError("subtract_noise: both inputs must be photocount moments");
  }
  PhotocountMoments out;
  out.kind = MomentKind::photocount;
  out.n_pulses = meas.n_pulses;
  out.mean0 = meas.mean0 - dark.mean0;
  out.mean12 = meas.mean12 - dark.mean12;
  const double var0 = meas.var0() - dark.var0();
  const double var12 = meas.var12() - dark.var12();
  if (var0 < 0.0 || var12 < 0.0) {
    throw DataError("subtract_noise: corrected variance is negative (over-subtraction)");
  }
  const double cov = meas.covariance() - dark.covariance();
  out.sq0 = var0 + out.mean0 * out.mean0;
  out.sq12 = var12 + out.mean12 * out.mean12;
  out.cross = cov + out.mean0 * out.mean12;
  return out;
}

PhotocountMoments to_photon_moments(const PhotocountMoments& m,
                                    const EfficiencyVector& eta) {
  if (m.kind != MomentKind::photocount) {
    throw DataError("to_photon_moments: input must be photocount moments");
  }
  eta.validate();
  const double e0 = eta.eta0;
  const double e12 = eta.eta12();
  PhotocountMoments out;
  out.kind = MomentKind::photon;
  out.n_pulses = m.n_pulses;
  out.mean0 = m.mean0 / e0;
  out.mean12 = m.mean12 / e12;
  out.sq0 = m.sq0 / (e0 * e0) - (1.0 - e0) * m.mean0 / (e0 * e0);
  out.sq12 = m.sq12 / (e12 * e12) - (1.0 - e12) * m.mean12 / (e12 * e12);
  out.cross = m.cross / (e0 * e12);
  return out;
}

IntensityMoments to_intensity_moments(const PhotocountMoments& m) {
  IntensityMoments w;
  w.mean_w0 = m.mean0;
  w.mean_w12 = m.mean12;
  w.var_w0 = m.sq0 - m.mean0 - m.mean0 * m.mean0;
  w.var_w12 = m.sq12 - m.mean12 - m.mean12 * m.mean12;
  w.cov = m.cross - m.mean0 * m.mean12;
  return w;
}

GsnEstimate estimate_gsn(const IntensityMoments& w) {
  if (!(w.var_w0 > 0.0) || !(w.var_w12 > 0.0)) {
    throw DataError("estimate_gsn: intensity variances must be positive");
  }
  if (w.cov < 0.0) {
    throw DataError("estimate_gsn: negative cross-covariance of intensities");
  }
  GsnEstimate est;
  est.modes0 = w.mean_w0 * w.mean_w0 / w.var_w0;
  est.modes12 = w.mean_w12 * w.mean_w12 / w.var_w12;
  const double modes = 0.5 * (est.modes0 + est.modes12);
  const double b0 = w.var_w0 / w.mean_w0;
  const double b12 = w.var_w12 / w.mean_w12;
  const double d012 = std::sqrt(w.cov / modes);
  est.params = GsnParams::make(b0, b12, d012, modes);
  est.mode_spread = std::fabs(est.modes0 - est.modes12) / modes;
  est.mode_mismatch_warning = est.mode_spread > 0.25;
  return est;
}

DiagnosticScalars diagnostics(const PhotocountMoments& m, const GsnParams& g) {
  DiagnosticScalars d;
  d.k012 = g.k012;
  d.lambda = 1.0 + g.b0 + g.b12 - 2.0 * g.d012;
  d.wave_var_diff = g.modes * (g.b0 - g.b12) * (g.b0 - g.b12) + 2.0 * g.modes * g.k012;
  d.diff_var = m.mean0 + m.mean12 + d.wave_var_diff;
  d.noise_reduction = d.diff_var / (m.mean0 + m.mean12);
  const double denom = std::sqrt(m.var0() * m.var12());
  d.covariance_c = denom > 0.0 ? m.covariance() / denom : 0.0;
  return d;
}

}  // namespace trimode
