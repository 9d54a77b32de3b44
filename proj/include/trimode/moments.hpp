#pragma once

#include <cstdint>

#include "trimode/dynamics.hpp"

namespace trimode {

enum class MomentKind { photocount, photon };

/// First and second raw moments of the per-pulse counts on the single (0)
/// and compound (12) arms.
struct PhotocountMoments {
  double mean0 = 0.0, mean12 = 0.0;
  double sq0 = 0.0, sq12 = 0.0;  // raw second moments <m^2>
  double cross = 0.0;            // <m0 m12>
  std::int64_t n_pulses = 0;
  MomentKind kind = MomentKind::photocount;

  double var0() const { return sq0 - mean0 * mean0; }
  double var12() const { return sq12 - mean12 * mean12; }
  double covariance() const { return cross - mean0 * mean12; }

  /// Enforces variance nonnegativity and the Cauchy-Schwarz bound.
  void validate() const;
};

/// One-pass moment accumulation shifted by the first sample, with an
/// associative merge for parallel partial accumulation.
class MomentAccumulator {
 public:
  void add(double m0, double m12);
  void merge(const MomentAccumulator& other);
  std::int64_t count() const { return n_; }
  /// Throws DataError on an empty accumulator.
  PhotocountMoments moments(MomentKind kind = MomentKind::photocount) const;

 private:
  std::int64_t n_ = 0;
  double shift0_ = 0.0, shift12_ = 0.0;
  double s0_ = 0.0, s12_ = 0.0;          // sums of (m - shift)
  double s00_ = 0.0, s1212_ = 0.0;       // sums of (m - shift)^2
  double s012_ = 0.0;                    // sum of (m0 - shift0)(m12 - shift12)
};

struct EfficiencyVector {
  double eta0 = 1.0, eta1 = 1.0, eta2 = 1.0;

  /// Compound-arm efficiency; requires eta1 == eta2.
  double eta12() const;
  void validate() const;
};

/// Removes independent additive detection noise, quantified by a dark
/// measurement: means, variances and the cross-covariance subtract.
/// Throws DataError when a corrected variance would be negative.
PhotocountMoments subtract_noise(const PhotocountMoments& meas,
                                 const PhotocountMoments& dark);

/// Corrects detector-level moments for the quantum efficiency:
/// <n> = <m>/eta, <n^2> = <m^2>/eta^2 - (1-eta)<m>/eta^2,
/// <n0 n12> = <m0 m12>/eta^2.
PhotocountMoments to_photon_moments(const PhotocountMoments& m,
                                    const EfficiencyVector& eta);

struct IntensityMoments {
  double mean_w0 = 0.0, mean_w12 = 0.0;
  double var_w0 = 0.0, var_w12 = 0.0;
  double cov = 0.0;
};

/// <W> = <n>, <W^2> = <n^2> - <n>, <W0 W12> = <n0 n12>.
IntensityMoments to_intensity_moments(const PhotocountMoments& m);

struct GsnEstimate {
  GsnParams params;
  double modes0 = 0.0, modes12 = 0.0;  // per-arm mode-count estimates
  double mode_spread = 0.0;            // |modes0 - modes12| / modes
  bool mode_mismatch_warning = false;  // spread beyond 0.25 signals misalignment
};

/// B_i = var(W_i)/<W_i>, M_i = <W_i>^2/var(W_i), M = (M0 + M12)/2,
/// |D| = sqrt(cov/M).  Throws DataError on nonpositive variances or a
/// negative cross-covariance.
GsnEstimate estimate_gsn(const IntensityMoments& w);

struct DiagnosticScalars {
  double k012 = 0.0;            // determinant; < 0 is nonclassical
  double noise_reduction = 0.0; // variance of the count difference over the summed means
  double lambda = 0.0;          // principal squeezing parameter 1 + b0 + b12 - 2 d012
  double covariance_c = 0.0;    // Pearson correlation of the measured counts
  double wave_var_diff = 0.0;   // var(W0 - W12) predicted from the coefficients
  double diff_var = 0.0;        // var(n0 - n12) = mean0 + mean12 + wave_var_diff
};

/// Scalar nonclassicality diagnostics for moments m described by
/// coefficients g (same kind).  wave_var_diff comes from the closed-form
/// intensity covariances; diff_var restates it through the count-level
/// identity; covariance_c is the measured-moment correlation.
DiagnosticScalars diagnostics(const PhotocountMoments& m, const GsnParams& g);

}  // namespace trimode
