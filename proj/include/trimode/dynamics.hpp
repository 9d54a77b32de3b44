#pragma once

#include <Eigen/Core>
#include <complex>

namespace trimode {

/// Couplings of the interlinked down-conversion (gamma0) and parametric
/// amplification (gamma1) driven by strong classical pumps, plus the
/// interaction time and the number of independent temporal modes per field.
struct CouplingConfig {
  std::complex<double> gamma0;
  std::complex<double> gamma1;
  double t = 0.0;
  double modes = 1.0;
};

/// Linear transform of the operator vector (a0, a1^dag, a2^dag) produced by
/// the quadratic interaction.  Row-wise signed norms are conserved:
/// |U00|^2 - |U01|^2 - |U02|^2 = 1 and analogously for the other rows.
using BogoliubovMatrix = Eigen::Matrix3cd;

/// Generator A of d/dt (a0, a1^dag, a2^dag) = A (a0, a1^dag, a2^dag).
Eigen::Matrix3cd drift_matrix(const CouplingConfig& config);

/// U(t) = exp(t A) by scaling-and-squaring Pade.
BogoliubovMatrix evolve(const CouplingConfig& config);

/// Vacuum second moments of the three generated fields.
struct TriModeGsn {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;          // mean photon numbers per mode
  std::complex<double> d01, d02, d12bar;        // anomalous / normal correlations
};

TriModeGsn coefficients(const BogoliubovMatrix& u);

/// Two-field description of the single field and the summed compound field:
/// mean noise photon numbers b0, b12, correlation modulus d012, temporal
/// mode count, and the determinant k012 = b0 b12 - d012^2 whose sign
/// separates classical (k012 > 0) from nonclassical states.
struct GsnParams {
  double b0 = 0.0;
  double b12 = 0.0;
  double d012 = 0.0;
  double modes = 1.0;
  double k012 = 0.0;

  static GsnParams make(double b0, double b12, double d012, double modes);
};

/// Reduce the three-field coefficients to the single/compound pair.  Warns
/// through the return value's validity (throws NumericError) when the
/// compound mean noise would be negative, which signals phase conventions
/// outside the real-gamma1 reduction.
GsnParams compound(const TriModeGsn& tri, double modes);

struct IntensityCovariances {
  double var_w0 = 0.0, var_w1 = 0.0, var_w2 = 0.0;
  double cov_w0_w1 = 0.0, cov_w0_w2 = 0.0, cov_w1_w2 = 0.0;
  double var_w12 = 0.0, cov_w0_w12 = 0.0;
};

/// Closed-form second moments of the integrated intensities for M
/// independent, identically evolved temporal modes.
IntensityCovariances intensity_covariances(const TriModeGsn& tri, double modes);

struct CompoundIntensityCovariances {
  double var_w0 = 0.0, var_w12 = 0.0, cov_w0_w12 = 0.0;
};

CompoundIntensityCovariances intensity_covariances(const GsnParams& g);

}  // namespace trimode
