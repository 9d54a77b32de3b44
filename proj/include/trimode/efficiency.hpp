#pragma once

#include <Eigen/Core>
#include <optional>

#include "trimode/dynamics.hpp"

namespace trimode {

/// Detection losses act on the coefficients as b0 -> eta0 b0,
/// b12 -> eta12 b12, d012^2 -> eta0 eta12 d012^2 (so k012 scales by
/// eta0 eta12 and its sign never flips).
struct EtaScaled {
  GsnParams source;
  double eta0 = 1.0, eta12 = 1.0;
  GsnParams scaled;
};

EtaScaled scale(const GsnParams& g, double eta0, double eta12);

/// Conditional Fano factor of the efficiency-degraded state versus a common
/// efficiency eta = eta0 = eta12, at fixed n0.  Column 0: eta, column 1: F.
Eigen::ArrayX2d fano_vs_eta(const GsnParams& g, double n0, const Eigen::ArrayXd& eta_grid);

/// Efficiency at which the conditional Fano factor crosses 1 for the given
/// n0 (bisection to 1e-6); empty when no crossing exists on (0, 1].
std::optional<double> eta_crit(const GsnParams& g, double n0);

/// Minimal single-field efficiency preserving sub-Poissonian conditional
/// statistics in the large-n0 limit; independent of the compound-arm
/// efficiency.  Requires k012 < 0.
double eta0_crit_min(const GsnParams& g);

/// Large-n0 conditional Fano factor over an efficiency grid (rows follow
/// eta0, columns follow eta12).  Cells where the unsimplified expression
/// degenerates, or whose value exceeds ceiling, are NaN (not determined).
Eigen::ArrayXXd fano_contour(const GsnParams& g, const Eigen::ArrayXd& eta0_grid,
                             const Eigen::ArrayXd& eta12_grid, double ceiling = 10.0);

}  // namespace trimode
