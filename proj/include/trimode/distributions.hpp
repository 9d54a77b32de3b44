#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "trimode/dynamics.hpp"

namespace trimode {

struct JointPnState;  // internal evaluator, tables and quality telemetry

/// log of the Mandel-Rice (negative-binomial) probability
/// p(n) = Gamma(n+M)/(Gamma(M) n!) * b^n / (1+b)^(n+M).
double log_mandel_rice(std::int64_t n, double b, double modes);

/// Smallest n such that the Mandel-Rice tail mass beyond n is provably
/// below target_tail (geometric bound on the pmf ratio).
std::int64_t mandel_rice_truncation(double b, double modes, double target_tail);

struct JointPnOptions {
  double target_tail = 1e-10;
  std::int64_t cell_budget = 40'000'000;  // dense grids only below this
  double flag_threshold_nats = 30.0;
  int threads = 0;  // 0 = hardware concurrency
};

/// Joint single/compound photon-number distribution of a two-field Gaussian
/// state.  Entries are alternating-sign sums over the pairing index r,
/// evaluated in signed-log space; classical-regime entries whose cancellation
/// exceeds the flag threshold are re-evaluated through an equivalent
/// positive-term series and counted in the quality summary.
class JointPn {
 public:
  struct Quality {
    std::int64_t flagged_cells = 0;
    std::int64_t rescued_cells = 0;
    double worst_cancellation_nats = 0.0;
  };

  struct RowSegment {
    std::int64_t n12_lo = 0;
    Eigen::ArrayXd log_probs;         // log p(n0, n12_lo + j)
    std::vector<std::uint8_t> flags;  // cancellation warnings per cell
  };

  JointPn(const GsnParams& g, JointPnOptions options = {});

  /// Wraps an externally computed probability grid over
  /// [0, probs.rows()) x [0, probs.cols()).
  static JointPn from_grid(const GsnParams& g, const Eigen::ArrayXXd& probs,
                           double tail_mass_bound);

  const GsnParams& params() const { return params_; }
  std::int64_t n0_max() const { return n0_max_; }
  std::int64_t n12_max() const { return n12_max_; }
  double tail_mass_bound() const { return tail_mass_bound_; }
  bool dense() const { return grid_.size() > 0; }
  const Eigen::ArrayXXd& log_grid() const;
  const Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& flag_grid() const;
  Quality quality() const;

  /// Exact log probability of one cell (works in both dense and lazy mode).
  double log_prob(std::int64_t n0, std::int64_t n12) const;

  /// Adaptive window along n12 containing all non-negligible mass of row n0.
  RowSegment row_window(std::int64_t n0) const;

  double exp_sum() const;  // total probability over the truncated support

 private:
  JointPn() = default;
  void materialize();

  GsnParams params_;
  JointPnOptions options_;
  std::int64_t n0_max_ = 0, n12_max_ = 0;
  double tail_mass_bound_ = 0.0;
  Eigen::ArrayXXd grid_;  // log probabilities when dense
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> flags_;
  std::shared_ptr<JointPnState> state_;
};

inline JointPn joint_pn(const GsnParams& g, JointPnOptions options = {}) {
  return JointPn(g, options);
}

/// Row (axis = 0: distribution of n0) or column (axis = 1: distribution of
/// n12) sums of the joint grid, as probabilities.
Eigen::ArrayXd marginal(const JointPn& j, int axis);

struct ConditionalPn {
  std::int64_t n0 = 0;
  std::int64_t n12_lo = 0;
  Eigen::ArrayXd probs;  // normalized over the window
  double mean = 0.0;
  double variance = 0.0;
  double fano = 0.0;
};

/// Compound-field distribution conditioned on n0 detected single-field
/// photons, normalized over its adaptive window; works in log-ratio form so
/// large n0 cannot underflow.  Throws NumericError when the conditioning row
/// carries no representable mass.
ConditionalPn conditional(const GsnParams& g, std::int64_t n0,
                          double target_tail = 1e-12);

/// Same, reusing an existing joint distribution's tables (preferred inside
/// sweeps over many n0 values).
ConditionalPn conditional(const JointPn& j, std::int64_t n0);

/// Closed-form conditional Fano factor.  Throws NumericError when the
/// denominator vanishes.
double fano_closed(const GsnParams& g, double n0);

/// n0 -> infinity limit of the conditional Fano factor, 1 + k012/b0 +
/// (b12 + k012)/(1 + b0).
double fano_asymptote(const GsnParams& g);

struct DifferencePn {
  std::int64_t offset_lo = 0;  // difference n = n0 - n12
  Eigen::ArrayXd probs;
  double mean = 0.0;
  double variance = 0.0;
  double noise_reduction = 0.0;  // variance / (<n0> + <n12>)
  double retained_mass = 0.0;
};

/// Distribution of the count difference n0 - n12, assembled from row
/// windows (rows evaluate in parallel in lazy mode).
DifferencePn difference_distribution(const JointPn& j);

}  // namespace trimode
