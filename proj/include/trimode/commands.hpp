#pragma once

#include <iosfwd>

#include "trimode/io.hpp"

namespace trimode {

/// Coefficient estimation pipeline: moments -> efficiency correction ->
/// intensity moments -> coefficients -> diagnostics and ordering threshold,
/// at both the photocount and the photon level.  Writes estimate.json and
/// prints a table.
void cmd_estimate(const RunConfig& cfg, std::ostream& out);

/// Joint count distribution grid for the configured coefficients.
void cmd_joint(const RunConfig& cfg, std::ostream& out);

/// Conditional distributions and Fano factors over a range of n0.
void cmd_conditional(const RunConfig& cfg, std::ostream& out);

/// s-ordered intensity quasi-distribution grid.
void cmd_quasi(const RunConfig& cfg, std::ostream& out);

/// Efficiency sweeps: Fano versus eta, critical efficiency versus n0, and
/// the large-n0 Fano contour over (eta0, eta12).
void cmd_sweep(const RunConfig& cfg, std::ostream& out);

/// Synthetic pulse records from the classical-regime sampler.
void cmd_simulate(const RunConfig& cfg, std::ostream& out);

/// Coefficients and intensity covariances predicted from the couplings.
void cmd_predict(const RunConfig& cfg, std::ostream& out);

}  // namespace trimode
