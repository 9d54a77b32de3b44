#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trimode/distributions.hpp"
#include "trimode/dynamics.hpp"
#include "trimode/moments.hpp"
#include "trimode/quasiprob.hpp"
#include "trimode/sampler.hpp"

namespace trimode {

/// Pulse-record CSV: header `pulse,m0,m12` or `pulse,m0,m1,m2` (the two
/// compound-arm detectors are summed at ingestion), integer fields, `#`
/// comment lines.  Throws DataError on malformed input.
std::vector<PulseRecord> read_pulse_csv(std::istream& in);
std::vector<PulseRecord> read_pulse_csv_file(const std::string& path);

void write_pulse_csv(std::ostream& out, const std::vector<PulseRecord>& records,
                     const std::map<std::string, std::string>& header);

/// 17 significant digits: round-trip exact for doubles.
std::string format_number(double v);

/// `# key: value` comment block, keys in insertion-independent sorted order.
void write_header_block(std::ostream& out, const std::map<std::string, std::string>& header);

/// Long-form grid export `n0,n12,prob,log_prob,flag` in lexicographic row
/// order.  Dense grids emit every cell; lazy grids emit adaptive row
/// windows.  Verifies after writing that the emitted mass is within the
/// stated tail bound of 1.
void write_joint_csv(std::ostream& out, const JointPn& j,
                     const std::map<std::string, std::string>& header);

/// `W0,W12,value` in lexicographic order.
void write_quasi_csv(std::ostream& out, const QuasiGrid& q,
                     const std::map<std::string, std::string>& header);

struct RunConfig {
  // input
  std::optional<std::string> input_csv;
  std::optional<PhotocountMoments> input_moments;
  // efficiency
  EfficiencyVector efficiency{};
  // dark noise moments for subtraction (photocount level)
  std::optional<PhotocountMoments> dark;
  // direct coefficients
  std::optional<GsnParams> params;
  // dynamics
  std::optional<CouplingConfig> coupling;
  double t_max = 0.0;
  int t_points = 0;
  // grids / analysis knobs
  double target_tail = 1e-10;
  std::int64_t cell_budget = 40'000'000;
  double s = 0.0;
  bool have_s = false;
  std::optional<double> w0_max, w12_max;
  int n_w0 = 101, n_w12 = 101;
  std::optional<std::int64_t> n0;
  std::int64_t n0_min = 1, n0_max = 20;
  int eta_points = 96;
  int n_eta0 = 41, n_eta12 = 41;
  // simulate
  std::int64_t n_pulses = 0;
  std::uint64_t seed = 1;
  std::optional<NoiseSpec> noise;
  // output
  std::string output_dir = ".";
  int threads = 0;
};

/// Parses and validates the JSON configuration document; unknown keys are
/// rejected.  Throws ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

}  // namespace trimode
