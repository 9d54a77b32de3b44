#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trimode/dynamics.hpp"
#include "trimode/moments.hpp"

namespace trimode {

/// Counter-based generator keyed by (seed, stream): every pulse owns an
/// independent substream, so parallel generation over disjoint pulse ranges
/// reproduces the sequential stream bit for bit.
class PulseRng {
 public:
  using result_type = std::uint64_t;

  PulseRng(std::uint64_t seed, std::uint64_t stream);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// Additive detection-chain noise per arm; the variance selects the model:
/// var == 0 fixed offset, var == mean Poissonian, var > mean
/// negative-binomial.
struct NoiseSpec {
  double mean0 = 0.0, var0 = 0.0;
  double mean12 = 0.0, var12 = 0.0;
};

struct SimConfig {
  GsnParams params;
  EfficiencyVector eta{};
  std::int64_t n_pulses = 0;
  std::uint64_t seed = 0;
  std::optional<NoiseSpec> noise;
  int threads = 0;
};

struct PulseRecord {
  std::int64_t pulse = 0;
  std::int64_t m0 = 0;
  std::int64_t m12 = 0;
};

/// Draws per-pulse photocounts from the classical-regime joint intensity
/// model: whole temporal modes as anomalously coupled complex Gaussian
/// pairs, a fractional remainder mode as a correlated bivariate gamma, then
/// Poisson detection at the configured efficiencies.  Throws
/// NonclassicalParamsError when k012 < 0.
std::vector<PulseRecord> sample_pulses(const SimConfig& cfg);

/// Adds independent integer noise to each arm in place.
void inject_noise(std::vector<PulseRecord>& records, const NoiseSpec& noise,
                  std::uint64_t seed);

/// Bernoulli thinning of recorded counts, detector by detector.
void thin_pulses(std::vector<PulseRecord>& records, double eta0, double eta12,
                 std::uint64_t seed);

/// Moments of a record stream (parallel-merge accumulation).
PhotocountMoments accumulate(const std::vector<PulseRecord>& records, int threads = 0);

}  // namespace trimode
