#include "trimode/sampler.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "trimode/errors.hpp"
#include "trimode/parallel.hpp"

namespace trimode {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

PulseRng::PulseRng(std::uint64_t seed, std::uint64_t stream)
    : state_(splitmix(seed ^ splitmix(stream + 0x853C49E6748FEA9BULL))) {}

PulseRng::result_type PulseRng::operator()() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Real quadrature covariance of (Re a0, Im a0, Re a12, Im a12) for the
// anomalously coupled pair; classical sampling requires it positive
// semidefinite.
void check_feasibility(const GsnParams& g) {
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  cov(0, 0) = cov(1, 1) = 0.5 * g.b0;
  cov(2, 2) = cov(3, 3) = 0.5 * g.b12;
  cov(0, 2) = cov(2, 0) = 0.5 * g.d012;
  cov(1, 3) = cov(3, 1) = -0.5 * g.d012;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(cov, Eigen::EigenvaluesOnly);
  const double floor = -1e-12 * (1.0 + cov.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < floor) {
    throw NonclassicalParamsError(
        "sample_pulses: quadrature covariance is not positive semidefinite; "
        "nonclassical joint statistics (k012 < 0) cannot be sampled classically");
  }
}

struct PulseDraw {
  double w0 = 0.0;
  double w12 = 0.0;
};

PulseDraw draw_intensities(const GsnParams& g, PulseRng& rng) {
  PulseDraw out;
  const auto whole = static_cast<std::int64_t>(g.modes);
  const double frac = g.modes - static_cast<double>(whole);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  const double s0 = std::sqrt(0.5 * g.b0);
  const double resid_var = g.b0 > 0.0 ? g.b12 - g.d012 * g.d012 / g.b0 : g.b12;
  const double sr = std::sqrt(0.5 * std::max(resid_var, 0.0));
  const double couple = g.b0 > 0.0 ? g.d012 / g.b0 : 0.0;
  for (std::int64_t m = 0; m < whole; ++m) {
    const double x0 = s0 * unit_normal(rng);
    const double y0 = s0 * unit_normal(rng);
    // Anomalous coupling pairs a12 with the conjugate of a0.
    const double x12 = couple * x0 + sr * unit_normal(rng);
    const double y12 = -couple * y0 + sr * unit_normal(rng);
    out.w0 += x0 * x0 + y0 * y0;
    out.w12 += x12 * x12 + y12 * y12;
  }
  if (frac > 1e-12) {
    // Fractional remainder: correlated bivariate gamma of shape frac, drawn
    // as gamma -> Poisson mixing -> gamma.  Preserves the first and second
    // intensity moments exactly.
    const double rho = g.b0 * g.b12 > 0.0 ? g.d012 * g.d012 / (g.b0 * g.b12) : 0.0;
    double x = 0.0;
    if (g.b0 > 0.0) {
      std::gamma_distribution<double> gx(frac, g.b0);
      x = gx(rng);
    }
    double y = 0.0;
    if (g.b12 > 0.0) {
      if (rho >= 1.0 - 1e-12) {
        y = x * g.b12 / g.b0;  // perfectly correlated boundary
      } else {
        std::int64_t extra = 0;
        if (rho > 0.0 && x > 0.0) {
          std::poisson_distribution<std::int64_t> mix(rho * x / (g.b0 * (1.0 - rho)));
          extra = mix(rng);
        }
        std::gamma_distribution<double> gy(frac + static_cast<double>(extra),
                                           g.b12 * (1.0 - rho));
        y = gy(rng);
      }
    }
    out.w0 += x;
    out.w12 += y;
  }
  return out;
}

std::int64_t poisson_count(double mean, PulseRng& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> pois(mean);
  return pois(rng);
}

}  // namespace

std::vector<PulseRecord> sample_pulses(const SimConfig& cfg) {
  if (cfg.n_pulses <= 0) throw ConfigError("sample_pulses: n_pulses must be positive");
  if (cfg.params.modes < 1.0) throw ConfigError("sample_pulses: requires modes >= 1");
  cfg.eta.validate();
  if (cfg.params.k012 < -1e-12 * std::max(1.0, cfg.params.b0 * cfg.params.b12)) {
    throw NonclassicalParamsError(
        "sample_pulses: k012 < 0 has no positive classical intensity distribution");
  }
  check_feasibility(cfg.params);
  const double eta12 = cfg.eta.eta12();
  std::vector<PulseRecord> records(cfg.n_pulses);
  parallel_for_chunks(cfg.n_pulses, cfg.threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      PulseRng rng(cfg.seed, static_cast<std::uint64_t>(i));
      const PulseDraw w = draw_intensities(cfg.params, rng);
      records[i].pulse = i;
      records[i].m0 = poisson_count(cfg.eta.eta0 * w.w0, rng);
      records[i].m12 = poisson_count(eta12 * w.w12, rng);
    }
  });
  if (cfg.noise) inject_noise(records, *cfg.noise, cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  return records;
}

namespace {

std::int64_t noise_count(double mean, double var, PulseRng& rng) {
  if (mean < 0.0 || var < 0.0) throw ConfigError("inject_noise: negative noise parameters");
  if (mean == 0.0 && var == 0.0) return 0;
  if (var == 0.0) return std::llround(mean);
  if (var < mean) {
    throw ConfigError("inject_noise: var < mean has no additive classical-noise model here");
  }
  if (var == mean) return poisson_count(mean, rng);
  // Negative binomial via gamma-mixed Poisson.
  const double theta = (var - mean) / mean;
  std::gamma_distribution<double> mix(mean * mean / (var - mean), theta);
  return poisson_count(mix(rng), rng);
}

}  // namespace

void inject_noise(std::vector<PulseRecord>& records, const NoiseSpec& noise,
                  std::uint64_t seed) {
  parallel_for_chunks(static_cast<std::int64_t>(records.size()), 0,
                      [&](std::int64_t begin, std::int64_t end) {
                        for (std::int64_t i = begin; i < end; ++i) {
                          PulseRng rng(seed, static_cast<std::uint64_t>(records[i].pulse) ^
                                                 0xC2B2AE3D27D4EB4FULL);
                          records[i].m0 += noise_count(noise.mean0, noise.var0, rng);
                          records[i].m12 += noise_count(noise.mean12, noise.var12, rng);
                        }
                      });
}

void thin_pulses(std::vector<PulseRecord>& records, double eta0, double eta12,
                 std::uint64_t seed) {
  for (double e : {eta0, eta12}) {
    if (!(e > 0.0) || e > 1.0) throw ConfigError("thin_pulses: eta must lie in (0, 1]");
  }
  parallel_for_chunks(static_cast<std::int64_t>(records.size()), 0,
                      [&](std::int64_t begin, std::int64_t end) {
                        for (std::int64_t i = begin; i < end; ++i) {
                          PulseRng rng(seed, static_cast<std::uint64_t>(records[i].pulse) ^
                                                 0x9E2D6BF5C3A170F3ULL);
                          std::binomial_distribution<std::int64_t> b0(records[i].m0, eta0);
                          records[i].m0 = b0(rng);
                          std::binomial_distribution<std::int64_t> b12(records[i].m12, eta12);
                          records[i].m12 = b12(rng);
                        }
                      });
}

PhotocountMoments accumulate(const std::vector<PulseRecord>& records, int threads) {
  // Fixed-size blocks merged in index order keep the result independent of
  // the worker count.
  constexpr std::int64_t kBlock = 65536;
  const auto n = static_cast<std::int64_t>(records.size());
  const std::int64_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<MomentAccumulator> parts(std::max<std::int64_t>(blocks, 1));
  parallel_for_chunks(blocks, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t b = begin; b < end; ++b) {
      const std::int64_t hi = std::min(n, (b + 1) * kBlock);
      for (std::int64_t i = b * kBlock; i < hi; ++i) {
        parts[b].add(static_cast<double>(records[i].m0), static_cast<double>(records[i].m12));
      }
    }
  });
  MomentAccumulator total;
  for (const auto& p : parts) total.merge(p);
  return total.moments();
}

}  // namespace trimode
