#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trimode/commands.hpp"
#include "trimode/errors.hpp"

namespace {

// Applies command-line overrides on top of the (optional) config document.
struct Overrides {
  std::optional<std::string> input_csv;
  std::optional<double> eta;
  std::optional<double> b0, b12, d012, modes;
  std::optional<double> s, target_tail;
  std::optional<long long> n0, n0_min, n0_max, n_pulses;
  std::optional<unsigned long long> seed;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
  std::optional<double> gamma0, gamma1, t, t_max;

  void apply(trimode::RunConfig& cfg) const {
    if (input_csv) cfg.input_csv = *input_csv;
    if (eta) {
      cfg.efficiency = {*eta, *eta, *eta};
      cfg.efficiency.validate();
    }
    if (b0 || b12 || d012 || modes) {
      trimode::GsnParams base = cfg.params.value_or(trimode::GsnParams{});
      cfg.params = trimode::GsnParams::make(b0.value_or(base.b0), b12.value_or(base.b12),
                                            d012.value_or(base.d012),
                                            modes.value_or(base.modes > 0 ? base.modes : 1.0));
    }
    if (s) {
      cfg.s = *s;
      cfg.have_s = true;
    }
    if (target_tail) cfg.target_tail = *target_tail;
    if (n0) cfg.n0 = *n0;
    if (n0_min) cfg.n0_min = *n0_min;
    if (n0_max) cfg.n0_max = *n0_max;
    if (n_pulses) cfg.n_pulses = *n_pulses;
    if (seed) cfg.seed = *seed;
    if (output_dir) cfg.output_dir = *output_dir;
    if (threads) cfg.threads = *threads;
    if (gamma0 || gamma1 || t || t_max) {
      trimode::CouplingConfig c = cfg.coupling.value_or(trimode::CouplingConfig{});
      if (gamma0) c.gamma0 = {*gamma0, 0.0};
      if (gamma1) c.gamma1 = {*gamma1, 0.0};
      if (t) c.t = *t;
      if (c.modes <= 0) c.modes = 1.0;
      cfg.coupling = c;
      cfg.t_max = t_max.value_or(t.value_or(cfg.t_max > 0 ? cfg.t_max : c.t));
      if (cfg.t_points == 0) cfg.t_points = 64;
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-field parametric photon statistics toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("TRIMODE_CONFIG")) config_path = env;
  app.add_option("-c,--config", config_path, "JSON configuration file");

  Overrides ov;
  app.add_option("--threads", ov.threads, "worker thread cap (0 = hardware)");
  app.add_option("-o,--output-dir", ov.output_dir, "output directory");
  app.add_option("--input-csv", ov.input_csv, "pulse record CSV");
  app.add_option("--eta", ov.eta, "common detection efficiency");
  app.add_option("--b0", ov.b0, "single-field mean noise photons per mode");
  app.add_option("--b12", ov.b12, "compound-field mean noise photons per mode");
  app.add_option("--d012", ov.d012, "cross-correlation modulus");
  app.add_option("--modes", ov.modes, "temporal mode count");
  app.add_option("--s", ov.s, "ordering parameter");
  app.add_option("--target-tail", ov.target_tail, "grid truncation tail mass");
  app.add_option("--n0", ov.n0, "conditioning count");
  app.add_option("--n0-min", ov.n0_min, "sweep lower n0");
  app.add_option("--n0-max", ov.n0_max, "sweep upper n0");
  app.add_option("--n-pulses", ov.n_pulses, "number of simulated pulses");
  app.add_option("--seed", ov.seed, "simulation seed");
  app.add_option("--gamma0", ov.gamma0, "down-conversion coupling (real)");
  app.add_option("--gamma1", ov.gamma1, "amplification coupling (real)");
  app.add_option("--t", ov.t, "interaction time");
  app.add_option("--t-max", ov.t_max, "sweep end time");

  auto* estimate = app.add_subcommand("estimate", "coefficients and diagnostics from counts");
  auto* joint = app.add_subcommand("joint", "joint count distribution grid");
  auto* conditional = app.add_subcommand("conditional", "conditional distributions and Fano factors");
  auto* quasi = app.add_subcommand("quasi", "s-ordered intensity quasi-distribution grid");
  auto* sweep = app.add_subcommand("sweep", "efficiency sweeps and contours");
  auto* simulate = app.add_subcommand("simulate", "synthetic pulse records");
  auto* predict = app.add_subcommand("predict", "coefficients from the couplings");

  CLI11_PARSE(app, argc, argv);

  try {
    trimode::RunConfig cfg;
    if (!config_path.empty()) cfg = trimode::load_config(config_path);
    ov.apply(cfg);
    if (estimate->parsed()) trimode::cmd_estimate(cfg, std::cout);
    if (joint->parsed()) trimode::cmd_joint(cfg, std::cout);
    if (conditional->parsed()) trimode::cmd_conditional(cfg, std::cout);
    if (quasi->parsed()) trimode::cmd_quasi(cfg, std::cout);
    if (sweep->parsed()) trimode::cmd_sweep(cfg, std::cout);
    if (simulate->parsed()) trimode::cmd_simulate(cfg, std::cout);
    if (predict->parsed()) trimode::cmd_predict(cfg, std::cout);
    return 0;
  } catch (const trimode::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const trimode::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const trimode::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
