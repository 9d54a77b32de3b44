#include "trimode/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "trimode/efficiency.hpp"
#include "trimode/errors.hpp"

namespace trimode {

namespace {

using nlohmann::json;

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / name;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file '" + path.string() + "'");
  return out;
}

PhotocountMoments input_moments(const RunConfig& cfg) {
  if (cfg.input_moments) return *cfg.input_moments;
  if (cfg.input_csv) return accumulate(read_pulse_csv_file(*cfg.input_csv), cfg.threads);
  throw ConfigError("estimate: requires input.csv or input.moments");
}

GsnParams required_params(const RunConfig& cfg, const char* command) {
  if (!cfg.params) {
    throw ConfigError(std::string(command) + ": requires the params section (b0, b12, d012, modes)");
  }
  return *cfg.params;
}

json moments_json(const PhotocountMoments& m) {
  return json{{"mean0", m.mean0},   {"mean12", m.mean12}, {"sq0", m.sq0},
              {"sq12", m.sq12},     {"cross", m.cross},   {"n_pulses", m.n_pulses},
              {"kind", m.kind == MomentKind::photon ? "photon" : "photocount"}};
}

json estimate_json(const PhotocountMoments& m, const GsnEstimate& est,
                   const DiagnosticScalars& d, double s_th) {
  return json{
      {"moments", moments_json(m)},
      {"coefficients",
       {{"b0", est.params.b0},
        {"b12", est.params.b12},
        {"d012", est.params.d012},
        {"modes", est.params.modes},
        {"modes0", est.modes0},
        {"modes12", est.modes12},
        {"mode_spread", est.mode_spread},
        {"mode_mismatch_warning", est.mode_mismatch_warning},
        {"k012", est.params.k012}}},
      {"diagnostics",
       {{"k012", d.k012},
        {"noise_reduction", d.noise_reduction},
        {"lambda", d.lambda},
        {"covariance_c", d.covariance_c},
        {"wave_var_diff", d.wave_var_diff},
        {"diff_var", d.diff_var}}},
      {"s_threshold", s_th},
      {"s_threshold_in_range", s_th >= -1.0 && s_th <= 1.0}};
}

void print_level(std::ostream& out, const char* label, const GsnEstimate& est,
                 const DiagnosticScalars& d, double s_th) {
  out << label << '\n';
  out << "  b0 = " << est.params.b0 << "  b12 = " << est.params.b12
      << "  |d012| = " << est.params.d012 << '\n';
  out << "  modes: M0 = " << est.modes0 << "  M12 = " << est.modes12
      << "  M = " << est.params.modes;
  if (est.mode_mismatch_warning) out << "  [warning: mode estimates disagree]";
  out << '\n';
  out << "  k012 = " << d.k012 << "  R = " << d.noise_reduction << "  lambda = " << d.lambda
      << "  C = " << d.covariance_c << '\n';
  out << "  wave variance = " << d.wave_var_diff << "  diff variance = " << d.diff_var
      << "  s_th = " << s_th;
  if (!(s_th >= -1.0 && s_th <= 1.0)) out << "  [outside the ordering range]";
  out << '\n';
}

}  // namespace

void cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  cfg.efficiency.validate();
  PhotocountMoments counts = input_moments(cfg);
  counts.validate();
  if (cfg.dark && counts.kind == MomentKind::photocount) {
    counts = subtract_noise(counts, *cfg.dark);
  }

  const GsnEstimate count_est = estimate_gsn(to_intensity_moments(counts));
  const DiagnosticScalars count_diag = diagnostics(counts, count_est.params);
  const double count_sth = s_threshold(count_est.params);

  const PhotocountMoments photons =
      counts.kind == MomentKind::photocount ? to_photon_moments(counts, cfg.efficiency) : counts;
  const GsnEstimate photon_est = estimate_gsn(to_intensity_moments(photons));
  const DiagnosticScalars photon_diag = diagnostics(photons, photon_est.params);
  const double photon_sth = s_threshold(photon_est.params);

  json report;
  report["photocount"] = estimate_json(counts, count_est, count_diag, count_sth);
  report["photon"] = estimate_json(photons, photon_est, photon_diag, photon_sth);
  report["efficiency"] = {{"eta0", cfg.efficiency.eta0},
                          {"eta1", cfg.efficiency.eta1},
                          {"eta2", cfg.efficiency.eta2}};
  auto file = open_output(cfg, "estimate.json");
  file << report.dump(2) << '\n';

  print_level(out, "photocount level", count_est, count_diag, count_sth);
  print_level(out, "photon level", photon_est, photon_diag, photon_sth);
}

void cmd_joint(const RunConfig& cfg, std::ostream& out) {
  const GsnParams g = required_params(cfg, "joint");
  JointPnOptions o;
  o.target_tail = cfg.target_tail;
  o.cell_budget = cfg.cell_budget;
  o.threads = cfg.threads;
  const JointPn j(g, o);
  auto file = open_output(cfg, "joint.csv");
  write_joint_csv(file, j, {{"command", "joint"}});
  out << "joint grid: n0 <= " << j.n0_max() << ", n12 <= " << j.n12_max()
      << ", tail bound " << j.tail_mass_bound() << ", flagged cells "
      << j.quality().flagged_cells << '\n';
}

void cmd_conditional(const RunConfig& cfg, std::ostream& out) {
  const GsnParams g = required_params(cfg, "conditional");
  JointPnOptions o;
  o.target_tail = cfg.target_tail;
  o.cell_budget = 0;
  o.threads = cfg.threads;
  const JointPn j(g, o);

  if (cfg.n0) {
    const ConditionalPn c = conditional(j, *cfg.n0);
    auto file = open_output(cfg, "conditional.csv");
    std::map<std::string, std::string> h{{"command", "conditional"},
                                         {"n0", std::to_string(c.n0)},
                                         {"mean", format_number(c.mean)},
                                         {"variance", format_number(c.variance)},
                                         {"fano", format_number(c.fano)}};
    write_header_block(file, h);
    file << "n12,prob\n";
    double mass = 0.0;
    for (Eigen::Index i = 0; i < c.probs.size(); ++i) {
      mass += c.probs[i];
      file << (c.n12_lo + i) << ',' << format_number(c.probs[i]) << '\n';
    }
    if (std::fabs(mass - 1.0) > 1e-9) {
      throw NumericError("conditional: emitted distribution does not sum to 1");
    }
  }

  auto fano_file = open_output(cfg, "fano.csv");
  write_header_block(fano_file, {{"command", "conditional"},
                                 {"n0_min", std::to_string(cfg.n0_min)},
                                 {"n0_max", std::to_string(cfg.n0_max)}});
  fano_file << "n0,fano_exact,fano_closed\n";
  std::int64_t crossing = -1;
  double prev = 0.0;
  for (std::int64_t n0 = cfg.n0_min; n0 <= cfg.n0_max; ++n0) {
    const ConditionalPn c = conditional(j, n0);
    const double closed = fano_closed(g, static_cast<double>(n0));
    fano_file << n0 << ',' << format_number(c.fano) << ',' << format_number(closed) << '\n';
    if (n0 > cfg.n0_min && prev >= 1.0 && c.fano < 1.0) crossing = n0;
    prev = c.fano;
  }
  if (crossing >= 0) {
    out << "conditional Fano drops below 1 between n0 = " << crossing - 1 << " and " << crossing
        << '\n';
  } else {
    out << "conditional Fano has no crossing of 1 on [" << cfg.n0_min << ", " << cfg.n0_max
        << "]\n";
  }
}

void cmd_quasi(const RunConfig& cfg, std::ostream& out) {
  const GsnParams g = required_params(cfg, "quasi");
  if (!cfg.have_s) throw ConfigError("quasi: requires grids.s");
  const OrderedParams p = OrderedParams::make(g, cfg.s);
  QuasiAxes axes;
  if (cfg.w0_max || cfg.w12_max) {
    if (!(cfg.w0_max && cfg.w12_max)) {
      throw ConfigError("quasi: give both w0_max and w12_max or neither");
    }
    axes.w0 = Eigen::ArrayXd::LinSpaced(cfg.n_w0, 0.0, *cfg.w0_max);
    axes.w12 = Eigen::ArrayXd::LinSpaced(cfg.n_w12, 0.0, *cfg.w12_max);
  } else {
    axes = QuasiAxes::auto_range(p, cfg.n_w0, cfg.n_w12);
  }
  const QuasiGrid q = quasi_grid(g, cfg.s, axes);
  auto file = open_output(cfg, "quasi.csv");
  write_quasi_csv(file, q, {{"command", "quasi"}});
  out << "quasi grid: branch "
      << (q.branch == QuasiBranch::regular ? "regular" : "generalized-approx")
      << ", min value " << q.values.minCoeff() << '\n';
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const GsnParams g = required_params(cfg, "sweep");
  const std::int64_t n0_ref = cfg.n0.value_or(3000);

  {
    auto file = open_output(cfg, "fano_vs_eta.csv");
    const Eigen::ArrayXd etas =
        Eigen::ArrayXd::LinSpaced(cfg.eta_points, 1.0 / cfg.eta_points, 1.0);
    const Eigen::ArrayX2d curve = fano_vs_eta(g, static_cast<double>(n0_ref), etas);
    write_header_block(file, {{"command", "sweep"}, {"n0", std::to_string(n0_ref)}});
    file << "eta,fano\n";
    for (Eigen::Index i = 0; i < curve.rows(); ++i) {
      file << format_number(curve(i, 0)) << ',' << format_number(curve(i, 1)) << '\n';
    }
  }

  {
    auto file = open_output(cfg, "eta_crit.csv");
    write_header_block(file, {{"command", "sweep"}});
    file << "n0,eta_crit\n";
    std::set<std::int64_t> points;
    const double lo = std::log(static_cast<double>(std::max<std::int64_t>(cfg.n0_min, 1)));
    const double hi = std::log(static_cast<double>(std::max(cfg.n0_max, cfg.n0_min + 1)));
    for (int i = 0; i < 48; ++i) {
      points.insert(static_cast<std::int64_t>(std::llround(std::exp(lo + (hi - lo) * i / 47.0))));
    }
    for (std::int64_t n0 : points) {
      const auto crit = eta_crit(g, static_cast<double>(n0));
      file << n0 << ',' << (crit ? format_number(*crit) : "") << '\n';
    }
  }

  {
    auto file = open_output(cfg, "fano_contour.csv");
    const Eigen::ArrayXd eta0s = Eigen::ArrayXd::LinSpaced(cfg.n_eta0, 1.0 / cfg.n_eta0, 1.0);
    const Eigen::ArrayXd eta12s = Eigen::ArrayXd::LinSpaced(cfg.n_eta12, 1.0 / cfg.n_eta12, 1.0);
    const Eigen::ArrayXXd grid = fano_contour(g, eta0s, eta12s);
    std::map<std::string, std::string> h{{"command", "sweep"}};
    if (g.k012 < 0.0) h["eta0_crit_min"] = format_number(eta0_crit_min(g));
    write_header_block(file, h);
    file << "eta0,eta12,fano_inf\n";
    for (Eigen::Index i = 0; i < eta0s.size(); ++i) {
      for (Eigen::Index j = 0; j < eta12s.size(); ++j) {
        file << format_number(eta0s[i]) << ',' << format_number(eta12s[j]) << ',';
        if (std::isnan(grid(i, j))) {
          file << '\n';  // not determined
        } else {
          file << format_number(grid(i, j)) << '\n';
        }
      }
    }
  }
  out << "sweep written: fano_vs_eta.csv, eta_crit.csv, fano_contour.csv\n";
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SimConfig sim;
  sim.params = required_params(cfg, "simulate");
  sim.eta = cfg.efficiency;
  sim.n_pulses = cfg.n_pulses;
  sim.seed = cfg.seed;
  sim.noise = cfg.noise;
  sim.threads = cfg.threads;
  if (sim.n_pulses <= 0) throw ConfigError("simulate: requires simulate.n_pulses > 0");
  const auto records = sample_pulses(sim);
  auto file = open_output(cfg, "pulses.csv");
  std::map<std::string, std::string> h{{"command", "simulate"},
                                       {"seed", std::to_string(cfg.seed)},
                                       {"b0", format_number(sim.params.b0)},
                                       {"b12", format_number(sim.params.b12)},
                                       {"d012", format_number(sim.params.d012)},
                                       {"modes", format_number(sim.params.modes)},
                                       {"eta0", format_number(sim.eta.eta0)},
                                       {"eta12", format_number(sim.eta.eta12())}};
  write_pulse_csv(file, records, h);
  out << "simulated " << records.size() << " pulses\n";
}

void cmd_predict(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.coupling) throw ConfigError("predict: requires the dynamics section");
  const CouplingConfig base = *cfg.coupling;
  const int points = std::max(cfg.t_points, 2);
  auto file = open_output(cfg, "predict.csv");
  write_header_block(file, {{"command", "predict"},
                            {"gamma0", format_number(base.gamma0.real()) + "+" +
                                           format_number(base.gamma0.imag()) + "i"},
                            {"gamma1", format_number(base.gamma1.real()) + "+" +
                                           format_number(base.gamma1.imag()) + "i"},
                            {"modes", format_number(base.modes)}});
  file << "t,b0,b1,b2,b12,d012,k012,var_w0,var_w12,cov_w0_w12\n";
  if (std::fabs(base.gamma1.imag()) > 0.0) {
    out << "warning: complex gamma1; the compound reduction assumes a real amplification "
           "coupling\n";
  }
  for (int i = 0; i < points; ++i) {
    CouplingConfig c = base;
    c.t = cfg.t_max * static_cast<double>(i) / static_cast<double>(points - 1);
    const TriModeGsn tri = coefficients(evolve(c));
    const GsnParams g = compound(tri, c.modes);
    const CompoundIntensityCovariances w = intensity_covariances(g);
    file << format_number(c.t) << ',' << format_number(tri.b0) << ',' << format_number(tri.b1)
         << ',' << format_number(tri.b2) << ',' << format_number(g.b12) << ','
         << format_number(g.d012) << ',' << format_number(g.k012) << ','
         << format_number(w.var_w0) << ',' << format_number(w.var_w12) << ','
         << format_number(w.cov_w0_w12) << '\n';
  }
  CouplingConfig final = base;
  final.t = cfg.t_max;
  const GsnParams g = compound(coefficients(evolve(final)), final.modes);
  out << "at t = " << final.t << ": b0 = " << g.b0 << ", b12 = " << g.b12
      << ", |d012| = " << g.d012 << ", k012 = " << g.k012 << '\n';
}

}  // namespace trimode
