#include "trimode/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "trimode/errors.hpp"

namespace trimode {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    field.erase(0, field.find_first_not_of(" \t\r"));
    field.erase(field.find_last_not_of(" \t\r") + 1);
    out.push_back(field);
  }
  return out;
}

std::int64_t parse_count(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("pulse csv: bad ") + what + " value '" + s + "'");
  }
}

}  // namespace

std::vector<PulseRecord> read_pulse_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  bool split_arms = false;
  if (header == std::vector<std::string>{"pulse", "m0", "m12"}) {
    split_arms = false;
  } else if (header == std::vector<std::string>{"pulse", "m0", "m1", "m2"}) {
    split_arms = true;
  } else {
    throw DataError("pulse csv: header must be 'pulse,m0,m12' or 'pulse,m0,m1,m2'");
  }
  std::vector<PulseRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("pulse csv: wrong field count in line '" + line + "'");
    }
    PulseRecord r;
    r.pulse = parse_count(fields[0], "pulse");
    r.m0 = parse_count(fields[1], "m0");
    if (split_arms) {
      r.m12 = parse_count(fields[2], "m1") + parse_count(fields[3], "m2");
    } else {
      r.m12 = parse_count(fields[2], "m12");
    }
    records.push_back(r);
  }
  if (records.empty()) throw DataError("pulse csv: no records");
  return records;
}

std::vector<PulseRecord> read_pulse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pulse csv '" + path + "'");
  return read_pulse_csv(in);
}

void write_pulse_csv(std::ostream& out, const std::vector<PulseRecord>& records,
                     const std::map<std::string, std::string>& header) {
  write_header_block(out, header);
  out << "pulse,m0,m12\n";
  for (const auto& r : records) {
    out << r.pulse << ',' << r.m0 << ',' << r.m12 << '\n';
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header_block(std::ostream& out, const std::map<std::string, std::string>& header) {
  for (const auto& [key, value] : header) {
    out << "# " << key << ": " << value << '\n';
  }
}

namespace {

void append_param_header(std::map<std::string, std::string>& h, const GsnParams& g) {
  h["b0"] = format_number(g.b0);
  h["b12"] = format_number(g.b12);
  h["d012"] = format_number(g.d012);
  h["modes"] = format_number(g.modes);
  h["k012"] = format_number(g.k012);
}

}  // namespace

void write_joint_csv(std::ostream& out, const JointPn& j,
                     const std::map<std::string, std::string>& extra_header) {
  std::map<std::string, std::string> h = extra_header;
  append_param_header(h, j.params());
  h["tail_mass_bound"] = format_number(j.tail_mass_bound());
  const auto quality = j.quality();
  double emitted = 0.0;
  std::ostringstream body;
  if (j.dense()) {
    const auto& grid = j.log_grid();
    const auto& flags = j.flag_grid();
    for (std::int64_t n0 = 0; n0 <= j.n0_max(); ++n0) {
      for (std::int64_t n12 = 0; n12 <= j.n12_max(); ++n12) {
        const double lp = grid(n0, n12);
        const double p = std::isfinite(lp) ? std::exp(lp) : 0.0;
        emitted += p;
        body << n0 << ',' << n12 << ',' << format_number(p) << ',' << format_number(lp)
             << ',' << int(flags(n0, n12)) << '\n';
      }
    }
    h["layout"] = "dense";
  } else {
    for (std::int64_t n0 = 0; n0 <= j.n0_max(); ++n0) {
      const auto seg = j.row_window(n0);
      for (Eigen::Index i = 0; i < seg.log_probs.size(); ++i) {
        const double lp = seg.log_probs[i];
        const double p = std::isfinite(lp) ? std::exp(lp) : 0.0;
        emitted += p;
        body << n0 << ',' << (seg.n12_lo + i) << ',' << format_number(p) << ','
             << format_number(lp) << ',' << int(i < Eigen::Index(seg.flags.size()) ? seg.flags[i] : 0)
             << '\n';
      }
    }
    h["layout"] = "row-windows";
  }
  h["flagged_cells"] = std::to_string(j.quality().flagged_cells);
  h["worst_cancellation_nats"] = format_number(quality.worst_cancellation_nats);
  h["emitted_mass"] = format_number(emitted);
  write_header_block(out, h);
  out << "n0,n12,prob,log_prob,flag\n";
  out << body.str();
  // Post-write self-check: the emitted mass must account for everything but
  // the declared tails (window truncation is far below the tail bound).
  if (std::fabs(emitted - 1.0) > j.tail_mass_bound() + 1e-6) {
    throw NumericError("write_joint_csv: emitted probability mass misses 1 beyond the tail bound");
  }
}

void write_quasi_csv(std::ostream& out, const QuasiGrid& q,
                     const std::map<std::string, std::string>& extra_header) {
  std::map<std::string, std::string> h = extra_header;
  append_param_header(h, q.ordered.base);
  h["s"] = format_number(q.ordered.s);
  h["b0s"] = format_number(q.ordered.b0s);
  h["b12s"] = format_number(q.ordered.b12s);
  h["k012s"] = format_number(q.ordered.k012s);
  h["branch"] = q.branch == QuasiBranch::regular ? "regular" : "generalized-approx";
  write_header_block(out, h);
  out << "W0,W12,value\n";
  for (Eigen::Index i = 0; i < q.w0_axis.size(); ++i) {
    for (Eigen::Index jdx = 0; jdx < q.w12_axis.size(); ++jdx) {
      out << format_number(q.w0_axis[i]) << ',' << format_number(q.w12_axis[jdx]) << ','
          << format_number(q.values(i, jdx)) << '\n';
    }
  }
}

namespace {

void require_keys(const json& obj, const char* section,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError(std::string("config: unknown key '") + key + "' in section '" +
                        section + "'");
    }
  }
}

double number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return obj[key].get<double>();
}

PhotocountMoments parse_moments(const json& obj, const char* section) {
  require_keys(obj, section, {"mean0", "mean12", "sq0", "sq12", "cross", "n_pulses", "kind"});
  PhotocountMoments m;
  for (const char* key : {"mean0", "mean12", "sq0", "sq12", "cross"}) {
    if (!obj.contains(key)) {
      throw ConfigError(std::string("config: section '") + section + "' requires '" + key + "'");
    }
  }
  m.mean0 = obj["mean0"].get<double>();
  m.mean12 = obj["mean12"].get<double>();
  m.sq0 = obj["sq0"].get<double>();
  m.sq12 = obj["sq12"].get<double>();
  m.cross = obj["cross"].get<double>();
  m.n_pulses = static_cast<std::int64_t>(number_or(obj, "n_pulses", 0));
  m.kind = MomentKind::photocount;
  if (obj.contains("kind")) {
    const std::string kind = obj["kind"].get<std::string>();
    if (kind == "photon") {
      m.kind = MomentKind::photon;
    } else if (kind != "photocount") {
      throw ConfigError("config: moment kind must be 'photocount' or 'photon'");
    }
  }
  return m;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }
  require_keys(root, "(top level)",
               {"input", "efficiency", "noise", "params", "dynamics", "grids", "simulate",
                "output", "threads"});
  RunConfig cfg;
  if (root.contains("input")) {
    const auto& in = root["input"];
    require_keys(in, "input", {"csv", "moments"});
    if (in.contains("csv") && in.contains("moments")) {
      throw ConfigError("config: input must give either 'csv' or 'moments', not both");
    }
    if (in.contains("csv")) cfg.input_csv = in["csv"].get<std::string>();
    if (in.contains("moments")) cfg.input_moments = parse_moments(in["moments"], "input.moments");
  }
  if (root.contains("efficiency")) {
    const auto& e = root["efficiency"];
    require_keys(e, "efficiency", {"eta", "eta0", "eta1", "eta2"});
    if (e.contains("eta")) {
      const double eta = e["eta"].get<double>();
      cfg.efficiency = {eta, eta, eta};
    }
    cfg.efficiency.eta0 = number_or(e, "eta0", cfg.efficiency.eta0);
    cfg.efficiency.eta1 = number_or(e, "eta1", cfg.efficiency.eta1);
    cfg.efficiency.eta2 = number_or(e, "eta2", cfg.efficiency.eta2);
    cfg.efficiency.validate();
  }
  if (root.contains("noise")) {
    const auto& n = root["noise"];
    require_keys(n, "noise", {"mean0", "var0", "mean12", "var12", "cov"});
    NoiseSpec spec;
    spec.mean0 = number_or(n, "mean0", 0.0);
    spec.var0 = number_or(n, "var0", 0.0);
    spec.mean12 = number_or(n, "mean12", 0.0);
    spec.var12 = number_or(n, "var12", 0.0);
    cfg.noise = spec;
    PhotocountMoments dark;
    dark.mean0 = spec.mean0;
    dark.mean12 = spec.mean12;
    dark.sq0 = spec.var0 + spec.mean0 * spec.mean0;
    dark.sq12 = spec.var12 + spec.mean12 * spec.mean12;
    const double cov = number_or(n, "cov", 0.0);
    dark.cross = cov + spec.mean0 * spec.mean12;
    cfg.dark = dark;
  }
  if (root.contains("params")) {
    const auto& p = root["params"];
    require_keys(p, "params", {"b0", "b12", "d012", "modes"});
    for (const char* key : {"b0", "b12", "d012", "modes"}) {
      if (!p.contains(key)) {
        throw ConfigError(std::string("config: params requires '") + key + "'");
      }
    }
    cfg.params = GsnParams::make(p["b0"].get<double>(), p["b12"].get<double>(),
                                 p["d012"].get<double>(), p["modes"].get<double>());
  }
  if (root.contains("dynamics")) {
    const auto& d = root["dynamics"];
    require_keys(d, "dynamics", {"gamma0", "gamma1", "t", "t_max", "t_points", "modes"});
    CouplingConfig c;
    auto parse_gamma = [&](const char* key) -> std::complex<double> {
      if (!d.contains(key)) throw ConfigError(std::string("config: dynamics requires '") + key + "'");
      const auto& g = d[key];
      if (g.is_number()) return {g.get<double>(), 0.0};
      if (g.is_array() && g.size() == 2) return {g[0].get<double>(), g[1].get<double>()};
      throw ConfigError(std::string("config: '") + key + "' must be a number or [re, im]");
    };
    c.gamma0 = parse_gamma("gamma0");
    c.gamma1 = parse_gamma("gamma1");
    c.t = number_or(d, "t", 1.0);
    c.modes = number_or(d, "modes", 1.0);
    cfg.coupling = c;
    cfg.t_max = number_or(d, "t_max", c.t);
    cfg.t_points = static_cast<int>(number_or(d, "t_points", 64));
  }
  if (root.contains("grids")) {
    const auto& g = root["grids"];
    require_keys(g, "grids",
                 {"target_tail", "cell_budget", "s", "w0_max", "w12_max", "n_w0", "n_w12",
                  "n0", "n0_min", "n0_max", "eta_points", "n_eta0", "n_eta12"});
    cfg.target_tail = number_or(g, "target_tail", cfg.target_tail);
    cfg.cell_budget = static_cast<std::int64_t>(number_or(g, "cell_budget",
                                                          static_cast<double>(cfg.cell_budget)));
    if (g.contains("s")) {
      cfg.s = g["s"].get<double>();
      cfg.have_s = true;
    }
    if (g.contains("w0_max")) cfg.w0_max = g["w0_max"].get<double>();
    if (g.contains("w12_max")) cfg.w12_max = g["w12_max"].get<double>();
    cfg.n_w0 = static_cast<int>(number_or(g, "n_w0", cfg.n_w0));
    cfg.n_w12 = static_cast<int>(number_or(g, "n_w12", cfg.n_w12));
    if (g.contains("n0")) cfg.n0 = static_cast<std::int64_t>(g["n0"].get<double>());
    cfg.n0_min = static_cast<std::int64_t>(number_or(g, "n0_min", static_cast<double>(cfg.n0_min)));
    cfg.n0_max = static_cast<std::int64_t>(number_or(g, "n0_max", static_cast<double>(cfg.n0_max)));
    cfg.eta_points = static_cast<int>(number_or(g, "eta_points", cfg.eta_points));
    cfg.n_eta0 = static_cast<int>(number_or(g, "n_eta0", cfg.n_eta0));
    cfg.n_eta12 = static_cast<int>(number_or(g, "n_eta12", cfg.n_eta12));
  }
  if (root.contains("simulate")) {
    const auto& s = root["simulate"];
    require_keys(s, "simulate", {"n_pulses", "seed"});
    cfg.n_pulses = static_cast<std::int64_t>(number_or(s, "n_pulses", 0));
    cfg.seed = static_cast<std::uint64_t>(number_or(s, "seed", 1));
  }
  if (root.contains("output")) {
    const auto& o = root["output"];
    require_keys(o, "output", {"dir"});
    if (o.contains("dir")) cfg.output_dir = o["dir"].get<std::string>();
  }
  if (root.contains("threads")) {
    cfg.threads = root["threads"].get<int>();
    if (cfg.threads < 0) throw ConfigError("config: threads must be >= 0");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace trimode
