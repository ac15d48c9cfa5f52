#include "hqed/config.hpp"

#include "hqed/csv.hpp"
#include "hqed/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace hqed {

namespace {

using json = nlohmann::json;

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawConfig {
  std::string origin;
  std::map<std::string, std::map<std::string, RawEntry>> sections;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

RawConfig parse_raw(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": empty section name");
      raw.sections[section];  // a section may be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected 'key = value'");
    if (section.empty())
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": empty key or value");
    auto& sec = raw.sections[section];
    if (sec.count(key))
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": duplicate key '" + key + "'");
    sec[key] = RawEntry{value, lineno, false};
  }
  return raw;
}

enum class Kind { FreqGHz, FreqMHz, TimeNs, Flux, Number, Angle };

const std::map<std::string, double>* unit_table(Kind kind) {
  static const std::map<std::string, double> freq{
      {"GHz", 1.0}, {"MHz", 1e-3}, {"kHz", 1e-6}, {"Hz", 1e-9}};
  static const std::map<std::string, double> time{
      {"ns", 1.0}, {"us", 1e3}, {"ms", 1e6}, {"s", 1e9}};
  static const std::map<std::string, double> flux{{"", 1.0}, {"Phi0", 1.0}};
  static const std::map<std::string, double> bare{{"", 1.0}};
  static const std::map<std::string, double> angle{{"", 1.0}, {"rad", 1.0}};
  switch (kind) {
    case Kind::FreqGHz:
    case Kind::FreqMHz: return &freq;
    case Kind::TimeNs: return &time;
    case Kind::Flux: return &flux;
    case Kind::Angle: return &angle;
    case Kind::Number: return &bare;
  }
  return &bare;
}

const char* canonical_unit(Kind kind) {
  switch (kind) {
    case Kind::FreqGHz: return "GHz";
    case Kind::FreqMHz: return "MHz";
    case Kind::TimeNs: return "ns";
    case Kind::Flux: return "";
    case Kind::Angle: return "rad";
    case Kind::Number: return "";
  }
  return "";
}

class ConfigReader {
 public:
  explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has_section(const std::string& sec) const {
    return raw_.sections.count(sec) != 0;
  }

  double quantity(const std::string& sec, const std::string& key, Kind kind,
                  double def, bool required = false) {
    const RawEntry* e = lookup(sec, key, required);
    double value = def;
    if (e) {
      std::istringstream ss(e->value);
      std::string num_tok, unit_tok, extra;
      ss >> num_tok >> unit_tok >> extra;
      if (!extra.empty()) fail(sec, key, e, "trailing tokens");
      char* end = nullptr;
      const double num = std::strtod(num_tok.c_str(), &end);
      if (end == num_tok.c_str() || *end != '\0' || !std::isfinite(num))
        fail(sec, key, e, "malformed number '" + num_tok + "'");
      const auto* units = unit_table(kind);
      const bool dimensioned = kind == Kind::FreqGHz || kind == Kind::FreqMHz ||
                               kind == Kind::TimeNs;
      if (dimensioned && unit_tok.empty())
        fail(sec, key, e, "missing unit (e.g. MHz, GHz, ns)");
      auto it = units->find(unit_tok);
      if (it == units->end())
        fail(sec, key, e, "unsupported unit '" + unit_tok + "'");
      value = num * it->second;
      if (kind == Kind::FreqMHz) value *= 1e3;  // table converts to GHz
    }
    note(sec, key, value, kind);
    return value;
  }

  int integer(const std::string& sec, const std::string& key, int def,
              bool required = false) {
    const RawEntry* e = lookup(sec, key, required);
    long value = def;
    if (e) {
      char* end = nullptr;
      value = std::strtol(e->value.c_str(), &end, 10);
      if (end == e->value.c_str() || *end != '\0')
        fail(sec, key, e, "malformed integer");
    }
    resolved[sec][key] = std::to_string(value);
    return static_cast<int>(value);
  }

  bool boolean(const std::string& sec, const std::string& key, bool def) {
    const RawEntry* e = lookup(sec, key, false);
    bool value = def;
    if (e) {
      if (e->value == "true") value = true;
      else if (e->value == "false") value = false;
      else fail(sec, key, e, "expected true or false");
    }
    resolved[sec][key] = value ? "true" : "false";
    return value;
  }

  std::string word(const std::string& sec, const std::string& key,
                   const std::string& def, bool required = false) {
    const RawEntry* e = lookup(sec, key, required);
    const std::string value = e ? e->value : def;
    resolved[sec][key] = value;
    return value;
  }

  std::vector<std::string> word_list(const std::string& sec,
                                     const std::string& key,
                                     const std::string& def) {
    const std::string joined = word(sec, key, def);
    std::vector<std::string> out;
    std::istringstream ss(joined);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }

  // Every key in the file must have been consumed by a getter.
  void finish() const {
    for (const auto& [sec, entries] : raw_.sections) {
      for (const auto& [key, e] : entries) {
        if (!e.used)
          throw config_error(raw_.origin + ":" + std::to_string(e.line) +
                             ": unknown key '" + sec + "." + key + "'");
      }
    }
  }

  std::map<std::string, std::map<std::string, std::string>> resolved;

 private:
  const RawEntry* lookup(const std::string& sec, const std::string& key,
                         bool required) {
    auto sit = raw_.sections.find(sec);
    if (sit == raw_.sections.end()) {
      if (required)
        throw config_error(raw_.origin + ": missing required key '" + sec +
                           "." + key + "'");
      return nullptr;
    }
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) {
      if (required)
        throw config_error(raw_.origin + ": missing required key '" + sec +
                           "." + key + "'");
      return nullptr;
    }
    kit->second.used = true;
    return &kit->second;
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key,
                         const RawEntry* e, const std::string& why) {
    throw config_error(raw_.origin + ":" + std::to_string(e->line) + ": '" +
                       sec + "." + key + "': " + why);
  }

  void note(const std::string& sec, const std::string& key, double value,
            Kind kind) {
    std::string repr = fmt_g12(value);
    const char* unit = canonical_unit(kind);
    if (*unit) repr += std::string(" ") + unit;
    resolved[sec][key] = repr;
  }

  RawConfig raw_;
};

void read_device_sections(ConfigReader& r, DeviceParams& dev,
                          FluxBias& bias) {
  DeviceParams d;  // defaults
  dev.squid.omega0 = r.quantity("squid", "omega0", Kind::FreqGHz, d.squid.omega0);
  dev.squid.beta = r.quantity("squid", "beta", Kind::Number, d.squid.beta);
  dev.squid.gamma = r.quantity("squid", "gamma", Kind::Number, d.squid.gamma);
  dev.squid.phi_c = r.quantity("squid", "phi_c", Kind::Flux, d.squid.phi_c);
  dev.squid.n_sq = r.integer("squid", "junctions", d.squid.n_sq);
  dev.squid.n_sj = r.integer("squid", "stray_junctions", d.squid.n_sj);
  dev.squid.kappa_ext =
      r.quantity("squid", "kappa_ext", Kind::FreqMHz, d.squid.kappa_ext);
  dev.squid.kappa_int =
      r.quantity("squid", "kappa_int", Kind::FreqMHz, d.squid.kappa_int);

  dev.transmon.e_c = r.quantity("transmon", "e_c", Kind::FreqMHz, d.transmon.e_c);
  dev.transmon.e_j0 =
      r.quantity("transmon", "e_j0", Kind::FreqGHz, d.transmon.e_j0);
  dev.transmon.omega_pl =
      r.quantity("transmon", "omega_pl", Kind::FreqGHz, d.transmon.omega_pl);
  dev.transmon.alpha =
      r.quantity("transmon", "alpha", Kind::Number, d.transmon.alpha);
  dev.transmon.phi_tr_offset = r.quantity("transmon", "phi_tr", Kind::Flux,
                                          d.transmon.phi_tr_offset);
  dev.transmon.n_g = r.quantity("transmon", "n_g", Kind::Number, d.transmon.n_g);

  dev.coupling.g0_tr_sq =
      r.quantity("coupling", "g0_tr_sq", Kind::FreqMHz, d.coupling.g0_tr_sq);
  dev.coupling.g0_tr_50 =
      r.quantity("coupling", "g0_tr_50", Kind::FreqMHz, d.coupling.g0_tr_50);
  dev.coupling.g0_dqd_sq =
      r.quantity("coupling", "g0_dqd_sq", Kind::FreqMHz, d.coupling.g0_dqd_sq);
  dev.coupling.omega_r50 =
      r.quantity("coupling", "omega_r50", Kind::FreqGHz, d.coupling.omega_r50);

  dev.dqd.t_c = r.quantity("dqd", "t_c", Kind::FreqMHz, d.dqd.t_c);
  dev.dqd.delta = r.quantity("dqd", "delta", Kind::FreqMHz, d.dqd.delta);
  dev.dqd.gamma2 = r.quantity("dqd", "gamma2", Kind::FreqMHz, d.dqd.gamma2);

  dev.kappa50_ext =
      r.quantity("readout", "kappa_ext", Kind::FreqMHz, d.kappa50_ext);
  dev.kappa50_int =
      r.quantity("readout", "kappa_int", Kind::FreqMHz, d.kappa50_int);

  dev.t1_tr = r.quantity("rates", "t1_tr", Kind::TimeNs, d.t1_tr);
  dev.t2star_tr = r.quantity("rates", "t2star_tr", Kind::TimeNs, d.t2star_tr);

  bias.phi_sq = r.quantity("bias", "phi_sq", Kind::Flux, 0.0);
  bias.phi_tr = r.quantity("bias", "phi_tr", Kind::Flux, 0.0);
}

void read_point_section(ConfigReader& r, OperatingPoint& pt) {
  pt.two_t_c = r.quantity("point", "two_t_c", Kind::FreqMHz, 0.0);
  pt.delta = r.quantity("point", "delta", Kind::FreqMHz, 0.0);
  pt.omega_tr = r.quantity("point", "omega_tr", Kind::FreqGHz, 0.0);
  pt.e_j = r.quantity("point", "e_j", Kind::FreqGHz, 0.0);
  pt.omega_r_sq = r.quantity("point", "omega_r_sq", Kind::FreqGHz, 0.0);
  pt.omega_r_50 = r.quantity("point", "omega_r_50", Kind::FreqGHz, 0.0);
  pt.g_tr_sq = r.quantity("point", "g_tr_sq", Kind::FreqMHz, 0.0);
  pt.g_dqd_sq = r.quantity("point", "g_dqd_sq", Kind::FreqMHz, 0.0);
  pt.g_tr_50 = r.quantity("point", "g_tr_50", Kind::FreqMHz, 0.0);
}

ExperimentType parse_type(const std::string& word) {
  if (word == "spectrum-sweep") return ExperimentType::SpectrumSweep;
  if (word == "rabi") return ExperimentType::Rabi;
  if (word == "s11") return ExperimentType::S11;
  if (word == "chevron") return ExperimentType::Chevron;
  if (word == "fit") return ExperimentType::Fit;
  throw config_error("unknown experiment type '" + word + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  ConfigReader r(parse_raw(text, origin));
  RunConfig cfg;

  cfg.type = parse_type(r.word("experiment", "type", "", true));

  cfg.numerics.n_sq = r.integer("numerics", "n_sq", 5);
  cfg.numerics.n_50 = r.integer("numerics", "n_50", 3);
  cfg.numerics.n_tr = r.integer("numerics", "n_tr", 4);
  cfg.numerics.charge_cutoff = r.integer("numerics", "charge_cutoff", 20);
  cfg.numerics.include_dqd = r.boolean("numerics", "include_dqd", true);

  read_device_sections(r, cfg.device, cfg.bias);
  cfg.numerics.e_c = cfg.device.transmon.e_c;
  cfg.numerics.n_g = cfg.device.transmon.n_g;

  cfg.use_flux_model = !r.has_section("point");
  if (r.has_section("point")) read_point_section(r, cfg.point);

  switch (cfg.type) {
    case ExperimentType::SpectrumSweep: {
      cfg.sweep.axis = r.word("sweep", "axis", "", true);
      const bool flux_axis =
          cfg.sweep.axis == "phi_tr" || cfg.sweep.axis == "phi_sq";
      const Kind kind = flux_axis ? Kind::Flux : Kind::FreqMHz;
      cfg.sweep.start = r.quantity("sweep", "start", kind, 0.0, true);
      cfg.sweep.stop = r.quantity("sweep", "stop", kind, 0.0, true);
      cfg.sweep.points = r.integer("sweep", "points", 0, true);
      cfg.sweep.transitions = r.integer("sweep", "transitions", 6);
      if (cfg.sweep.axis != "delta" && cfg.sweep.axis != "omega_tr" &&
          !flux_axis)
        throw config_error("unknown sweep axis '" + cfg.sweep.axis + "'");
      if (cfg.sweep.points < 2 || !(cfg.sweep.stop > cfg.sweep.start))
        throw config_error("sweep range is empty: need stop > start and >= 2 points");
      if (cfg.sweep.transitions < 1)
        throw config_error("sweep.transitions must be >= 1");
      if (!cfg.use_flux_model && flux_axis)
        throw config_error("flux axes need the flux model (no [point] section)");
      if (cfg.use_flux_model && cfg.sweep.axis == "omega_tr")
        throw config_error("omega_tr axis needs a [point] section");
      break;
    }
    case ExperimentType::S11: {
      cfg.s11.f_min = r.quantity("s11", "f_min", Kind::FreqGHz, 0.0, true);
      cfg.s11.f_max = r.quantity("s11", "f_max", Kind::FreqGHz, 0.0, true);
      cfg.s11.points = r.integer("s11", "points", 2001);
      cfg.s11.phase = r.quantity("s11", "phase", Kind::Angle, 0.0);
      if (!(cfg.s11.f_max > cfg.s11.f_min) || cfg.s11.points < 2)
        throw config_error("s11 probe range is empty");
      break;
    }
    case ExperimentType::Rabi: {
      cfg.rabi.resonator = r.word("rabi", "resonator", "sq");
      cfg.rabi.span = r.quantity("rabi", "span", Kind::FreqMHz, 0.0);
      cfg.rabi.points = r.integer("rabi", "points", 2001);
      if (cfg.rabi.resonator != "sq" && cfg.rabi.resonator != "50")
        throw config_error("rabi.resonator must be sq or 50");
      break;
    }
    case ExperimentType::Chevron: {
      cfg.chevron.two_j = r.quantity("chevron", "two_j", Kind::FreqMHz, 21.6);
      cfg.chevron.amp_min = r.quantity("chevron", "amp_min", Kind::Number, 0.0);
      cfg.chevron.amp_max = r.quantity("chevron", "amp_max", Kind::Number, 1.0);
      cfg.chevron.amp_points = r.integer("chevron", "amp_points", 21);
      cfg.chevron.tau_min = r.quantity("chevron", "tau_min", Kind::TimeNs, 0.0);
      cfg.chevron.tau_max = r.quantity("chevron", "tau_max", Kind::TimeNs, 250.0);
      cfg.chevron.tau_points = r.integer("chevron", "tau_points", 126);
      cfg.chevron.step_ns = r.quantity("chevron", "step", Kind::TimeNs, 0.05);
      cfg.chevron.pulse.filter_sigma_ns =
          r.quantity("pulse", "sigma", Kind::TimeNs, 3.0);
      cfg.chevron.pulse.prep_offset_ns =
          r.quantity("pulse", "prep_offset", Kind::TimeNs, 23.0);
      cfg.chevron.pulse.resonant_amplitude =
          r.quantity("pulse", "resonant_amp", Kind::Number, 0.6);
      cfg.chevron.pulse.slope_ghz =
          r.quantity("pulse", "slope", Kind::FreqMHz, 216.0) * 1e-3;
      cfg.chevron.pulse.omega_dqd_ghz =
          r.quantity("pulse", "omega_dqd", Kind::FreqGHz, 3.660);
      cfg.chevron.rates.t1_tr = cfg.device.t1_tr;
      cfg.chevron.rates.t2star_tr = cfg.device.t2star_tr;
      cfg.chevron.rates.gamma2_dqd = cfg.device.dqd.gamma2;
      if (cfg.chevron.amp_points < 1 || cfg.chevron.tau_points < 2)
        throw config_error("chevron grid is empty");
      if (cfg.chevron.step_ns <= 0.0)
        throw config_error("chevron.step must be > 0");
      break;
    }
    case ExperimentType::Fit: {
      cfg.fit.mode = r.word("fit", "mode", "roundtrip");
      cfg.fit.free_names = r.word_list(
          "fit", "free", "omega_pl omega_r_sq0 beta g0_tr_sq g0_tr_50");
      cfg.fit.perturb = r.quantity("fit", "perturb", Kind::Number, 0.10);
      cfg.fit.seed = static_cast<unsigned>(r.integer("fit", "seed", 1));
      cfg.fit.phi_min = r.quantity("fit", "phi_min", Kind::Flux, -0.3);
      cfg.fit.phi_max = r.quantity("fit", "phi_max", Kind::Flux, 0.3);
      cfg.fit.phi_points = r.integer("fit", "phi_points", 31);
      cfg.fit.observations = r.word("fit", "observations", "");
      cfg.fit.max_iter = r.integer("fit", "max_iter", 2000);
      if (cfg.fit.mode != "roundtrip" && cfg.fit.mode != "csv")
        throw config_error("fit.mode must be roundtrip or csv");
      if (cfg.fit.mode == "csv" && cfg.fit.observations.empty())
        throw config_error("fit.observations path required in csv mode");
      if (cfg.fit.free_names.empty())
        throw config_error("fit.free must name at least one parameter");
      break;
    }
  }

  r.finish();
  cfg.resolved = r.resolved;
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

DeviceParams read_device_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open device file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ConfigReader r(parse_raw(ss.str(), path));
  DeviceParams dev;
  FluxBias bias;
  read_device_sections(r, dev, bias);
  r.finish();
  return dev;
}

void write_device_file(const std::string& path, const DeviceParams& dev) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "# device parameter set\n";
  out << "[squid]\n";
  out << "omega0 = " << fmt_g12(dev.squid.omega0) << " GHz\n";
  out << "beta = " << fmt_g12(dev.squid.beta) << "\n";
  out << "gamma = " << fmt_g12(dev.squid.gamma) << "\n";
  out << "phi_c = " << fmt_g12(dev.squid.phi_c) << "\n";
  out << "junctions = " << dev.squid.n_sq << "\n";
  out << "stray_junctions = " << dev.squid.n_sj << "\n";
  out << "kappa_ext = " << fmt_g12(dev.squid.kappa_ext) << " MHz\n";
  out << "kappa_int = " << fmt_g12(dev.squid.kappa_int) << " MHz\n";
  out << "[transmon]\n";
  out << "e_c = " << fmt_g12(dev.transmon.e_c) << " MHz\n";
  out << "e_j0 = " << fmt_g12(dev.transmon.e_j0) << " GHz\n";
  out << "omega_pl = " << fmt_g12(dev.transmon.omega_pl) << " GHz\n";
  out << "alpha = " << fmt_g12(dev.transmon.alpha) << "\n";
  out << "phi_tr = " << fmt_g12(dev.transmon.phi_tr_offset) << "\n";
  out << "n_g = " << fmt_g12(dev.transmon.n_g) << "\n";
  out << "[coupling]\n";
  out << "g0_tr_sq = " << fmt_g12(dev.coupling.g0_tr_sq) << " MHz\n";
  out << "g0_tr_50 = " << fmt_g12(dev.coupling.g0_tr_50) << " MHz\n";
  out << "g0_dqd_sq = " << fmt_g12(dev.coupling.g0_dqd_sq) << " MHz\n";
  out << "omega_r50 = " << fmt_g12(dev.coupling.omega_r50) << " GHz\n";
  out << "[dqd]\n";
  out << "t_c = " << fmt_g12(dev.dqd.t_c) << " MHz\n";
  out << "delta = " << fmt_g12(dev.dqd.delta) << " MHz\n";
  out << "gamma2 = " << fmt_g12(dev.dqd.gamma2) << " MHz\n";
  out << "[readout]\n";
  out << "kappa_ext = " << fmt_g12(dev.kappa50_ext) << " MHz\n";
  out << "kappa_int = " << fmt_g12(dev.kappa50_int) << " MHz\n";
  out << "[rates]\n";
  out << "t1_tr = " << fmt_g12(dev.t1_tr) << " ns\n";
  out << "t2star_tr = " << fmt_g12(dev.t2star_tr) << " ns\n";
  if (!out) throw config_error("write failed for '" + path + "'");
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
  return v;
}

HamiltonianBuilder make_builder(const RunConfig& cfg,
                                const std::string& axis) {
  const AssembleOptions opts = cfg.numerics;
  if (!cfg.use_flux_model) {
    const OperatingPoint base = cfg.point;
    if (axis == "delta")
      return [base, opts](double v) {
        OperatingPoint p = base;
        p.delta = v;
        return assemble(p, opts);
      };
    if (axis == "omega_tr")
      return [base, opts](double v) {
        OperatingPoint p = base;
        p.omega_tr = v * 1e-3;  // axis in MHz
        p.e_j = 0.0;            // recalibrate at each point
        return assemble(p, opts);
      };
    throw config_error("axis '" + axis + "' not valid for an operating point");
  }
  const DeviceParams dev = cfg.device;
  const FluxBias bias0 = cfg.bias;
  if (axis == "phi_tr")
    return [dev, bias0, opts](double v) {
      FluxBias b = bias0;
      b.phi_tr = v;
      return assemble(flux_point(dev, b), opts);
    };
  if (axis == "phi_sq")
    return [dev, bias0, opts](double v) {
      FluxBias b = bias0;
      b.phi_sq = v;
      return assemble(flux_point(dev, b), opts);
    };
  if (axis == "delta")
    return [dev, bias0, opts](double v) {
      DeviceParams d = dev;
      d.dqd.delta = v;
      return assemble(flux_point(d, bias0), opts);
    };
  throw config_error("axis '" + axis + "' not valid for the flux model");
}

SystemHamiltonian assemble_fixed(const RunConfig& cfg) {
  if (cfg.use_flux_model)
    return assemble(flux_point(cfg.device, cfg.bias), cfg.numerics);
  return assemble(cfg.point, cfg.numerics);
}

json config_json(const RunConfig& cfg) {
  json j;
  j["config"] = cfg.resolved;
  j["version"] = "hybridqed 0.1.0";
  return j;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

ReflectionSpec reflection_spec(const RunConfig& cfg) {
  ReflectionSpec spec;
  spec.sq = {cfg.device.squid.kappa_ext, cfg.device.squid.kappa_int};
  spec.r50 = {cfg.device.kappa50_ext, cfg.device.kappa50_int};
  spec.multiplex_phase = cfg.s11.phase;
  return spec;
}

}  // namespace

RunOutput cmd_spectrum(const RunConfig& cfg, const std::string& out_dir,
                       SweepResult* sweep_out) {
  std::filesystem::create_directories(out_dir);
  const std::vector<double> axis =
      linspace(cfg.sweep.start, cfg.sweep.stop, cfg.sweep.points);
  SweepOptions opts;
  opts.n_transitions = cfg.sweep.transitions;
  opts.threads = cfg.threads;
  const SweepResult sweep =
      sweep_spectrum(make_builder(cfg, cfg.sweep.axis), cfg.sweep.axis, axis,
                     opts);

  CsvTable table;
  table.header.push_back(cfg.sweep.axis);
  for (int k = 0; k < cfg.sweep.transitions; ++k) {
    table.header.push_back("f" + std::to_string(k) + "_ghz");
    table.header.push_back("w_sq_" + std::to_string(k));
    table.header.push_back("w_50_" + std::to_string(k));
  }
  json errors = json::array();
  for (size_t i = 0; i < sweep.points.size(); ++i) {
    const SweepPoint& p = sweep.points[i];
    std::vector<std::string> row{fmt_g12(sweep.axis[i])};
    for (int k = 0; k < cfg.sweep.transitions; ++k) {
      if (p.ok && k < static_cast<int>(p.transitions.size())) {
        row.push_back(fmt_g12(p.transitions[k].freq));
        row.push_back(fmt_g12(p.transitions[k].w_sq));
        row.push_back(fmt_g12(p.transitions[k].w_50));
      } else {
        row.insert(row.end(), {"nan", "nan", "nan"});
      }
    }
    table.rows.push_back(std::move(row));
    if (!p.ok) errors.push_back({{"index", i}, {"message", p.error}});
  }

  json meta = config_json(cfg);
  meta["experiment"] = "spectrum-sweep";
  meta["errors"] = errors;
  try {
    const AvoidedCrossing ac = find_avoided_crossing(sweep, 0, 1);
    meta["avoided_crossing"] = {{"location", ac.location},
                                {"gap_mhz", ac.gap_mhz},
                                {"branches", {ac.branch_lo, ac.branch_hi}}};
  } catch (const numeric_error&) {
    // no crossing between the two lowest branches; fine
  }

  const std::string csv_path = join_path(out_dir, "spectrum.csv");
  const std::string json_path = join_path(out_dir, "spectrum.json");
  write_csv(csv_path, table);
  write_json(json_path, meta);
  if (sweep_out) *sweep_out = sweep;
  return {{csv_path, json_path}};
}

RunOutput cmd_chevron(const RunConfig& cfg, const std::string& out_dir,
                      ChevronResult* chevron_out) {
  std::filesystem::create_directories(out_dir);
  const std::vector<double> amps =
      linspace(cfg.chevron.amp_min, cfg.chevron.amp_max, cfg.chevron.amp_points);
  const std::vector<double> taus =
      linspace(cfg.chevron.tau_min, cfg.chevron.tau_max, cfg.chevron.tau_points);
  ChevronOptions opts;
  opts.threads = cfg.threads;
  opts.evolve.step_ns = cfg.chevron.step_ns;
  const ChevronResult res = run_chevron(cfg.chevron.two_j, cfg.chevron.pulse,
                                        cfg.chevron.rates, amps, taus, opts);

  CsvTable table;
  table.header.push_back("tau_ns");
  for (double a : amps) table.header.push_back("amp_" + fmt_g12(a));
  for (size_t it = 0; it < taus.size(); ++it) {
    std::vector<std::string> row{fmt_g12(taus[it])};
    for (size_t ia = 0; ia < amps.size(); ++ia)
      row.push_back(fmt_g12(res.population(it, ia)));
    table.rows.push_back(std::move(row));
  }

  json meta = config_json(cfg);
  meta["experiment"] = "chevron";
  meta["two_j_mhz"] = cfg.chevron.two_j;
  meta["integrator_step_ns"] = cfg.chevron.step_ns;

  const std::string csv_path = join_path(out_dir, "chevron.csv");
  const std::string json_path = join_path(out_dir, "chevron.json");
  write_csv(csv_path, table);
  write_json(json_path, meta);
  if (chevron_out) *chevron_out = res;
  return {{csv_path, json_path}};
}

RunOutput cmd_s11(const RunConfig& cfg, const std::string& out_dir,
                  std::vector<double>* multiplexed_out) {
  std::filesystem::create_directories(out_dir);
  const SystemHamiltonian sys = assemble_fixed(cfg);
  const SweepPoint point = spectrum_point(sys, cfg.sweep.transitions);

  ReflectionSpec spec = reflection_spec(cfg);
  spec.probe_ghz = linspace(cfg.s11.f_min, cfg.s11.f_max, cfg.s11.points);
  const auto s_sq = reflection_s11(spec, point, ProbedMode::Sq);
  const auto s_50 = reflection_s11(spec, point, ProbedMode::R50);
  const auto multi = multiplexed_response(s_sq, s_50, cfg.s11.phase);

  CsvTable table;
  table.header = {"omega_ghz",  "s11_sq_abs", "s11_sq_re", "s11_sq_im",
                  "s11_50_abs", "s11_50_re",  "s11_50_im", "multiplexed_abs"};
  for (size_t i = 0; i < spec.probe_ghz.size(); ++i) {
    table.rows.push_back({fmt_g12(spec.probe_ghz[i]), fmt_g12(std::abs(s_sq[i])),
                          fmt_g12(s_sq[i].real()), fmt_g12(s_sq[i].imag()),
                          fmt_g12(std::abs(s_50[i])), fmt_g12(s_50[i].real()),
                          fmt_g12(s_50[i].imag()), fmt_g12(multi[i])});
  }

  json meta = config_json(cfg);
  meta["experiment"] = "s11";

  const std::string csv_path = join_path(out_dir, "s11.csv");
  const std::string json_path = join_path(out_dir, "s11.json");
  write_csv(csv_path, table);
  write_json(json_path, meta);
  if (multiplexed_out) *multiplexed_out = multi;
  return {{csv_path, json_path}};
}

RunOutput cmd_rabi(const RunConfig& cfg, const std::string& out_dir,
                   RabiTrace* trace_out) {
  std::filesystem::create_directories(out_dir);
  const SystemHamiltonian sys = assemble_fixed(cfg);
  const ProbedMode mode =
      cfg.rabi.resonator == "sq" ? ProbedMode::Sq : ProbedMode::R50;
  const RabiTrace trace = vacuum_rabi_trace(sys, reflection_spec(cfg), mode,
                                            cfg.rabi.points,
                                            cfg.rabi.span * 1e-3);

  CsvTable table;
  table.header = {"omega_ghz", "s11_abs"};
  for (size_t i = 0; i < trace.probe_ghz.size(); ++i)
    table.rows.push_back(
        {fmt_g12(trace.probe_ghz[i]), fmt_g12(trace.magnitude[i])});

  json meta = config_json(cfg);
  meta["experiment"] = "rabi";
  meta["fit"] = {{"centers_ghz", trace.fit.centers},
                 {"fwhms_ghz", trace.fit.fwhms},
                 {"depths", trace.fit.depths},
                 {"baseline", trace.fit.baseline},
                 {"residual", trace.fit.residual},
                 {"ill_conditioned", trace.fit.ill_conditioned}};
  meta["splitting_mhz"] = trace.splitting_mhz;
  meta["linewidth_mhz"] = trace.linewidth_mhz;

  const std::string csv_path = join_path(out_dir, "rabi.csv");
  const std::string json_path = join_path(out_dir, "rabi.json");
  write_csv(csv_path, table);
  write_json(json_path, meta);
  if (trace_out) *trace_out = trace;
  return {{csv_path, json_path}};
}

RunOutput cmd_fit(const RunConfig& cfg, const std::string& out_dir,
                  FitResult* fit_out) {
  std::filesystem::create_directories(out_dir);
  RunOutput out;

  std::vector<Observation> obs;
  const DeviceParams& base = cfg.device;
  if (cfg.fit.mode == "roundtrip") {
    const std::vector<double> grid =
        linspace(cfg.fit.phi_min, cfg.fit.phi_max, cfg.fit.phi_points);
    obs = synthesize_flux_observations(base, grid);
    const std::string obs_path = join_path(out_dir, "fit_observations.csv");
    write_observations_csv(obs_path, obs);
    obs = read_observations_csv(obs_path);
    out.files.push_back(obs_path);
  } else {
    obs = read_observations_csv(cfg.fit.observations);
  }

  FitProblem problem =
      make_flux_spectrum_problem(base, cfg.fit.free_names, std::move(obs));

  if (cfg.fit.mode == "roundtrip") {
    std::mt19937 rng(cfg.fit.seed);
    for (Eigen::Index i = 0; i < problem.start.size(); ++i) {
      const double sign = (rng() & 1u) ? 1.0 : -1.0;
      problem.start[i] *= 1.0 + sign * cfg.fit.perturb;
    }
  }

  NelderMeadOptions nm;
  nm.max_iter = cfg.fit.max_iter;
  const FitResult fit = fit_device(problem, nm, cfg.threads);

  json meta = config_json(cfg);
  meta["experiment"] = "fit";
  meta["free"] = fit.names;
  json fitted = json::object();
  for (size_t i = 0; i < fit.names.size(); ++i)
    fitted[fit.names[i]] = fit.params[i];
  meta["fitted"] = fitted;
  json started = json::object();
  for (size_t i = 0; i < fit.names.size(); ++i)
    started[fit.names[i]] = problem.start[i];
  meta["start"] = started;
  meta["residual_rms_ghz"] = fit.residual_rms;
  meta["simplex_spread"] = fit.simplex_spread;
  meta["iterations"] = fit.iterations;
  meta["converged"] = fit.converged;

  CsvTable residuals;
  residuals.header = {"bias", "freq_ghz", "weight", "residual_ghz"};
  for (size_t i = 0; i < problem.observed.size(); ++i) {
    const Observation& o = problem.observed[i];
    residuals.rows.push_back({fmt_g12(o.bias), fmt_g12(o.freq_ghz),
                              fmt_g12(o.weight), fmt_g12(fit.residuals[i])});
  }

  const std::string csv_path = join_path(out_dir, "fit_residuals.csv");
  const std::string json_path = join_path(out_dir, "fit.json");
  write_csv(csv_path, residuals);
  write_json(json_path, meta);
  out.files.push_back(csv_path);
  out.files.push_back(json_path);
  if (fit_out) *fit_out = fit;
  if (!fit.converged)
    throw numeric_error("fit did not converge; best residual rms = " +
                        fmt_g12(fit.residual_rms) + " GHz (outputs written)");
  return out;
}

}  // namespace hqed
