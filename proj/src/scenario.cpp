#include "cfmimo/scenario.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cfmimo {

double ScenarioConfig::noise_w(double bandwidth_hz, double nf_db) const {
  const double psd_dbw_hz = noise_psd_dbm_hz + nf_db - 30.0;
  return std::pow(10.0, psd_dbw_hz / 10.0) * bandwidth_hz;
}

double ScenarioConfig::sinr_target() const {
  if (sinr_target_lin > 0.0) return sinr_target_lin;
  const double prelog = static_cast<double>(tau_d()) / tau_c;
  return std::pow(2.0, se_target / prelog) - 1.0;
}

double ScenarioConfig::effective_se_target() const {
  if (sinr_target_lin > 0.0) {
    const double prelog = static_cast<double>(tau_d()) / tau_c;
    return prelog * std::log2(1.0 + sinr_target_lin);
  }
  return se_target;
}

Eigen::VectorXd ScenarioConfig::sinr_targets() const {
  return Eigen::VectorXd::Constant(K, sinr_target());
}

ValidationReport validate_config(const ScenarioConfig& c) {
  ValidationReport report;
  auto fail = [&](const std::string& field, const std::string& msg) {
    report.violations.push_back({field, msg});
  };

  if (c.L < 1) fail("L", "L >= 1");
  if (c.K < 1) fail("K", "K >= 1");
  if (c.M_ac < 1) fail("M_ac", "M_ac >= 1");
  if (c.M_frh < 1) fail("M_frh", "M_frh >= 1");
  if (c.M_c < 1) fail("M_c", "M_c >= 1");
  if (c.N_c < 1) fail("N_c", "N_c >= 1");
  if (c.N_c > c.M_c) fail("N_c", "N_c <= M_c");
  if (c.tau_p < 1) fail("tau_p", "tau_p >= 1");
  if (c.tau_p >= c.tau_c) fail("tau_p", "tau_p < tau_c");

  const std::array<std::pair<const char*, double>, 15> positives = {{
      {"B_ac", c.B_ac},
      {"B_frh", c.B_frh},
      {"f_s", c.f_s},
      {"T_s", c.T_s},
      {"P_t", c.P_t},
      {"P_f", c.P_f},
      {"pilot_power", c.pilot_power},
      {"area_side_m", c.area_side_m},
      {"P_st", c.P_st},
      {"delta_tr", c.delta_tr},
      {"C_ap_max", c.C_ap_max},
      {"C_gpp_max", c.C_gpp_max},
      {"P_fixed", c.P_fixed},
      {"carrier_ac_hz", c.carrier_ac_hz},
      {"carrier_frh_hz", c.carrier_frh_hz},
  }};
  for (const auto& [name, value] : positives) {
    if (!(value > 0.0)) fail(name, std::string(name) + " > 0");
  }
  if (c.P0_proc < 0.0) fail("P0_proc", "P0_proc >= 0");
  if (c.P_comp < 0.0) fail("P_comp", "P_comp >= 0");
  if (c.delta_ap_proc < 0.0) fail("delta_ap_proc", "delta_ap_proc >= 0");
  if (c.delta_gpp_proc < 0.0) fail("delta_gpp_proc", "delta_gpp_proc >= 0");
  if (!(c.sigma_cool > 0.0 && c.sigma_cool <= 1.0)) fail("sigma_cool", "sigma_cool in (0,1]");
  if (c.N_used < 1) fail("N_used", "N_used >= 1");
  if (c.N_dft < c.N_used) fail("N_dft", "N_dft >= N_used");
  if (c.N_bits < 1) fail("N_bits", "N_bits >= 1");
  if (!(c.ppzf_nu > 0.0 && c.ppzf_nu <= 1.0)) fail("ppzf_nu", "ppzf_nu in (0,1]");
  if (c.sinr_target_lin <= 0.0 && !(c.se_target > 0.0)) fail("se_target", "se_target > 0");
  if (c.shadowing_sigma_db < 0.0) fail("shadowing_sigma_db", "shadowing_sigma_db >= 0");

  if (!c.explicit_ap_positions.empty()) {
    if (static_cast<int>(c.explicit_ap_positions.size()) != c.L)
      fail("ap_positions", "explicit AP position count must equal L");
    for (const auto& p : c.explicit_ap_positions) {
      if (p.x() < 0 || p.x() > c.area_side_m || p.y() < 0 || p.y() > c.area_side_m) {
        fail("ap_positions", "AP positions must lie inside the area square");
        break;
      }
    }
  }
  return report;
}

namespace {

// mt19937_64 output mapped to [0,1) without std::uniform_real_distribution,
// whose mapping is implementation defined. Keeps deployments bit-identical
// across standard libraries.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Deployment build_deployment(const ScenarioConfig& config, std::uint64_t seed) {
  const ValidationReport report = validate_config(config);
  if (!report.ok()) {
    std::ostringstream oss;
    oss << "invalid config:";
    for (const auto& v : report.violations) oss << " [" << v.field << ": " << v.message << "]";
    throw std::invalid_argument(oss.str());
  }

  Deployment d;
  d.seed = seed;
  d.ap_positions.resize(config.L, 2);
  if (!config.explicit_ap_positions.empty()) {
    for (int l = 0; l < config.L; ++l) d.ap_positions.row(l) = config.explicit_ap_positions[l];
  } else {
    const int side_count = static_cast<int>(std::lround(std::sqrt(static_cast<double>(config.L))));
    if (side_count * side_count != config.L) {
      throw std::invalid_argument(
          "grid AP layout requires L to be a perfect square (got L=" + std::to_string(config.L) +
          "); provide explicit AP positions otherwise");
    }
    const double cell = config.area_side_m / side_count;
    for (int iy = 0, l = 0; iy < side_count; ++iy) {
      for (int ix = 0; ix < side_count; ++ix, ++l) {
        d.ap_positions(l, 0) = (ix + 0.5) * cell;
        d.ap_positions(l, 1) = (iy + 0.5) * cell;
      }
    }
  }

  d.cloud_position = Eigen::Vector2d::Constant(config.area_side_m / 2.0);

  std::mt19937_64 rng(seed);
  d.ue_positions.resize(config.K, 2);
  for (int k = 0; k < config.K; ++k) {
    d.ue_positions(k, 0) = next_unit(rng) * config.area_side_m;
    d.ue_positions(k, 1) = next_unit(rng) * config.area_side_m;
  }
  return d;
}

namespace {

struct FieldBinding {
  std::string section;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
  bool non_paper = false;  // value not pinned by the reference parameter set
};

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': cannot parse '" + value + "' as number");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 1e-9)
    throw std::runtime_error("config key '" + key + "': expected integer, got '" + value + "'");
  return i;
}

std::string fmt_double(double v) {
  std::ostringstream oss;
  oss.precision(17);
  oss << v;
  return oss.str();
}

using BindingMap = std::vector<std::pair<std::string, FieldBinding>>;

const BindingMap& bindings() {
  static const BindingMap map = [] {
    BindingMap m;
    auto add_int = [&m](const std::string& sec, const std::string& key, int ScenarioConfig::* f,
                        bool non_paper = false) {
      m.push_back({key,
                   {sec,
                    [key, f](ScenarioConfig& c, const std::string& v) { c.*f = parse_int(key, v); },
                    [f](const ScenarioConfig& c) { return std::to_string(c.*f); },
                    non_paper}});
    };
    auto add_dbl = [&m](const std::string& sec, const std::string& key, double ScenarioConfig::* f,
                        bool non_paper = false) {
      m.push_back({key,
                   {sec,
                    [key, f](ScenarioConfig& c, const std::string& v) { c.*f = parse_double(key, v); },
                    [f](const ScenarioConfig& c) { return fmt_double(c.*f); },
                    non_paper}});
    };

    add_int("network", "L", &ScenarioConfig::L);
    add_int("network", "K", &ScenarioConfig::K, true);
    add_int("network", "M_ac", &ScenarioConfig::M_ac);
    add_int("network", "M_frh", &ScenarioConfig::M_frh);
    add_int("network", "M_c", &ScenarioConfig::M_c);
    add_int("network", "N_c", &ScenarioConfig::N_c);

    add_dbl("radio", "B_ac", &ScenarioConfig::B_ac);
    add_dbl("radio", "B_frh", &ScenarioConfig::B_frh);
    add_dbl("radio", "f_s", &ScenarioConfig::f_s);
    add_dbl("radio", "T_s", &ScenarioConfig::T_s);
    add_int("radio", "N_used", &ScenarioConfig::N_used);
    add_int("radio", "N_dft", &ScenarioConfig::N_dft, true);
    add_int("radio", "N_bits", &ScenarioConfig::N_bits);
    add_dbl("radio", "carrier_ac_hz", &ScenarioConfig::carrier_ac_hz);
    add_dbl("radio", "carrier_frh_hz", &ScenarioConfig::carrier_frh_hz);

    add_int("frame", "tau_c", &ScenarioConfig::tau_c);
    add_int("frame", "tau_p", &ScenarioConfig::tau_p);

    add_dbl("budgets", "P_t", &ScenarioConfig::P_t);
    add_dbl("budgets", "P_f", &ScenarioConfig::P_f);
    add_dbl("budgets", "pilot_power", &ScenarioConfig::pilot_power);

    add_dbl("noise", "noise_psd_dbm_hz", &ScenarioConfig::noise_psd_dbm_hz, true);
    add_dbl("noise", "noise_figure_ac_db", &ScenarioConfig::noise_figure_ac_db, true);
    add_dbl("noise", "noise_figure_frh_db", &ScenarioConfig::noise_figure_frh_db, true);

    add_dbl("geometry", "area_side_m", &ScenarioConfig::area_side_m);

    add_dbl("power_model", "P_st", &ScenarioConfig::P_st);
    add_dbl("power_model", "delta_tr", &ScenarioConfig::delta_tr, true);
    add_dbl("power_model", "P0_proc", &ScenarioConfig::P0_proc);
    add_dbl("power_model", "delta_ap_proc", &ScenarioConfig::delta_ap_proc);
    add_dbl("power_model", "C_ap_max", &ScenarioConfig::C_ap_max);
    add_dbl("power_model", "delta_gpp_proc", &ScenarioConfig::delta_gpp_proc);
    add_dbl("power_model", "C_gpp_max", &ScenarioConfig::C_gpp_max);
    add_dbl("power_model", "P_fixed", &ScenarioConfig::P_fixed);
    add_dbl("power_model", "P_comp", &ScenarioConfig::P_comp);
    add_dbl("power_model", "sigma_cool", &ScenarioConfig::sigma_cool);

    add_dbl("targets", "se_target", &ScenarioConfig::se_target, true);
    add_dbl("targets", "sinr_target_lin", &ScenarioConfig::sinr_target_lin, true);

    add_dbl("access", "ppzf_nu", &ScenarioConfig::ppzf_nu, true);
    add_dbl("access", "pl_exponent", &ScenarioConfig::pl_exponent, true);
    add_dbl("access", "pl_intercept_db", &ScenarioConfig::pl_intercept_db, true);
    add_dbl("access", "shadowing_sigma_db", &ScenarioConfig::shadowing_sigma_db, true);
    return m;
  }();
  return map;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void apply_key(ScenarioConfig& config, const std::string& key, const std::string& value,
               const std::string& origin, int line_no) {
  if (key == "ap_positions") {
    // Semicolon-separated "x,y" pairs.
    config.explicit_ap_positions.clear();
    std::stringstream ss(value);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
      pair = trim(pair);
      if (pair.empty()) continue;
      const size_t comma = pair.find(',');
      if (comma == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": ap_positions entries must be 'x,y' pairs");
      Eigen::Vector2d p;
      p.x() = parse_double("ap_positions", trim(pair.substr(0, comma)));
      p.y() = parse_double("ap_positions", trim(pair.substr(comma + 1)));
      config.explicit_ap_positions.push_back(p);
    }
    return;
  }
  for (const auto& [name, binding] : bindings()) {
    if (name == key) {
      binding.set(config, value);
      return;
    }
  }
  throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": unknown config key '" +
                           key + "'");
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  ScenarioConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": malformed section");
      continue;  // sections are organizational; keys are unique
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": expected key = value");
    apply_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin, line_no);
  }
  return config;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string render_config_manifest(const ScenarioConfig& config) {
  std::ostringstream out;
  std::string current_section;
  for (const auto& [name, binding] : bindings()) {
    if (binding.section != current_section) {
      if (!current_section.empty()) out << "\n";
      out << "[" << binding.section << "]\n";
      current_section = binding.section;
    }
    out << name << " = " << binding.get(config);
    if (binding.non_paper) out << "  # non-paper default";
    out << "\n";
  }
  if (!config.explicit_ap_positions.empty()) {
    out << "ap_positions = ";
    for (size_t i = 0; i < config.explicit_ap_positions.size(); ++i) {
      if (i) out << "; ";
      out << config.explicit_ap_positions[i].x() << "," << config.explicit_ap_positions[i].y();
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace cfmimo
