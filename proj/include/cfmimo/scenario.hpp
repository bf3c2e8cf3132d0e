#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfmimo {

/// Every physical constant of the simulated network. Defaults reproduce the
/// reference parameter set; all fields can be overridden from a config file
/// (see LoadConfigFile) or programmatically.
struct ScenarioConfig {
  // Network dimensions
  int L = 16;       ///< number of APs
  int K = 10;       ///< number of UEs (no standard default; 10 is the desk-scale choice)
  int M_ac = 16;    ///< access antennas per AP
  int M_frh = 64;   ///< fronthaul antennas per AP
  int M_c = 128;    ///< cloud antennas
  int N_c = 4;      ///< cloud RF chains (max SDMA group size)

  // Radio numerology
  double B_ac = 20e6;        ///< access bandwidth [Hz]
  double B_frh = 100e6;      ///< fronthaul bandwidth [Hz]
  double f_s = 30.72e6;      ///< sampling rate [Hz]
  double T_s = 71.4e-6;      ///< OFDM symbol duration [s]
  int N_used = 1024;         ///< used subcarriers
  int N_dft = 2048;          ///< DFT size (non-standard default, LTE-like numerology)
  int N_bits = 12;           ///< quantizer bits per I/Q sample
  double carrier_ac_hz = 2.5e9;
  double carrier_frh_hz = 28e9;

  // TDD frame
  int tau_c = 192;   ///< symbols per frame
  int tau_p = 8;     ///< pilot symbols

  // Power budgets
  double P_t = 1.0;          ///< per-AP access transmit budget [W]
  double P_f = 5.0;          ///< per-group fronthaul transmit budget [W]
  double pilot_power = 0.1;  ///< UE pilot power [W]

  // Noise model (thermal PSD + noise figure over the link bandwidth)
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_ac_db = 7.0;
  double noise_figure_frh_db = 7.0;

  // Geometry
  double area_side_m = 1000.0;
  /// Optional explicit AP positions (row = AP, columns = x,y in meters).
  /// When empty a uniform sqrt(L) x sqrt(L) grid is used.
  std::vector<Eigen::Vector2d> explicit_ap_positions;

  // Consumption model constants
  double P_st = 6.8;            ///< per-antenna static power [W]
  double delta_tr = 4.0;        ///< PA slope (non-standard default, 25% efficiency)
  double P0_proc = 20.8;        ///< AP idle processing power [W]
  double delta_ap_proc = 74.0;  ///< AP processing slope [W]
  double C_ap_max = 180.0;      ///< AP GOPS capacity
  double delta_gpp_proc = 74.0; ///< cloud GPP processing slope [W]
  double C_gpp_max = 180.0;     ///< cloud GOPS capacity
  double P_fixed = 120.0;       ///< cloud fixed power [W]
  double P_comp = 20.8;         ///< cloud idle compute power [W]
  double sigma_cool = 0.9;      ///< cooling efficiency, in (0,1]

  // QoS targets
  double se_target = 2.0;        ///< common per-UE SE target [bit/s/Hz]
  double sinr_target_lin = -1.0; ///< explicit common SINR target; <0 means derive from se_target

  // Access channel model
  double ppzf_nu = 0.95;           ///< strong-UE cumulative-gain fraction
  double pl_exponent = 3.76;       ///< log-distance path loss exponent
  double pl_intercept_db = -34.53; ///< path gain at 1 m [dB]
  double shadowing_sigma_db = 0.0; ///< log-normal shadowing std, 0 disables

  // Derived quantities ------------------------------------------------------
  int tau_d() const { return tau_c - tau_p; }
  double noise_w(double bandwidth_hz, double nf_db) const;
  double sigma2_ac() const { return noise_w(B_ac, noise_figure_ac_db); }
  double sigma2_frh() const { return noise_w(B_frh, noise_figure_frh_db); }
  /// Per-UE fronthaul bit rate required by the functional split [bit/s].
  double O_72() const { return 2.0 * N_used * N_bits / T_s; }
  /// Bandwidth ratio to the 20 MHz reference setup.
  double W_r() const { return B_ac / 20e6; }
  /// SE ratio to the 6 bit/s/Hz reference setup.
  double SE_r() const { return effective_se_target() / 6.0; }
  /// Common SINR target (linear).
  double sinr_target() const;
  /// SE target implied by the configured target (se_target or sinr_target_lin).
  double effective_se_target() const;
  /// Per-UE SINR target vector.
  Eigen::VectorXd sinr_targets() const;
  int group_count() const { return (L + N_c - 1) / N_c; }
};

/// AP/UE/cloud geometry drawn for one trial.
struct Deployment {
  Eigen::Matrix<double, Eigen::Dynamic, 2> ap_positions;
  Eigen::Matrix<double, Eigen::Dynamic, 2> ue_positions;
  Eigen::Vector2d cloud_position;
  std::uint64_t seed = 0;
};

/// One violated invariant of a ScenarioConfig.
struct ConfigViolation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<ConfigViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every config invariant; report-only, never throws.
ValidationReport validate_config(const ScenarioConfig& config);

/// Places APs on a grid (or at explicit positions), the cloud at the area
/// center, and draws UE positions i.i.d. uniform from the square.
/// Deterministic for fixed (config, seed).
/// Throws std::invalid_argument when L is not a perfect square and no
/// explicit AP positions are given, or when the config is invalid.
Deployment build_deployment(const ScenarioConfig& config, std::uint64_t seed);

/// Parses a key = value config file with [section] headers into a config
/// starting from defaults. Unknown keys raise std::runtime_error.
ScenarioConfig load_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");

/// Writes every field (including non-standard defaults, flagged as such) in
/// the config file format. Used for run manifests.
std::string render_config_manifest(const ScenarioConfig& config);

}  // namespace cfmimo
