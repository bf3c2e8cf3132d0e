#pragma once

#include <Eigen/Dense>

#include "cfmimo/scenario.hpp"

namespace cfmimo {

/// Per-function processing load; AP-side entries are per AP, cloud-side
/// entries are the per-AP contributions to the GPP total.
struct GopsBreakdown {
  Eigen::VectorXd filter;   ///< L, AP side
  Eigen::VectorXd dft;      ///< L, AP side
  Eigen::VectorXd map;      ///< L, AP side
  Eigen::VectorXd prec;     ///< L, AP side
  Eigen::VectorXd mod;      ///< L, cloud side
  Eigen::VectorXd coding;   ///< L, cloud side
  Eigen::VectorXd network;  ///< L, cloud side
  Eigen::VectorXd C_ap;     ///< per-AP totals
  double C_gpp = 0.0;       ///< cloud total

  bool ap_overloaded(double cap) const { return (C_ap.array() > cap).any(); }
};

/// Coefficients of the end-to-end power expansion.
struct PowerCoefficients {
  double c0 = 0.0;  ///< W per W of access transmit power
  double c1 = 0.0;  ///< W per active antenna
  double c2 = 0.0;  ///< W per active AP
  double c3 = 0.0;  ///< W per served AP-UE link
  double c4 = 0.0;  ///< W per (active antenna x served link)
  double c5 = 0.0;  ///< W per W of fronthaul transmit power
  double P_fixed_bar = 0.0;  ///< load-independent floor
};

/// Evaluates the per-function GOPS table. served(l,k) = 1 when AP l serves UE k.
GopsBreakdown gops(const Eigen::VectorXi& M, const Eigen::MatrixXi& served,
                   const ScenarioConfig& config);

/// AP power draw: antennas + PA + processing for an active AP, exactly zero
/// for a deactivated one (M_l = 0).
double ap_power(int M_l, const Eigen::VectorXd& rho_row, double gops_ap,
                const ScenarioConfig& config);

/// Cloud power draw: fixed + fronthaul PA + cooled compute.
double cloud_power(const Eigen::VectorXd& p_bar, double gops_gpp, const ScenarioConfig& config);

PowerCoefficients coefficients(const ScenarioConfig& config);

struct TotalPower {
  double coefficient_form = 0.0;  ///< c-expansion including P_fixed_bar
  double component_form = 0.0;    ///< sum of AP powers + cloud power
  double radio = 0.0;             ///< AP-side share of the component form
  double cloud = 0.0;             ///< cloud-side share of the component form
  double value() const { return component_form; }
};

/// Evaluates both algebraic forms of the end-to-end power; they agree to
/// relative 1e-12 by construction and a violation throws std::logic_error.
TotalPower total_power(const Eigen::VectorXi& M, const Eigen::MatrixXd& rho,
                       const Eigen::VectorXd& p_bar, const ScenarioConfig& config);

}  // namespace cfmimo
