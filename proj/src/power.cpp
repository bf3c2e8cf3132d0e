#include "cfmimo/power.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo {

GopsBreakdown gops(const Eigen::VectorXi& M, const Eigen::MatrixXi& served,
                   const ScenarioConfig& config) {
  const int L = static_cast<int>(M.size());
  if (served.rows() != L) throw std::invalid_argument("gops: shape mismatch");

  GopsBreakdown g;
  g.filter.resize(L);
  g.dft.resize(L);
  g.map.resize(L);
  g.prec.resize(L);
  g.mod.resize(L);
  g.coding.resize(L);
  g.network.resize(L);
  g.C_ap.resize(L);

  const double W_r = config.W_r();
  const double SE_r = config.SE_r();
  const double dft_per_antenna =
      8.0 * config.N_dft * std::log2(static_cast<double>(config.N_dft)) / (config.T_s * 1e9);
  const double prec_per_antenna_link =
      8.0 * config.tau_d() * config.N_used / (config.T_s * 1e9 * config.tau_c);

  for (int l = 0; l < L; ++l) {
    const double m = static_cast<double>(M(l));
    const double links = static_cast<double>(served.row(l).sum());
    const bool active = M(l) > 0;
    g.filter(l) = 40.0 * m * config.f_s / 1e9;
    g.dft(l) = dft_per_antenna * m;
    g.map(l) = 1.3 * W_r * std::pow(SE_r, 1.5) * links;
    g.prec(l) = prec_per_antenna_link * m * links;
    g.mod(l) = 1.3 * W_r * m;
    g.coding(l) = 5.2 * W_r * SE_r * links;
    g.network(l) = active ? 8.0 * W_r * SE_r : 0.0;
    g.C_ap(l) = g.filter(l) + g.dft(l) + g.map(l) + g.prec(l);
  }
  g.C_gpp = g.mod.sum() + g.coding.sum() + g.network.sum();
  return g;
}

double ap_power(int M_l, const Eigen::VectorXd& rho_row, double gops_ap,
                const ScenarioConfig& config) {
  if ((rho_row.array() < 0.0).any())
    throw std::invalid_argument("ap_power: negative transmit power");
  if (M_l == 0) return 0.0;  // a shut-down AP draws nothing
  return M_l * config.P_st + config.delta_tr * rho_row.sum() + config.P0_proc +
         config.delta_ap_proc * gops_ap / config.C_ap_max;
}

double cloud_power(const Eigen::VectorXd& p_bar, double gops_gpp, const ScenarioConfig& config) {
  if ((p_bar.array() < 0.0).any())
    throw std::invalid_argument("cloud_power: negative fronthaul power");
  return config.P_fixed + config.delta_tr * p_bar.sum() +
         (config.P_comp + config.delta_gpp_proc * gops_gpp / config.C_gpp_max) /
             config.sigma_cool;
}

PowerCoefficients coefficients(const ScenarioConfig& config) {
  PowerCoefficients c;
  const double W_r = config.W_r();
  const double SE_r = config.SE_r();
  const double gpp_slope = config.delta_gpp_proc / (config.C_gpp_max * config.sigma_cool);
  const double ap_slope = config.delta_ap_proc / config.C_ap_max;

  c.c0 = config.delta_tr;
  c.c1 = config.P_st + 1.3 * W_r * gpp_slope +
         ap_slope * (40.0 * config.f_s / 1e9 +
                     8.0 * config.N_dft * std::log2(static_cast<double>(config.N_dft)) /
                         (config.T_s * 1e9));
  c.c2 = gpp_slope * 8.0 * W_r * SE_r + config.P0_proc;
  c.c3 = ap_slope * 1.3 * W_r * std::pow(SE_r, 1.5) + gpp_slope * 5.2 * W_r * SE_r;
  c.c4 = ap_slope * 8.0 * config.tau_d() * config.N_used / (config.T_s * 1e9 * config.tau_c);
  c.c5 = config.delta_tr;
  c.P_fixed_bar = config.P_fixed + config.P_comp / config.sigma_cool;
  return c;
}

TotalPower total_power(const Eigen::VectorXi& M, const Eigen::MatrixXd& rho,
                       const Eigen::VectorXd& p_bar, const ScenarioConfig& config) {
  const int L = static_cast<int>(M.size());
  const int K = static_cast<int>(rho.cols());
  if (rho.rows() != L || p_bar.size() != L)
    throw std::invalid_argument("total_power: shape mismatch");

  Eigen::MatrixXi served(L, K);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) served(l, k) = rho(l, k) > 0.0 ? 1 : 0;
    if (M(l) == 0 && served.row(l).sum() > 0)
      throw std::invalid_argument("total_power: AP " + std::to_string(l) +
                                  " is deactivated but transmits");
  }

  const GopsBreakdown g = gops(M, served, config);
  const PowerCoefficients c = coefficients(config);

  TotalPower out;
  double coeff = c.P_fixed_bar + c.c0 * rho.sum() + c.c5 * p_bar.sum();
  for (int l = 0; l < L; ++l) {
    const double links = served.row(l).sum();
    coeff += c.c1 * M(l) + c.c2 * (M(l) > 0 ? 1.0 : 0.0) + c.c3 * links + c.c4 * M(l) * links;
  }
  out.coefficient_form = coeff;

  double radio = 0.0;
  for (int l = 0; l < L; ++l) radio += ap_power(M(l), rho.row(l), g.C_ap(l), config);
  const double cloud = cloud_power(p_bar, g.C_gpp, config);
  out.radio = radio;
  out.cloud = cloud;
  out.component_form = radio + cloud;

  const double scale = std::max({1.0, std::abs(out.coefficient_form), std::abs(out.component_form)});
  if (std::abs(out.coefficient_form - out.component_form) > 1e-12 * scale)
    throw std::logic_error("total_power: coefficient and component forms disagree");
  return out;
}

}  // namespace cfmimo
