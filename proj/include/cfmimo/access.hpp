#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cfmimo/scenario.hpp"

namespace cfmimo {

/// Large-scale channel state of the access network: fading gains, pilot
/// assignment, estimate quality and the PPZF strong/weak split.
struct AccessState {
  Eigen::MatrixXd beta;    ///< L x K large-scale gains (linear)
  Eigen::MatrixXd gamma;   ///< L x K channel-estimate mean squares (linear)
  Eigen::VectorXi pilot_of;                 ///< K pilot indices in [0, tau_p)
  std::vector<std::vector<int>> pilot_sets; ///< per UE k: P_k = {t : same pilot}, includes k
  Eigen::MatrixXi delta;   ///< L x K strong-UE membership (0/1)
  Eigen::VectorXi tau_S;   ///< per AP: distinct pilots among its strong UEs
};

/// Log-distance path loss (optionally shadowed) between every AP and UE.
/// Distances below 1 m are clamped to the 1 m reference distance.
Eigen::MatrixXd compute_large_scale(const Deployment& deployment, const ScenarioConfig& config);

/// Balanced greedy pilot assignment: UEs in order of decreasing max-AP gain,
/// each taking the least-contaminated pilot among those with minimal load
/// headroom violated ruled out; injective whenever K <= tau_p.
Eigen::VectorXi assign_pilots(const Eigen::MatrixXd& beta, int tau_p);

std::vector<std::vector<int>> pilot_sets_from(const Eigen::VectorXi& pilot_of);

/// MMSE estimate quality gamma_{l,k} from gains, pilot sets and pilot SNR.
Eigen::MatrixXd estimate_quality(const Eigen::MatrixXd& beta,
                                 const std::vector<std::vector<int>>& pilot_sets,
                                 double pilot_power, int tau_p, double sigma2_ac);

struct PpzfClassification {
  Eigen::MatrixXi delta;
  Eigen::VectorXi tau_S;
};

/// Marks, per AP, the strongest UEs as zero-forced until their cumulative
/// share of the AP's total gain reaches nu, keeping tau_S < M_ac so that at
/// least one antenna remains for transmission.
PpzfClassification classify_ppzf(const Eigen::MatrixXd& beta, const Eigen::VectorXi& pilot_of,
                                 double nu, int M_ac, int tau_p);

/// Convenience: full access-state construction from a deployment.
AccessState build_access_state(const Deployment& deployment, const ScenarioConfig& config);

/// Closed-form effective downlink SINR per UE for given active antenna counts
/// and power allocation. M_l = 0 denotes a deactivated AP and requires
/// rho(l,k) = 0 for all k (violations throw std::invalid_argument).
Eigen::VectorXd effective_sinr(const AccessState& state, const Eigen::VectorXi& M,
                               const Eigen::MatrixXd& rho, double sigma2_ac);

/// SE_k = (tau_d/tau_c) * log2(1 + SINR_k).
Eigen::VectorXd spectral_efficiency(const Eigen::VectorXd& sinr, int tau_c, int tau_p);

}  // namespace cfmimo
