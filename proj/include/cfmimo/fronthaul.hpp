#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cfmimo/scenario.hpp"

namespace cfmimo {

/// Geometry-derived LOS fronthaul channel parameters. The rank-one channel of
/// AP l is sqrt(beta_frh_l) * a_ap(theta_l) * a_cloud(phi_l)^H with
/// half-wavelength uniform linear arrays on both sides.
struct FronthaulChannels {
  Eigen::VectorXd azimuth_cloud;  ///< departure angle at the cloud towards each AP [rad]
  Eigen::VectorXd azimuth_ap;     ///< arrival angle at each AP [rad]
  Eigen::VectorXd beta_frh;       ///< LOS path gain per AP (linear)
  int M_c = 0;
  int M_frh = 0;
  double sigma2 = 0.0;  ///< fronthaul receiver noise [W]
};

/// Partition of the APs into SDMA groups of size at most N_c.
struct ApGrouping {
  std::vector<std::vector<int>> groups;  ///< AP indices per group
  Eigen::VectorXi group_of;              ///< L entries, group index per AP
  double objective = 0.0;                ///< achieved min-max group chordal sum
  int group_count() const { return static_cast<int>(groups.size()); }
  Eigen::MatrixXi alpha(int L) const;    ///< L x I membership matrix
};

/// Unit-modulus ULA response, half-wavelength spacing.
Eigen::VectorXcd steering_vector(double azimuth_rad, int antennas);

FronthaulChannels synthesize_channels(const Deployment& deployment, const ScenarioConfig& config);

/// Gain-scaled cloud-side direction vectors sqrt(beta) * a_cloud(phi_l); the
/// grouping metric is computed on these.
std::vector<Eigen::VectorXcd> cloud_direction_vectors(const FronthaulChannels& channels);

/// Equivalent channels after matched analog beamforming (combiner and analog
/// precoder columns scaled by 1/sqrt(antenna count)); entry j of the returned
/// vector for AP l couples it to the j-th member of its group.
std::vector<Eigen::VectorXcd> equivalent_channels(const FronthaulChannels& channels,
                                                  const ApGrouping& grouping);

/// Normalized inner-product magnitude |g^H g'| / (|g||g'|), zero diagonal.
/// Throws std::invalid_argument naming the AP on a zero-norm vector.
Eigen::MatrixXd chordal_matrix(const std::vector<Eigen::VectorXcd>& vectors);

/// Globally optimal min-max group chordal sum via depth-first branch and
/// bound with group-label symmetry pruning.
ApGrouping group_aps(const Eigen::MatrixXd& zeta, int N_c, int I);

/// ZF effective gains Lambda_ll = 1 / (sigma2 [(G G^H)^{-1}]_{ll}) per AP.
/// Throws std::runtime_error naming the group when its equivalent channel
/// matrix is rank deficient.
Eigen::VectorXd zf_gains(const FronthaulChannels& channels, const ApGrouping& grouping,
                         double sigma2_frh);

/// R = t * B * log2(1 + Lambda * p) [bit/s].
double fronthaul_rate(double lambda, double p_w, double t_share, double bandwidth_hz);

}  // namespace cfmimo
