#include "cfmimo/fronthaul.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmimo {

Eigen::MatrixXi ApGrouping::alpha(int L) const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(L, group_count());
  for (int i = 0; i < group_count(); ++i) {
    for (int l : groups[i]) a(l, i) = 1;
  }
  return a;
}

Eigen::VectorXcd steering_vector(double azimuth_rad, int antennas) {
  Eigen::VectorXcd a(antennas);
  const double phase_step = M_PI * std::sin(azimuth_rad);
  for (int m = 0; m < antennas; ++m) {
    a(m) = std::polar(1.0, phase_step * m);
  }
  return a;
}

FronthaulChannels synthesize_channels(const Deployment& deployment,
                                      const ScenarioConfig& config) {
  const int L = static_cast<int>(deployment.ap_positions.rows());
  FronthaulChannels ch;
  ch.M_c = config.M_c;
  ch.M_frh = config.M_frh;
  ch.sigma2 = config.sigma2_frh();
  ch.azimuth_cloud.resize(L);
  ch.azimuth_ap.resize(L);
  ch.beta_frh.resize(L);

  const double wavelength = 299792458.0 / config.carrier_frh_hz;
  for (int l = 0; l < L; ++l) {
    const Eigen::Vector2d delta =
        deployment.ap_positions.row(l).transpose() - deployment.cloud_position;
    const double d = delta.norm();
    if (d <= 0.0)
      throw std::invalid_argument("synthesize_channels: AP " + std::to_string(l) +
                                  " coincides with the cloud");
    ch.azimuth_cloud(l) = std::atan2(delta.y(), delta.x());
    ch.azimuth_ap(l) = std::atan2(-delta.y(), -delta.x());
    const double amp = wavelength / (4.0 * M_PI * d);  // free-space LOS
    ch.beta_frh(l) = amp * amp;
  }
  return ch;
}

std::vector<Eigen::VectorXcd> cloud_direction_vectors(const FronthaulChannels& channels) {
  std::vector<Eigen::VectorXcd> out;
  out.reserve(channels.azimuth_cloud.size());
  for (int l = 0; l < channels.azimuth_cloud.size(); ++l) {
    out.push_back(std::sqrt(channels.beta_frh(l)) *
                  steering_vector(channels.azimuth_cloud(l), channels.M_c));
  }
  return out;
}

std::vector<Eigen::VectorXcd> equivalent_channels(const FronthaulChannels& channels,
                                                  const ApGrouping& grouping) {
  const int L = static_cast<int>(channels.azimuth_cloud.size());
  std::vector<Eigen::VectorXcd> cloud_steer(L);
  for (int l = 0; l < L; ++l)
    cloud_steer[l] = steering_vector(channels.azimuth_cloud(l), channels.M_c);

  // v_l^H G_l f_j = sqrt(beta_l * M_frh / M_c) * a_cloud(phi_l)^H a_cloud(phi_j)
  std::vector<Eigen::VectorXcd> g_eq(L);
  for (int i = 0; i < grouping.group_count(); ++i) {
    const auto& members = grouping.groups[i];
    for (int l : members) {
      Eigen::VectorXcd g(members.size());
      const double scale = std::sqrt(channels.beta_frh(l) * channels.M_frh / channels.M_c);
      for (size_t j = 0; j < members.size(); ++j) {
        g(j) = scale * cloud_steer[l].dot(cloud_steer[members[j]]);
      }
      g_eq[l] = std::move(g);
    }
  }
  return g_eq;
}

Eigen::MatrixXd chordal_matrix(const std::vector<Eigen::VectorXcd>& vectors) {
  const int L = static_cast<int>(vectors.size());
  Eigen::VectorXd norms(L);
  for (int l = 0; l < L; ++l) {
    norms(l) = vectors[l].norm();
    if (!(norms(l) > 0.0))
      throw std::invalid_argument("chordal_matrix: zero-norm vector for AP " + std::to_string(l));
  }
  Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(L, L);
  for (int l = 0; l < L; ++l) {
    for (int m = l + 1; m < L; ++m) {
      const double value = std::abs(vectors[l].dot(vectors[m])) / (norms(l) * norms(m));
      zeta(l, m) = std::min(value, 1.0);
      zeta(m, l) = zeta(l, m);
    }
  }
  return zeta;
}

namespace {

struct GroupSearch {
  const Eigen::MatrixXd& zeta;
  int L;
  int N_c;
  int I;
  std::vector<std::vector<int>> members;
  std::vector<double> group_sum;  // Tr(zeta A_i) of the partial group
  std::vector<int> assignment;
  std::vector<int> best_assignment;
  double best = std::numeric_limits<double>::infinity();

  GroupSearch(const Eigen::MatrixXd& z, int nc, int i)
      : zeta(z), L(static_cast<int>(z.rows())), N_c(nc), I(i), members(i), group_sum(i, 0.0),
        assignment(L, -1), best_assignment(L, -1) {}

  double added_cost(int ap, int g) const {
    double add = 0.0;
    for (int m : members[g]) add += zeta(ap, m);
    return 2.0 * add;  // Tr counts both symmetric entries
  }

  void dfs(int ap, double current_max) {
    if (current_max >= best) return;
    if (ap == L) {
      best = current_max;
      best_assignment = assignment;
      return;
    }
    // Capacity feasibility for the remaining APs.
    int free_slots = 0;
    for (int g = 0; g < I; ++g) free_slots += N_c - static_cast<int>(members[g].size());
    if (free_slots < L - ap) return;

    for (int g = 0; g < I; ++g) {
      if (static_cast<int>(members[g].size()) >= N_c) continue;
      const bool opens_new = members[g].empty();
      // Label symmetry: only the first empty group may be opened.
      if (opens_new && g > 0 && members[g - 1].empty()) break;
      const double add = added_cost(ap, g);
      const double next_max = std::max(current_max, group_sum[g] + add);
      if (next_max >= best) {
        if (opens_new) break;
        continue;
      }
      members[g].push_back(ap);
      group_sum[g] += add;
      assignment[ap] = g;
      dfs(ap + 1, next_max);
      assignment[ap] = -1;
      group_sum[g] -= add;
      members[g].pop_back();
      if (opens_new) break;  // trying later empty groups is symmetric
    }
  }

  // Greedy incumbent: cheapest feasible group per AP in index order.
  void seed_incumbent() {
    std::vector<std::vector<int>> g_members(I);
    std::vector<double> g_sum(I, 0.0);
    std::vector<int> g_assign(L, -1);
    for (int ap = 0; ap < L; ++ap) {
      int best_g = -1;
      double best_add = 0.0;
      for (int g = 0; g < I; ++g) {
        if (static_cast<int>(g_members[g].size()) >= N_c) continue;
        int free_slots = -1;  // slots if ap joins g
        for (int gg = 0; gg < I; ++gg)
          free_slots += N_c - static_cast<int>(g_members[gg].size());
        if (free_slots < L - ap - 1) continue;
        double add = 0.0;
        for (int m : g_members[g]) add += zeta(ap, m);
        add *= 2.0;
        if (best_g < 0 || g_sum[g] + add < g_sum[best_g] + best_add) {
          best_g = g;
          best_add = add;
        }
        if (g_members[g].empty()) break;
      }
      if (best_g < 0) return;  // greedy failed; leave incumbent at infinity
      g_members[best_g].push_back(ap);
      g_sum[best_g] += best_add;
      g_assign[ap] = best_g;
    }
    best = *std::max_element(g_sum.begin(), g_sum.end());
    best_assignment = g_assign;
  }
};

}  // namespace

ApGrouping group_aps(const Eigen::MatrixXd& zeta, int N_c, int I) {
  const int L = static_cast<int>(zeta.rows());
  if (zeta.cols() != L) throw std::invalid_argument("group_aps: zeta must be square");
  if (static_cast<long>(I) * N_c < L)
    throw std::invalid_argument("group_aps: I*N_c < L, grouping infeasible");
  if (!zeta.isApprox(zeta.transpose(), 1e-12))
    throw std::invalid_argument("group_aps: zeta must be symmetric");

  GroupSearch search(zeta, N_c, I);
  search.seed_incumbent();
  search.dfs(0, 0.0);

  ApGrouping out;
  out.group_of = Eigen::VectorXi::Zero(L);
  std::vector<std::vector<int>> groups(I);
  for (int l = 0; l < L; ++l) {
    groups[search.best_assignment[l]].push_back(l);
    out.group_of(l) = search.best_assignment[l];
  }
  // Drop trailing empty groups (possible when I*N_c > L and grouping packs tighter).
  while (!groups.empty() && groups.back().empty()) groups.pop_back();
  out.groups = std::move(groups);
  out.objective = search.best;
  return out;
}

Eigen::VectorXd zf_gains(const FronthaulChannels& channels, const ApGrouping& grouping,
                         double sigma2_frh) {
  const int L = static_cast<int>(channels.azimuth_cloud.size());
  const std::vector<Eigen::VectorXcd> g_eq = equivalent_channels(channels, grouping);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(L);

  for (int i = 0; i < grouping.group_count(); ++i) {
    const auto& members = grouping.groups[i];
    const int n = static_cast<int>(members.size());
    if (n == 0) continue;
    Eigen::MatrixXcd G(n, n);  // row l = (g_eq_l)^H
    for (int r = 0; r < n; ++r) G.row(r) = g_eq[members[r]].adjoint();
    const Eigen::MatrixXcd gram = G * G.adjoint();
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
    if (!lu.isInvertible() || lu.rcond() < 1e-14)
      throw std::runtime_error("zf_gains: rank-deficient equivalent channels in group " +
                               std::to_string(i));
    const Eigen::MatrixXcd inv = lu.inverse();
    for (int r = 0; r < n; ++r) {
      lambda(members[r]) = 1.0 / (sigma2_frh * inv(r, r).real());
    }
  }
  return lambda;
}

double fronthaul_rate(double lambda, double p_w, double t_share, double bandwidth_hz) {
  if (p_w < 0.0 || t_share < 0.0)
    throw std::invalid_argument("fronthaul_rate: negative power or time share");
  return t_share * bandwidth_hz * std::log2(1.0 + lambda * p_w);
}

}  // namespace cfmimo
