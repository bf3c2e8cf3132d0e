#include "cfmimo/access.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cfmimo {

Eigen::MatrixXd compute_large_scale(const Deployment& deployment, const ScenarioConfig& config) {
  const int L = static_cast<int>(deployment.ap_positions.rows());
  const int K = static_cast<int>(deployment.ue_positions.rows());
  Eigen::MatrixXd beta(L, K);

  std::mt19937_64 shadow_rng(deployment.seed ^ 0x5ca1ab1eULL);
  auto next_gauss = [&shadow_rng]() {
    // Box-Muller on explicitly mapped uniforms; keeps results portable.
    const double u1 = (static_cast<double>(shadow_rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(shadow_rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };

  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double d =
          std::max(1.0, (deployment.ap_positions.row(l) - deployment.ue_positions.row(k)).norm());
      double gain_db = config.pl_intercept_db - 10.0 * config.pl_exponent * std::log10(d);
      if (config.shadowing_sigma_db > 0.0) gain_db += config.shadowing_sigma_db * next_gauss();
      beta(l, k) = std::pow(10.0, gain_db / 10.0);
    }
  }
  return beta;
}

Eigen::VectorXi assign_pilots(const Eigen::MatrixXd& beta, int tau_p) {
  const int K = static_cast<int>(beta.cols());
  if (tau_p < 1) throw std::invalid_argument("assign_pilots: tau_p >= 1 required");

  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd strength = beta.colwise().maxCoeff();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return strength(a) > strength(b); });

  const int cap = (K + tau_p - 1) / tau_p;  // balanced load
  Eigen::VectorXi pilot_of = Eigen::VectorXi::Constant(K, -1);
  std::vector<std::vector<int>> members(tau_p);

  for (int k : order) {
    int best = -1;
    double best_score = 0.0;
    for (int p = 0; p < tau_p; ++p) {
      if (static_cast<int>(members[p].size()) >= cap) continue;
      double score = 0.0;  // worst coupling with current members
      for (int t : members[p]) score = std::max(score, beta.col(k).dot(beta.col(t)));
      if (best < 0 || score < best_score) {
        best = p;
        best_score = score;
      }
    }
    pilot_of(k) = best;
    members[best].push_back(k);
  }
  return pilot_of;
}

std::vector<std::vector<int>> pilot_sets_from(const Eigen::VectorXi& pilot_of) {
  const int K = static_cast<int>(pilot_of.size());
  std::vector<std::vector<int>> sets(K);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < K; ++t) {
      if (pilot_of(t) == pilot_of(k)) sets[k].push_back(t);
    }
  }
  return sets;
}

Eigen::MatrixXd estimate_quality(const Eigen::MatrixXd& beta,
                                 const std::vector<std::vector<int>>& pilot_sets,
                                 double pilot_power, int tau_p, double sigma2_ac) {
  if (!(pilot_power > 0.0) || !(sigma2_ac > 0.0) || tau_p < 1)
    throw std::invalid_argument("estimate_quality: inputs must be positive");
  const int L = static_cast<int>(beta.rows());
  const int K = static_cast<int>(beta.cols());
  Eigen::MatrixXd gamma(L, K);
  const double pe = tau_p * pilot_power;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      double copilot = 0.0;
      for (int t : pilot_sets[k]) copilot += beta(l, t);
      gamma(l, k) = pe * beta(l, k) * beta(l, k) / (pe * copilot + sigma2_ac);
    }
  }
  return gamma;
}

PpzfClassification classify_ppzf(const Eigen::MatrixXd& beta, const Eigen::VectorXi& pilot_of,
                                 double nu, int M_ac, int tau_p) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("classify_ppzf: nu in (0,1]");
  const int L = static_cast<int>(beta.rows());
  const int K = static_cast<int>(beta.cols());
  PpzfClassification out;
  out.delta = Eigen::MatrixXi::Zero(L, K);
  out.tau_S = Eigen::VectorXi::Zero(L);

  const int pilot_cap = std::min(tau_p, M_ac - 1);
  for (int l = 0; l < L; ++l) {
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return beta(l, a) > beta(l, b); });
    const double total = beta.row(l).sum();
    std::vector<char> pilot_strong(pilot_of.maxCoeff() + 1, 0);
    double cum = 0.0;
    int distinct = 0;
    for (int k : order) {
      if (cum >= nu * total) break;
      const int p = pilot_of(k);
      if (!pilot_strong[p]) {
        if (distinct >= pilot_cap) continue;  // keep at least one non-ZF antenna
        pilot_strong[p] = 1;
        ++distinct;
      }
      out.delta(l, k) = 1;
      cum += beta(l, k);
    }
    out.tau_S(l) = distinct;
  }
  return out;
}

AccessState build_access_state(const Deployment& deployment, const ScenarioConfig& config) {
  AccessState state;
  state.beta = compute_large_scale(deployment, config);
  state.pilot_of = assign_pilots(state.beta, config.tau_p);
  state.pilot_sets = pilot_sets_from(state.pilot_of);
  state.gamma = estimate_quality(state.beta, state.pilot_sets, config.pilot_power, config.tau_p,
                                 config.sigma2_ac());
  const PpzfClassification ppzf =
      classify_ppzf(state.beta, state.pilot_of, config.ppzf_nu, config.M_ac, config.tau_p);
  state.delta = ppzf.delta;
  state.tau_S = ppzf.tau_S;
  return state;
}

Eigen::VectorXd effective_sinr(const AccessState& state, const Eigen::VectorXi& M,
                               const Eigen::MatrixXd& rho, double sigma2_ac) {
  const int L = static_cast<int>(state.beta.rows());
  const int K = static_cast<int>(state.beta.cols());
  if (M.size() != L || rho.rows() != L || rho.cols() != K)
    throw std::invalid_argument("effective_sinr: shape mismatch");
  if ((rho.array() < 0.0).any())
    throw std::invalid_argument("effective_sinr: negative transmit power");
  for (int l = 0; l < L; ++l) {
    if (M(l) == 0 && rho.row(l).sum() > 0.0)
      throw std::invalid_argument("effective_sinr: AP " + std::to_string(l) +
                                  " is deactivated but has nonzero transmit power");
  }

  // Coherent gain factors sqrt((M_l - tau_S_l) rho_{l,t} gamma_{l,k}); the
  // antenna surplus is zero for deactivated APs.
  Eigen::VectorXd surplus(L);
  for (int l = 0; l < L; ++l)
    surplus(l) = M(l) == 0 ? 0.0 : std::max(0, M(l) - state.tau_S(l));

  Eigen::VectorXd sinr(K);
  for (int k = 0; k < K; ++k) {
    auto coherent = [&](int t) {
      double acc = 0.0;
      for (int l = 0; l < L; ++l)
        acc += std::sqrt(surplus(l) * rho(l, t) * state.gamma(l, k));
      return acc * acc;
    };

    const double numerator = coherent(k);
    double denom = sigma2_ac;
    for (int t : state.pilot_sets[k]) {
      if (t != k) denom += coherent(t);
    }
    for (int t = 0; t < K; ++t) {
      for (int l = 0; l < L; ++l) {
        denom += rho(l, t) * (state.beta(l, k) - state.delta(l, k) * state.gamma(l, k));
      }
    }
    sinr(k) = numerator / denom;
  }
  return sinr;
}

Eigen::VectorXd spectral_efficiency(const Eigen::VectorXd& sinr, int tau_c, int tau_p) {
  if ((sinr.array() < 0.0).any())
    throw std::invalid_argument("spectral_efficiency: SINR must be nonnegative");
  const double prelog = static_cast<double>(tau_c - tau_p) / tau_c;
  return prelog * (1.0 + sinr.array()).log() / std::log(2.0);
}

}  // namespace cfmimo
