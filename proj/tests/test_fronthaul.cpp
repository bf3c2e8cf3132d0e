#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cfmimo/fronthaul.hpp"

using namespace cfmimo;

namespace {

FronthaulChannels make_channels(const std::vector<double>& angles, double beta, int M_c,
                                int M_frh, double sigma2) {
  FronthaulChannels ch;
  const int L = static_cast<int>(angles.size());
  ch.azimuth_cloud.resize(L);
  ch.azimuth_ap.resize(L);
  ch.beta_frh = Eigen::VectorXd::Constant(L, beta);
  for (int l = 0; l < L; ++l) {
    ch.azimuth_cloud(l) = angles[l];
    ch.azimuth_ap(l) = angles[l] + M_PI;
  }
  ch.M_c = M_c;
  ch.M_frh = M_frh;
  ch.sigma2 = sigma2;
  return ch;
}

ApGrouping all_in_one_group(int L) {
  ApGrouping g;
  g.groups = {std::vector<int>(L)};
  for (int l = 0; l < L; ++l) g.groups[0][l] = l;
  g.group_of = Eigen::VectorXi::Zero(L);
  return g;
}

// Exhaustive enumeration of every grouping with at most N_c APs per group and
// at most I groups; returns the optimal min-max chordal sum.
double exhaustive_grouping(const Eigen::MatrixXd& zeta, int N_c, int I) {
  const int L = static_cast<int>(zeta.rows());
  std::vector<int> assign(L, -1);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> members(I);

  std::function<void(int)> rec = [&](int ap) {
    if (ap == L) {
      double worst = 0.0;
      for (const auto& g : members) {
        double sum = 0.0;
        for (size_t a = 0; a < g.size(); ++a)
          for (size_t b = 0; b < g.size(); ++b)
            if (a != b) sum += zeta(g[a], g[b]);
        worst = std::max(worst, sum);
      }
      best = std::min(best, worst);
      return;
    }
    for (int g = 0; g < I; ++g) {
      if (static_cast<int>(members[g].size()) >= N_c) continue;
      members[g].push_back(ap);
      rec(ap + 1);
      members[g].pop_back();
    }
  };
  rec(0);
  return best;
}

}  // namespace

TEST_CASE("steering vector basics") {
  const Eigen::VectorXcd broadside = steering_vector(0.0, 8);
  for (int m = 0; m < 8; ++m) CHECK(broadside(m) == std::complex<double>(1.0, 0.0));

  const Eigen::VectorXcd any = steering_vector(0.7, 16);
  CHECK(any.squaredNorm() == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("free space gain drops 6 dB per distance doubling") {
  ScenarioConfig config;
  config.L = 4;
  config.K = 1;
  Deployment d = build_deployment(config, 1);
  d.ap_positions.row(0) << 600.0, 500.0;  // 100 m east of the cloud
  d.ap_positions.row(1) << 700.0, 500.0;  // 200 m east
  const FronthaulChannels ch = synthesize_channels(d, config);
  const double drop_db = 10.0 * std::log10(ch.beta_frh(0) / ch.beta_frh(1));
  CHECK(drop_db == doctest::Approx(6.0206).epsilon(1e-4));
}

TEST_CASE("singleton equivalent channel gain matches direct matrix product") {
  const int M_c = 32, M_frh = 8;
  const double beta = 3.7e-11;
  const FronthaulChannels ch = make_channels({0.42}, beta, M_c, M_frh, 1e-12);
  const auto g_eq = equivalent_channels(ch, all_in_one_group(1));
  REQUIRE(g_eq[0].size() == 1);
  CHECK(std::norm(g_eq[0](0)) == doctest::Approx(beta * M_frh * M_c).epsilon(1e-10));

  // Oracle: v^H G f with explicit matrices.
  const Eigen::VectorXcd a_ap = steering_vector(ch.azimuth_ap(0), M_frh);
  const Eigen::VectorXcd a_cl = steering_vector(ch.azimuth_cloud(0), M_c);
  const Eigen::MatrixXcd G = std::sqrt(beta) * a_ap * a_cl.adjoint();
  const Eigen::VectorXcd v = a_ap / std::sqrt(static_cast<double>(M_frh));
  const Eigen::VectorXcd f = a_cl / std::sqrt(static_cast<double>(M_c));
  const std::complex<double> direct = (v.adjoint() * G * f)(0, 0);
  CHECK(std::abs(direct - g_eq[0](0)) <= 1e-9 * std::abs(direct));
}

TEST_CASE("chordal matrix") {
  SUBCASE("identical and orthogonal directions") {
    std::vector<Eigen::VectorXcd> vecs(3);
    const int M = 8;
    vecs[0] = steering_vector(0.0, M);
    vecs[1] = steering_vector(0.0, M) * std::complex<double>(0.0, 2.5);  // parallel, scaled
    vecs[2] = steering_vector(std::asin(2.0 / M), M);  // orthogonal ULA direction
    const Eigen::MatrixXd zeta = chordal_matrix(vecs);
    CHECK(zeta(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(zeta(0, 2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(zeta(0, 0) == 0.0);
    CHECK(zeta(1, 2) == zeta(2, 1));
  }
  SUBCASE("range and scale invariance on random vectors") {
    std::mt19937_64 rng(5);
    auto rand_vec = [&rng](int n) {
      Eigen::VectorXcd v(n);
      for (int i = 0; i < n; ++i)
        v(i) = std::complex<double>((rng() % 1000) / 500.0 - 1.0, (rng() % 1000) / 500.0 - 1.0);
      return v;
    };
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Eigen::VectorXcd> vecs = {rand_vec(6), rand_vec(6)};
      const Eigen::MatrixXd zeta = chordal_matrix(vecs);
      CHECK(zeta(0, 1) >= 0.0);
      CHECK(zeta(0, 1) <= 1.0);
      std::vector<Eigen::VectorXcd> scaled = {vecs[0], vecs[1] * std::complex<double>(-3.0, 1.0)};
      const Eigen::MatrixXd zeta2 = chordal_matrix(scaled);
      CHECK(zeta2(0, 1) == doctest::Approx(zeta(0, 1)).epsilon(1e-12));
    }
  }
  SUBCASE("zero vector is rejected with the AP index") {
    std::vector<Eigen::VectorXcd> vecs = {steering_vector(0.1, 4), Eigen::VectorXcd::Zero(4)};
    CHECK_THROWS_WITH_AS(chordal_matrix(vecs), doctest::Contains("AP 1"), std::invalid_argument);
  }
}

TEST_CASE("ap grouping") {
  SUBCASE("zero-cost pairing is found") {
    Eigen::MatrixXd zeta = Eigen::MatrixXd::Ones(4, 4);
    zeta.diagonal().setZero();
    zeta(0, 1) = zeta(1, 0) = 0.0;
    zeta(2, 3) = zeta(3, 2) = 0.0;
    const ApGrouping g = group_aps(zeta, 2, 2);
    CHECK(g.objective == doctest::Approx(0.0));
    CHECK(g.group_of(0) == g.group_of(1));
    CHECK(g.group_of(2) == g.group_of(3));
    CHECK(g.group_of(0) != g.group_of(2));
  }
  SUBCASE("uniform chordal matrix gives 2c") {
    const double c = 0.37;
    Eigen::MatrixXd zeta = Eigen::MatrixXd::Constant(4, 4, c);
    zeta.diagonal().setZero();
    const ApGrouping g = group_aps(zeta, 2, 2);
    CHECK(g.objective == doctest::Approx(2.0 * c).epsilon(1e-12));
  }
  SUBCASE("matches exhaustive enumeration") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 15; ++trial) {
      const int L = 6;
      Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(L, L);
      for (int a = 0; a < L; ++a)
        for (int b = a + 1; b < L; ++b) zeta(a, b) = zeta(b, a) = (rng() % 1000) / 1000.0;
      const int N_c = 2, I = 3;
      const ApGrouping g = group_aps(zeta, N_c, I);
      CHECK(g.objective == doctest::Approx(exhaustive_grouping(zeta, N_c, I)).epsilon(1e-12));
      // feasibility of the returned grouping
      Eigen::VectorXi counts = Eigen::VectorXi::Zero(I);
      for (int l = 0; l < L; ++l) counts(g.group_of(l))++;
      CHECK(counts.maxCoeff() <= N_c);
    }
  }
  SUBCASE("infeasible sizes are rejected") {
    Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(5, 5);
    CHECK_THROWS_AS(group_aps(zeta, 2, 2), std::invalid_argument);
  }
}

TEST_CASE("zf gains") {
  const int M_c = 64, M_frh = 16;
  const double sigma2 = 2e-12;
  SUBCASE("singleton group") {
    const FronthaulChannels ch = make_channels({0.3}, 1e-11, M_c, M_frh, sigma2);
    const Eigen::VectorXd lambda = zf_gains(ch, all_in_one_group(1), sigma2);
    CHECK(lambda(0) == doctest::Approx(1e-11 * M_frh * M_c / sigma2).epsilon(1e-9));
  }
  SUBCASE("orthogonal members cost nothing") {
    const double s1 = std::asin(2.0 / M_c);
    const FronthaulChannels ch = make_channels({0.0, s1}, 1e-11, M_c, M_frh, sigma2);
    const auto g_eq = equivalent_channels(ch, all_in_one_group(2));
    const Eigen::VectorXd lambda = zf_gains(ch, all_in_one_group(2), sigma2);
    CHECK(lambda(0) == doctest::Approx(g_eq[0].squaredNorm() / sigma2).epsilon(1e-9));
    CHECK(lambda(1) == doctest::Approx(g_eq[1].squaredNorm() / sigma2).epsilon(1e-9));
  }
  SUBCASE("matches the pseudo-inverse identity") {
    const FronthaulChannels ch = make_channels({0.1, 0.45, -0.8}, 2e-11, M_c, M_frh, sigma2);
    const auto g_eq = equivalent_channels(ch, all_in_one_group(3));
    const Eigen::VectorXd lambda = zf_gains(ch, all_in_one_group(3), sigma2);
    Eigen::MatrixXcd G(3, 3);
    for (int r = 0; r < 3; ++r) G.row(r) = g_eq[r].adjoint();
    const Eigen::MatrixXcd pinv = G.completeOrthogonalDecomposition().pseudoInverse();
    for (int l = 0; l < 3; ++l) {
      const double expected = 1.0 / (sigma2 * pinv.col(l).squaredNorm());
      CHECK(lambda(l) == doctest::Approx(expected).epsilon(1e-8));
    }
  }
  SUBCASE("never beats the matched filter") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> angles(4);
      for (auto& a : angles) a = ((rng() % 2000) / 1000.0 - 1.0) * 1.2;
      const FronthaulChannels ch = make_channels(angles, 1e-11, M_c, M_frh, sigma2);
      ApGrouping g = all_in_one_group(4);
      Eigen::VectorXd lambda;
      try {
        lambda = zf_gains(ch, g, sigma2);
      } catch (const std::runtime_error&) {
        continue;  // nearly parallel random draw
      }
      const auto g_eq = equivalent_channels(ch, g);
      for (int l = 0; l < 4; ++l) {
        CHECK(lambda(l) <= g_eq[l].squaredNorm() / sigma2 * (1.0 + 1e-9));
      }
    }
  }
  SUBCASE("co-located APs are reported") {
    const FronthaulChannels ch = make_channels({0.2, 0.2}, 1e-11, M_c, M_frh, sigma2);
    CHECK_THROWS_WITH_AS(zf_gains(ch, all_in_one_group(2), sigma2), doctest::Contains("group 0"),
                         std::runtime_error);
  }
}

TEST_CASE("fronthaul rate") {
  CHECK(fronthaul_rate(5.0, 0.0, 0.5, 1e8) == doctest::Approx(0.0));
  CHECK(fronthaul_rate(3.0, 1.0, 0.5, 1e8) == doctest::Approx(1e8).epsilon(1e-12));
  CHECK(fronthaul_rate(3.0, 2.0, 0.5, 1e8) > fronthaul_rate(3.0, 1.0, 0.5, 1e8));
  CHECK(fronthaul_rate(3.0, 1.0, 1.0, 1e8) ==
        doctest::Approx(2.0 * fronthaul_rate(3.0, 1.0, 0.5, 1e8)).epsilon(1e-12));
}
