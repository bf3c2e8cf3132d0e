#include <doctest.h>

#include <cmath>
#include <random>

#include "cfmimo/power.hpp"

using namespace cfmimo;

namespace {

ScenarioConfig reference_config() {
  ScenarioConfig c;
  c.se_target = 6.0;  // SE_r = 1, matching the reference setup
  return c;
}

}  // namespace

TEST_CASE("gops table rows") {
  ScenarioConfig config = reference_config();
  config.L = 2;
  config.K = 4;
  Eigen::VectorXi M(2);
  M << 16, 0;
  Eigen::MatrixXi served = Eigen::MatrixXi::Zero(2, 4);
  served.row(0).setOnes();
  const GopsBreakdown g = gops(M, served, config);

  CHECK(g.filter(0) == doctest::Approx(19.6608).epsilon(1e-12));
  CHECK(g.dft(0) == doctest::Approx(8.0 * 16 * 2048 * 11 / (71.4e-6 * 1e9)).epsilon(1e-12));
  CHECK(g.dft(0) == doctest::Approx(40.39).epsilon(1e-3));
  CHECK(g.map(0) == doctest::Approx(1.3 * 4.0).epsilon(1e-12));
  CHECK(g.prec(0) ==
        doctest::Approx(8.0 * 16 * 184 * 1024 / (71.4e-6 * 1e9 * 192) * 4).epsilon(1e-12));
  CHECK(g.mod(0) == doctest::Approx(1.3 * 16.0).epsilon(1e-12));
  CHECK(g.coding(0) == doctest::Approx(5.2 * 4.0).epsilon(1e-12));
  CHECK(g.network(0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(g.C_ap(0) == doctest::Approx(g.filter(0) + g.dft(0) + g.map(0) + g.prec(0)));

  // Deactivated AP contributes nothing anywhere.
  CHECK(g.filter(1) == 0.0);
  CHECK(g.dft(1) == 0.0);
  CHECK(g.map(1) == 0.0);
  CHECK(g.prec(1) == 0.0);
  CHECK(g.mod(1) == 0.0);
  CHECK(g.coding(1) == 0.0);
  CHECK(g.network(1) == 0.0);
}

TEST_CASE("ap power") {
  const ScenarioConfig config = reference_config();
  SUBCASE("deactivated AP draws nothing") {
    CHECK(ap_power(0, Eigen::VectorXd::Zero(4), 0.0, config) == 0.0);
  }
  SUBCASE("static plus idle processing") {
    CHECK(ap_power(16, Eigen::VectorXd::Zero(4), 0.0, config) ==
          doctest::Approx(16 * 6.8 + 20.8).epsilon(1e-12));
  }
  SUBCASE("transmit power slope equals delta_tr") {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(4);
    const double base = ap_power(16, rho, 10.0, config);
    rho(2) = 1.0;
    CHECK(ap_power(16, rho, 10.0, config) - base == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("cloud power") {
  const ScenarioConfig config = reference_config();
  const double idle = cloud_power(Eigen::VectorXd::Zero(3), 0.0, config);
  CHECK(idle == doctest::Approx(120.0 + 20.8 / 0.9).epsilon(1e-12));
  CHECK(idle == doctest::Approx(143.11).epsilon(1e-4));

  const double full = cloud_power(Eigen::VectorXd::Zero(3), config.C_gpp_max, config);
  CHECK(full - idle == doctest::Approx(74.0 / 0.9).epsilon(1e-12));
  CHECK(full - idle == doctest::Approx(82.22).epsilon(1e-4));

  Eigen::VectorXd p(3);
  p << 1.0, 2.0, 0.5;
  CHECK(cloud_power(p, 0.0, config) - idle == doctest::Approx(4.0 * 3.5).epsilon(1e-12));
}

TEST_CASE("coefficients") {
  const ScenarioConfig config = reference_config();
  const PowerCoefficients c = coefficients(config);

  CHECK(c.c0 == doctest::Approx(config.delta_tr));
  CHECK(c.c5 == doctest::Approx(config.delta_tr));

  const double c1_hand = 6.8 + 1.3 * 74.0 / (180.0 * 0.9) +
                         (74.0 / 180.0) * (40.0 * 30.72e6 / 1e9 +
                                           8.0 * 2048 * 11 / (71.4e-6 * 1e9));
  CHECK(c.c1 == doctest::Approx(c1_hand).epsilon(1e-12));
  CHECK(c.c1 == doctest::Approx(8.937).epsilon(5e-4));

  const double c2_hand = (74.0 / 162.0) * 8.0 + 20.8;
  CHECK(c.c2 == doctest::Approx(c2_hand).epsilon(1e-12));
  CHECK(c.c2 == doctest::Approx(24.454).epsilon(5e-4));

  CHECK(c.P_fixed_bar == doctest::Approx(120.0 + 20.8 / 0.9).epsilon(1e-12));
  CHECK(c.c3 == doctest::Approx((74.0 / 180.0) * 1.3 + (74.0 / 162.0) * 5.2).epsilon(1e-12));
  CHECK(c.c4 ==
        doctest::Approx((74.0 / 180.0) * 8.0 * 184 * 1024 / (71.4e-6 * 1e9 * 192)).epsilon(1e-12));
}

TEST_CASE("total power") {
  ScenarioConfig config = reference_config();
  config.L = 6;
  config.K = 5;
  SUBCASE("all-zero network burns only the fixed floor") {
    const TotalPower p = total_power(Eigen::VectorXi::Zero(6), Eigen::MatrixXd::Zero(6, 5),
                                     Eigen::VectorXd::Zero(6), config);
    CHECK(p.value() == doctest::Approx(120.0 + 20.8 / 0.9).epsilon(1e-12));
    CHECK(p.radio == doctest::Approx(0.0));
  }
  SUBCASE("coefficient and component forms agree on random configurations") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXi M(6);
      Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(6, 5);
      Eigen::VectorXd p_bar(6);
      for (int l = 0; l < 6; ++l) {
        M(l) = (rng() % 4 == 0) ? 0 : static_cast<int>(1 + rng() % 16);
        p_bar(l) = (rng() % 1000) / 500.0;
        if (M(l) > 0) {
          for (int k = 0; k < 5; ++k) {
            rho(l, k) = (rng() % 3 == 0) ? 0.0 : (rng() % 1000) / 2000.0;
          }
        }
      }
      const TotalPower p = total_power(M, rho, p_bar, config);  // throws if forms disagree
      const double scale = std::max(1.0, p.coefficient_form);
      CHECK(std::abs(p.coefficient_form - p.component_form) <= 1e-12 * scale);
      CHECK(p.radio + p.cloud == doctest::Approx(p.value()).epsilon(1e-12));
    }
  }
  SUBCASE("adding an antenna costs c1 plus c4 per served UE") {
    const PowerCoefficients c = coefficients(config);
    Eigen::VectorXi M = Eigen::VectorXi::Constant(6, 8);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(6, 5, 0.01);
    Eigen::VectorXd p_bar = Eigen::VectorXd::Constant(6, 0.3);
    const double before = total_power(M, rho, p_bar, config).value();
    M(2) += 1;
    const double after = total_power(M, rho, p_bar, config).value();
    CHECK(after - before == doctest::Approx(c.c1 + c.c4 * 5).epsilon(1e-9));
  }
  SUBCASE("monotone in rho, p_bar and M") {
    Eigen::VectorXi M = Eigen::VectorXi::Constant(6, 4);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(6, 5, 0.02);
    Eigen::VectorXd p_bar = Eigen::VectorXd::Constant(6, 0.2);
    const double base = total_power(M, rho, p_bar, config).value();
    rho(1, 1) += 0.1;
    const double r1 = total_power(M, rho, p_bar, config).value();
    CHECK(r1 >= base);
    p_bar(0) += 0.5;
    const double r2 = total_power(M, rho, p_bar, config).value();
    CHECK(r2 >= r1);
    M(3) += 2;
    CHECK(total_power(M, rho, p_bar, config).value() >= r2);
  }
  SUBCASE("transmitting from a deactivated AP is rejected") {
    Eigen::VectorXi M = Eigen::VectorXi::Zero(6);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(6, 5);
    rho(0, 0) = 0.1;
    CHECK_THROWS_AS(total_power(M, rho, Eigen::VectorXd::Zero(6), config),
                    std::invalid_argument);
  }
}
