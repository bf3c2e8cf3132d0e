#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfmimo/conic.hpp"

using namespace cfmimo::conic;

TEST_CASE("one dimensional lp") {
  ConicProgram p;
  const int x = p.add_variables(1);
  p.set_objective(x, 1.0);
  p.set_lower_bound(x, 3.0);
  const SolveResult r = p.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(x) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.primal_residual <= 1e-8);
  CHECK(r.dual_residual <= 1e-8);
}

TEST_CASE("soc norm epigraph") {
  // minimize t s.t. ||(1,1)|| <= t
  ConicProgram p;
  const int t = p.add_variables(1);
  p.set_objective(t, 1.0);
  p.add_soc({LinExpr(1.0), LinExpr(1.0)}, LinExpr::variable(t));
  const SolveResult r = p.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(t) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("rate constraint via exponential cone") {
  // minimize p s.t. log2(1 + p) >= 1, p >= 0
  ConicProgram prog;
  const int p = prog.add_variables(1);
  prog.set_objective(p, 1.0);
  prog.set_lower_bound(p, 0.0);
  // exp(x) <= 1 + p with x = ln(2): block (ln 2, 1, 1 + p)
  LinExpr z(1.0);
  z.add(p, 1.0);
  prog.add_exp(LinExpr(std::log(2.0)), LinExpr(1.0), z);
  const SolveResult r = prog.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(p) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rotated cone boundary") {
  // minimize u s.t. 2 u v >= ||w||^2 with v = 1/2, w = 1  ->  u >= 1
  ConicProgram prog;
  const int u = prog.add_variables(1);
  prog.set_objective(u, 1.0);
  prog.add_rotated_soc(LinExpr::variable(u), LinExpr(0.5), {LinExpr(1.0)});
  const SolveResult r = prog.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(u) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("quadratic epigraph via rotated cone") {
  // minimize t s.t. t >= (x-1)^2 + (y+2)^2, encoded as 2 t (1/2) >= ||.||^2
  ConicProgram prog;
  const int t = prog.add_variables(1);
  const int x = prog.add_variables(2);
  prog.set_objective(t, 1.0);
  LinExpr w1 = LinExpr::variable(x);
  w1.offset(-1.0);
  LinExpr w2 = LinExpr::variable(x + 1);
  w2.offset(2.0);
  prog.add_rotated_soc(LinExpr::variable(t), LinExpr(0.5), {w1, w2});
  const SolveResult r = prog.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(t) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.x(x) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x(x + 1) == doctest::Approx(-2.0).epsilon(1e-5));
}

TEST_CASE("equality constraints") {
  // minimize x + y s.t. x + 2y = 4, x,y >= 0  -> (0, 2)
  ConicProgram prog;
  const int x = prog.add_variables(2);
  prog.set_objective(x, 1.0);
  prog.set_objective(x + 1, 1.0);
  prog.set_lower_bound(x, 0.0);
  prog.set_lower_bound(x + 1, 0.0);
  LinExpr eq = LinExpr::variable(x);
  eq.add(x + 1, 2.0).offset(-4.0);
  prog.add_equality(eq);
  const SolveResult r = prog.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.x(x + 1) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("infeasible program reports status") {
  ConicProgram prog;
  const int x = prog.add_variables(1);
  prog.set_objective(x, 1.0);
  prog.set_lower_bound(x, 3.0);
  LinExpr le = LinExpr::variable(x);  // x <= 2
  le.offset(-2.0);
  prog.add_inequality(le);
  const SolveResult r = prog.solve();
  CHECK(r.status == SolveStatus::infeasible);
}

TEST_CASE("unbounded program reports status") {
  ConicProgram prog;
  const int x = prog.add_variables(1);
  prog.set_objective(x, -1.0);
  prog.set_lower_bound(x, 0.0);
  const SolveResult r = prog.solve();
  CHECK(r.status == SolveStatus::unbounded);
}

TEST_CASE("returned points satisfy constraints by direct evaluation") {
  ConicProgram prog;
  const int v = prog.add_variables(3);
  prog.set_objective(v, 2.0);
  prog.set_objective(v + 1, 1.0);
  prog.set_objective(v + 2, 0.5);
  prog.set_lower_bound(v, 0.0);
  prog.set_lower_bound(v + 1, 0.0);
  prog.set_lower_bound(v + 2, 0.0);
  LinExpr cover = LinExpr(6.0);
  cover.add(v, -1.0).add(v + 1, -1.0).add(v + 2, -1.0);  // x+y+z >= 6
  prog.add_inequality(cover);
  LinExpr rhs = LinExpr::variable(v + 2);
  rhs.offset(1.0);
  prog.add_soc({LinExpr::variable(v), LinExpr::variable(v + 1)}, rhs);
  const SolveResult r = prog.solve();
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(prog.max_violation(r.x) <= 1e-7);
}

TEST_CASE("re-solve determinism") {
  ConicProgram prog;
  const int x = prog.add_variables(2);
  prog.set_objective(x, 1.0);
  prog.set_objective(x + 1, 2.0);
  prog.set_lower_bound(x, 0.5);
  prog.set_lower_bound(x + 1, 0.25);
  LinExpr rhs(4.0);
  prog.add_soc({LinExpr::variable(x, 2.0), LinExpr::variable(x + 1)}, rhs);
  const SolveResult a = prog.solve();
  const SolveResult b = prog.solve();
  REQUIRE(a.status == SolveStatus::optimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("dump emits the documented standard form") {
  ConicProgram prog;
  const int x = prog.add_variables(1);
  prog.set_objective(x, 1.0);
  prog.set_lower_bound(x, 0.0);
  LinExpr z(1.0);
  z.add(x, 1.0);
  prog.add_exp(LinExpr(std::log(2.0)), LinExpr(1.0), z);
  std::ostringstream oss;
  prog.dump(oss);
  const std::string text = oss.str();
  CHECK(text.find("conic-program v1") != std::string::npos);
  CHECK(text.find("vars 1") != std::string::npos);
  CHECK(text.find("exp 1") != std::string::npos);
}
