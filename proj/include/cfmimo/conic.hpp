#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cfmimo::conic {

struct LinTerm {
  int var = -1;
  double coeff = 0.0;
};

/// Sparse affine expression sum_i coeff_i * x_i + constant.
struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  static LinExpr variable(int var, double coeff = 1.0) {
    LinExpr e;
    e.terms.push_back({var, coeff});
    return e;
  }
  LinExpr& add(int var, double coeff) {
    if (coeff != 0.0) terms.push_back({var, coeff});
    return *this;
  }
  LinExpr& offset(double c) {
    constant += c;
    return *this;
  }
  double evaluate(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coeff * x(t.var);
    return v;
  }
};

enum class SolveStatus {
  optimal,
  infeasible,
  unbounded,
  numerical_failure,
  iteration_limit,
};

const char* to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok() const { return status == SolveStatus::optimal; }
};

struct SolveOptions {
  double tolerance = 1e-8;  ///< relative duality gap and residual target
  int max_iterations = 200;
  std::optional<Eigen::VectorXd> initial_point;  ///< must satisfy exp-cone domains
};

/// A convex conic program: linear objective over affine equalities and
/// inequalities, second-order cones, rotated second-order cones and
/// exponential cones (the latter express rate constraints of the form
/// B log2(1 + a p) >= s). Immutable once handed to solve().
class ConicProgram {
 public:
  int add_variables(int count);
  int variable_count() const { return n_; }

  void set_objective(int var, double coeff);
  void set_lower_bound(int var, double lo);
  void set_upper_bound(int var, double hi);

  void add_equality(LinExpr expr);    ///< expr == 0
  void add_inequality(LinExpr expr);  ///< expr <= 0

  /// || norm_rows || <= rhs
  void add_soc(std::vector<LinExpr> norm_rows, LinExpr rhs);
  /// 2 u v >= ||w||^2 with u, v >= 0
  void add_rotated_soc(LinExpr u, LinExpr v, std::vector<LinExpr> w);
  /// y * exp(x / y) <= z with y > 0 (closure taken for y -> 0)
  void add_exp(LinExpr x, LinExpr y, LinExpr z);

  SolveResult solve(const SolveOptions& options = {}) const;

  /// Largest constraint violation of a candidate point, checked by direct
  /// evaluation of every stored constraint (no solver internals).
  double max_violation(const Eigen::VectorXd& x) const;

  /// Plain-text dump in the documented standard form (see README).
  void dump(std::ostream& out) const;

  // Introspection used by the dump format and tests.
  int equality_count() const { return static_cast<int>(equalities_.size()); }
  int inequality_count() const { return static_cast<int>(inequalities_.size()); }
  int soc_count() const { return static_cast<int>(socs_.size()); }
  int exp_count() const { return static_cast<int>(exps_.size()); }

 private:
  friend class Solver;

  struct SocBlock {
    std::vector<LinExpr> norm_rows;
    LinExpr rhs;
  };
  struct ExpBlock {
    LinExpr x, y, z;
  };

  int n_ = 0;
  std::vector<LinTerm> objective_;
  std::vector<double> lower_, upper_;
  std::vector<LinExpr> equalities_;
  std::vector<LinExpr> inequalities_;
  std::vector<SocBlock> socs_;
  std::vector<ExpBlock> exps_;
};

}  // namespace cfmimo::conic
