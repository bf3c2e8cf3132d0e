#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "cfmimo/conic.hpp"

namespace cfmimo::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical-failure";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

int ConicProgram::add_variables(int count) {
  const int first = n_;
  n_ += count;
  lower_.resize(n_, -kInf);
  upper_.resize(n_, kInf);
  return first;
}

void ConicProgram::set_objective(int var, double coeff) { objective_.push_back({var, coeff}); }

void ConicProgram::set_lower_bound(int var, double lo) { lower_.at(var) = lo; }

void ConicProgram::set_upper_bound(int var, double hi) { upper_.at(var) = hi; }

void ConicProgram::add_equality(LinExpr expr) { equalities_.push_back(std::move(expr)); }

void ConicProgram::add_inequality(LinExpr expr) { inequalities_.push_back(std::move(expr)); }

void ConicProgram::add_soc(std::vector<LinExpr> norm_rows, LinExpr rhs) {
  socs_.push_back({std::move(norm_rows), std::move(rhs)});
}

void ConicProgram::add_rotated_soc(LinExpr u, LinExpr v, std::vector<LinExpr> w) {
  // (u+v, u-v, sqrt(2) w) is a plain second-order cone membership.
  SocBlock block;
  LinExpr s0 = u;
  for (const auto& t : v.terms) s0.add(t.var, t.coeff);
  s0.constant += v.constant;
  LinExpr s1 = u;
  for (const auto& t : v.terms) s1.add(t.var, -t.coeff);
  s1.constant -= v.constant;
  block.rhs = std::move(s0);
  block.norm_rows.push_back(std::move(s1));
  const double rt2 = std::sqrt(2.0);
  for (auto& row : w) {
    LinExpr scaled;
    scaled.constant = row.constant * rt2;
    for (const auto& t : row.terms) scaled.add(t.var, t.coeff * rt2);
    block.norm_rows.push_back(std::move(scaled));
  }
  socs_.push_back(std::move(block));
}

void ConicProgram::add_exp(LinExpr x, LinExpr y, LinExpr z) {
  exps_.push_back({std::move(x), std::move(y), std::move(z)});
}

double ConicProgram::max_violation(const Eigen::VectorXd& x) const {
  double viol = 0.0;
  for (int v = 0; v < n_; ++v) {
    if (lower_[v] > -kInf) viol = std::max(viol, lower_[v] - x(v));
    if (upper_[v] < kInf) viol = std::max(viol, x(v) - upper_[v]);
  }
  for (const auto& e : equalities_) viol = std::max(viol, std::abs(e.evaluate(x)));
  for (const auto& e : inequalities_) viol = std::max(viol, e.evaluate(x));
  for (const auto& b : socs_) {
    double nrm = 0.0;
    for (const auto& row : b.norm_rows) {
      const double v = row.evaluate(x);
      nrm += v * v;
    }
    viol = std::max(viol, std::sqrt(nrm) - b.rhs.evaluate(x));
  }
  for (const auto& b : exps_) {
    const double X = b.x.evaluate(x), Y = b.y.evaluate(x), Z = b.z.evaluate(x);
    if (Y > 0.0 && Z > 0.0) {
      viol = std::max(viol, X - Y * std::log(Z / Y));
    } else if (Y >= 0.0) {
      viol = std::max({viol, -Z, X});  // closure: y = 0 requires x <= 0, z >= 0
    } else {
      viol = std::max(viol, -Y);
    }
  }
  return viol;
}

namespace {

struct SparseRow {
  std::vector<LinTerm> terms;
  double h = 0.0;  // row value s = h - g.x
};

SparseRow to_row_slack(const LinExpr& e) {
  // inequality e <= 0: slack s = -e
  SparseRow r;
  r.h = -e.constant;
  r.terms = e.terms;
  return r;
}

SparseRow to_row_value(const LinExpr& e) {
  // s equals the expression value
  SparseRow r;
  r.h = e.constant;
  r.terms.reserve(e.terms.size());
  for (const auto& t : e.terms) r.terms.push_back({t.var, -t.coeff});
  return r;
}

double row_dot(const SparseRow& r, const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (const auto& t : r.terms) acc += t.coeff * x(t.var);
  return acc;
}

struct CompiledSoc {
  std::vector<SparseRow> rows;  // rows[0] is the cone axis
  std::vector<int> footprint;
  std::vector<std::vector<std::pair<int, double>>> local_rows;
  Eigen::MatrixXd gram;  // sum over rows of g g^T on the footprint
  int offset = 0;        // index of rows[0] in the stacked cone vector
  int dim() const { return static_cast<int>(rows.size()); }
};

struct CompiledExp {
  LinExpr x, y, z;
  std::vector<int> footprint;
  int row = 0;  // index in the stacked cone vector
};

}  // namespace

struct Scaling {
  // LP/exp rows
  Eigen::VectorXd w;       // W diagonal
  Eigen::VectorXd lambda;  // scaled point
  // SOC blocks
  struct Soc {
    double eta = 0.0;  // sqrt scaling
    double a = 0.0;
    Eigen::VectorXd q;
    double lambda0 = 0.0;
    Eigen::VectorXd lambda_bar;
  };
  std::vector<Soc> soc;
};

class Solver {
 public:
  Solver(const ConicProgram& p) : prog_(p), n_(p.n_) { compile(); }

  SolveResult run(const SolveOptions& options);

 private:
  const ConicProgram& prog_;
  int n_ = 0;

  std::vector<SparseRow> eq_;       // g.x + s(=0) = h convention: value g.x - h = residual
  std::vector<SparseRow> lp_;       // diag cone rows
  std::vector<CompiledExp> exps_;   // nonlinear rows, after lp_
  std::vector<CompiledSoc> socs_;   // after exp rows
  Eigen::VectorXd c_;
  double cost_scale_ = 1.0;
  int m_ = 0;       // total cone rows
  int p_lp_ = 0;    // diag rows that are linear
  int q_exp_ = 0;   // diag rows that are exponential
  int degree_ = 0;  // barrier degree for mu

  void compile();

  // Per-iterate quantities
  struct Iterate {
    Eigen::VectorXd x, y, s, z;
    Eigen::VectorXd fval;       // q: f_j(x)
    Eigen::VectorXd cy, cz;     // exp gradient coefficients
    Eigen::VectorXd rz;         // cone residuals
    Eigen::VectorXd req;        // equality residuals
    Eigen::VectorXd rx;         // dual residual
    double gap = 0.0, mu = 0.0;
  };

  bool exp_domain_ok(const Eigen::VectorXd& x, double* worst = nullptr) const;
  void eval_nonlinear(Iterate& it) const;
  void compute_residuals(Iterate& it) const;
  Eigen::VectorXd jac_transpose_times(const Iterate& it, const Eigen::VectorXd& v) const;
  Eigen::VectorXd jac_times(const Iterate& it, const Eigen::VectorXd& dx) const;
  bool update_scaling(const Iterate& it, Scaling& sc) const;
  void apply_W(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  void apply_Winv(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  void jordan_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      Eigen::VectorXd& out) const;
  void lambda_division(const Scaling& sc, const Eigen::VectorXd& d, Eigen::VectorXd& out) const;
  void apply_Hinv(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const;
  Eigen::MatrixXd assemble_hessian(const Iterate& it, const Scaling& sc) const;
};

void Solver::compile() {
  for (const auto& e : prog_.equalities_) {
    SparseRow r;
    r.terms = e.terms;
    r.h = -e.constant;  // g.x = h
    double scale = std::abs(r.h);
    for (const auto& t : r.terms) scale = std::max(scale, std::abs(t.coeff));
    if (scale > 0) {
      for (auto& t : r.terms) t.coeff /= scale;
      r.h /= scale;
    }
    eq_.push_back(std::move(r));
  }

  auto push_lp = [this](SparseRow r) {
    double scale = std::abs(r.h);
    for (const auto& t : r.terms) scale = std::max(scale, std::abs(t.coeff));
    if (scale > 0) {
      for (auto& t : r.terms) t.coeff /= scale;
      r.h /= scale;
    }
    lp_.push_back(std::move(r));
  };

  for (const auto& e : prog_.inequalities_) push_lp(to_row_slack(e));

  for (int v = 0; v < n_; ++v) {
    const double lo = prog_.lower_[v];
    const double hi = prog_.upper_[v];
    if (lo > -kInf && lo == hi) {
      SparseRow r;
      r.terms.push_back({v, 1.0});
      r.h = lo;
      eq_.push_back(std::move(r));
      continue;
    }
    if (lo > -kInf) {
      SparseRow r;  // s = x - lo >= 0  ->  s = h - g.x with g = -x
      r.terms.push_back({v, -1.0});
      r.h = -lo;
      push_lp(std::move(r));
    }
    if (hi < kInf) {
      SparseRow r;  // s = hi - x
      r.terms.push_back({v, 1.0});
      r.h = hi;
      push_lp(std::move(r));
    }
  }

  // Exponential blocks: domain rows y >= 0, z >= 0 plus the nonlinear row.
  for (const auto& b : prog_.exps_) {
    LinExpr ny, nz;
    ny.constant = -b.y.constant;
    for (const auto& t : b.y.terms) ny.add(t.var, -t.coeff);
    nz.constant = -b.z.constant;
    for (const auto& t : b.z.terms) nz.add(t.var, -t.coeff);
    push_lp(to_row_slack(ny));
    push_lp(to_row_slack(nz));
  }
  p_lp_ = static_cast<int>(lp_.size());

  q_exp_ = static_cast<int>(prog_.exps_.size());
  int row_index = p_lp_;
  for (const auto& b : prog_.exps_) {
    CompiledExp ce;
    ce.x = b.x;
    ce.y = b.y;
    ce.z = b.z;
    std::vector<int> fp;
    for (const auto& t : b.x.terms) fp.push_back(t.var);
    for (const auto& t : b.y.terms) fp.push_back(t.var);
    for (const auto& t : b.z.terms) fp.push_back(t.var);
    std::sort(fp.begin(), fp.end());
    fp.erase(std::unique(fp.begin(), fp.end()), fp.end());
    ce.footprint = std::move(fp);
    ce.row = row_index++;
    exps_.push_back(std::move(ce));
  }

  int offset = p_lp_ + q_exp_;
  for (const auto& b : prog_.socs_) {
    CompiledSoc cs;
    cs.offset = offset;
    cs.rows.push_back(to_row_value(b.rhs));
    for (const auto& row : b.norm_rows) cs.rows.push_back(to_row_value(row));
    double scale = 0.0;
    for (const auto& row : cs.rows) {
      scale = std::max(scale, std::abs(row.h));
      for (const auto& t : row.terms) scale = std::max(scale, std::abs(t.coeff));
    }
    if (scale > 0) {
      for (auto& row : cs.rows) {
        row.h /= scale;
        for (auto& t : row.terms) t.coeff /= scale;
      }
    }
    std::vector<int> fp;
    for (const auto& row : cs.rows)
      for (const auto& t : row.terms) fp.push_back(t.var);
    std::sort(fp.begin(), fp.end());
    fp.erase(std::unique(fp.begin(), fp.end()), fp.end());
    cs.footprint = std::move(fp);
    cs.local_rows.resize(cs.rows.size());
    const int fsize = static_cast<int>(cs.footprint.size());
    cs.gram = Eigen::MatrixXd::Zero(fsize, fsize);
    for (size_t ri = 0; ri < cs.rows.size(); ++ri) {
      for (const auto& t : cs.rows[ri].terms) {
        const int local = static_cast<int>(
            std::lower_bound(cs.footprint.begin(), cs.footprint.end(), t.var) -
            cs.footprint.begin());
        cs.local_rows[ri].push_back({local, t.coeff});
      }
      for (const auto& [la, ca] : cs.local_rows[ri])
        for (const auto& [lb, cb] : cs.local_rows[ri]) cs.gram(la, lb) += ca * cb;
    }
    offset += cs.dim();
    socs_.push_back(std::move(cs));
  }
  m_ = offset;
  degree_ = p_lp_ + q_exp_ + static_cast<int>(socs_.size());

  c_ = Eigen::VectorXd::Zero(n_);
  for (const auto& t : prog_.objective_) c_(t.var) += t.coeff;
  cost_scale_ = std::max(1.0, c_.lpNorm<Eigen::Infinity>());
}

bool Solver::exp_domain_ok(const Eigen::VectorXd& x, double* worst) const {
  double w = kInf;
  for (const auto& b : exps_) {
    w = std::min(w, b.y.evaluate(x));
    w = std::min(w, b.z.evaluate(x));
  }
  if (worst) *worst = w;
  return exps_.empty() || w > 0.0;
}

void Solver::eval_nonlinear(Iterate& it) const {
  it.fval.resize(q_exp_);
  it.cy.resize(q_exp_);
  it.cz.resize(q_exp_);
  for (int j = 0; j < q_exp_; ++j) {
    const auto& b = exps_[j];
    const double X = b.x.evaluate(it.x);
    const double Y = b.y.evaluate(it.x);
    const double Z = b.z.evaluate(it.x);
    it.fval(j) = X - Y * std::log(Z / Y);
    it.cy(j) = std::log(Y / Z) + 1.0;  // df/dY
    it.cz(j) = -Y / Z;                 // df/dZ
  }
}

void Solver::compute_residuals(Iterate& it) const {
  it.rz.resize(m_);
  // Row convention: s should equal h - g.x, so rz = g.x - h + s.
  for (int i = 0; i < p_lp_; ++i) it.rz(i) = row_dot(lp_[i], it.x) - lp_[i].h + it.s(i);
  for (int j = 0; j < q_exp_; ++j) it.rz(exps_[j].row) = it.fval(j) + it.s(exps_[j].row);
  for (const auto& b : socs_) {
    for (int r = 0; r < b.dim(); ++r) {
      it.rz(b.offset + r) = row_dot(b.rows[r], it.x) - b.rows[r].h + it.s(b.offset + r);
    }
  }

  it.req.resize(eq_.size());
  for (size_t i = 0; i < eq_.size(); ++i) it.req(i) = row_dot(eq_[i], it.x) - eq_[i].h;

  it.rx = c_ / cost_scale_ + jac_transpose_times(it, it.z);
  for (size_t i = 0; i < eq_.size(); ++i) {
    for (const auto& t : eq_[i].terms) it.rx(t.var) += t.coeff * it.y(i);
  }
  it.gap = it.s.dot(it.z);
  it.mu = it.gap / degree_;
}

Eigen::VectorXd Solver::jac_transpose_times(const Iterate& it, const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < p_lp_; ++i) {
    const double vi = v(i);
    if (vi == 0.0) continue;
    for (const auto& t : lp_[i].terms) out(t.var) += t.coeff * vi;
  }
  for (int j = 0; j < q_exp_; ++j) {
    const double vj = v(exps_[j].row);
    if (vj == 0.0) continue;
    for (const auto& t : exps_[j].x.terms) out(t.var) += t.coeff * vj;
    for (const auto& t : exps_[j].y.terms) out(t.var) += t.coeff * it.cy(j) * vj;
    for (const auto& t : exps_[j].z.terms) out(t.var) += t.coeff * it.cz(j) * vj;
  }
  for (const auto& b : socs_) {
    for (int r = 0; r < b.dim(); ++r) {
      const double vr = v(b.offset + r);
      if (vr == 0.0) continue;
      for (const auto& t : b.rows[r].terms) out(t.var) += t.coeff * vr;
    }
  }
  return out;
}

Eigen::VectorXd Solver::jac_times(const Iterate& it, const Eigen::VectorXd& dx) const {
  Eigen::VectorXd out(m_);
  for (int i = 0; i < p_lp_; ++i) out(i) = row_dot(lp_[i], dx);
  for (int j = 0; j < q_exp_; ++j) {
    double acc = 0.0;
    for (const auto& t : exps_[j].x.terms) acc += t.coeff * dx(t.var);
    for (const auto& t : exps_[j].y.terms) acc += t.coeff * it.cy(j) * dx(t.var);
    for (const auto& t : exps_[j].z.terms) acc += t.coeff * it.cz(j) * dx(t.var);
    out(exps_[j].row) = acc;
  }
  for (const auto& b : socs_) {
    for (int r = 0; r < b.dim(); ++r) out(b.offset + r) = row_dot(b.rows[r], dx);
  }
  return out;
}

bool Solver::update_scaling(const Iterate& it, Scaling& sc) const {
  sc.w.resize(m_);
  sc.lambda.resize(m_);
  const int diag = p_lp_ + q_exp_;
  for (int i = 0; i < diag; ++i) {
    if (!(it.s(i) > 0.0) || !(it.z(i) > 0.0)) return false;
    sc.w(i) = std::sqrt(it.s(i) / it.z(i));
    sc.lambda(i) = std::sqrt(it.s(i) * it.z(i));
  }
  sc.soc.clear();
  sc.soc.reserve(socs_.size());
  for (const auto& b : socs_) {
    const auto sseg = it.s.segment(b.offset, b.dim());
    const auto zseg = it.z.segment(b.offset, b.dim());
    const double sres = sseg(0) * sseg(0) - sseg.tail(b.dim() - 1).squaredNorm();
    const double zres = zseg(0) * zseg(0) - zseg.tail(b.dim() - 1).squaredNorm();
    if (!(sres > 0.0) || !(zres > 0.0) || !(sseg(0) > 0.0) || !(zseg(0) > 0.0)) return false;
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    Eigen::VectorXd sbar = sseg / snorm;
    Eigen::VectorXd zbar = zseg / znorm;
    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    Scaling::Soc ss;
    ss.eta = std::sqrt(snorm / znorm);
    ss.a = (sbar(0) + zbar(0)) / (2.0 * gamma);
    ss.q = (sbar.tail(b.dim() - 1) - zbar.tail(b.dim() - 1)) / (2.0 * gamma);
    // lambda = W z for this block
    const double qz = ss.q.dot(zseg.tail(b.dim() - 1));
    ss.lambda0 = ss.eta * (ss.a * zseg(0) + qz);
    ss.lambda_bar =
        ss.eta * (zseg.tail(b.dim() - 1) + (zseg(0) + qz / (1.0 + ss.a)) * ss.q);
    sc.lambda(b.offset) = ss.lambda0;
    sc.lambda.segment(b.offset + 1, b.dim() - 1) = ss.lambda_bar;
    sc.soc.push_back(std::move(ss));
  }
  return true;
}

void Solver::apply_W(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  out.resize(m_);
  const int diag = p_lp_ + q_exp_;
  out.head(diag) = sc.w.head(diag).cwiseProduct(u.head(diag));
  for (size_t bi = 0; bi < socs_.size(); ++bi) {
    const auto& b = socs_[bi];
    const auto& ss = sc.soc[bi];
    const auto useg = u.segment(b.offset, b.dim());
    const double qu = ss.q.dot(useg.tail(b.dim() - 1));
    out(b.offset) = ss.eta * (ss.a * useg(0) + qu);
    out.segment(b.offset + 1, b.dim() - 1) =
        ss.eta * (useg.tail(b.dim() - 1) + (useg(0) + qu / (1.0 + ss.a)) * ss.q);
  }
}

void Solver::apply_Winv(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  out.resize(m_);
  const int diag = p_lp_ + q_exp_;
  out.head(diag) = u.head(diag).cwiseQuotient(sc.w.head(diag));
  for (size_t bi = 0; bi < socs_.size(); ++bi) {
    const auto& b = socs_[bi];
    const auto& ss = sc.soc[bi];
    const auto useg = u.segment(b.offset, b.dim());
    const double qu = ss.q.dot(useg.tail(b.dim() - 1));
    out(b.offset) = (ss.a * useg(0) - qu) / ss.eta;
    out.segment(b.offset + 1, b.dim() - 1) =
        (useg.tail(b.dim() - 1) + (-useg(0) + qu / (1.0 + ss.a)) * ss.q) / ss.eta;
  }
}

void Solver::jordan_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            Eigen::VectorXd& out) const {
  out.resize(m_);
  const int diag = p_lp_ + q_exp_;
  out.head(diag) = a.head(diag).cwiseProduct(b.head(diag));
  for (const auto& blk : socs_) {
    const auto aseg = a.segment(blk.offset, blk.dim());
    const auto bseg = b.segment(blk.offset, blk.dim());
    out(blk.offset) = aseg.dot(bseg);
    out.segment(blk.offset + 1, blk.dim() - 1) =
        aseg(0) * bseg.tail(blk.dim() - 1) + bseg(0) * aseg.tail(blk.dim() - 1);
  }
}

void Solver::lambda_division(const Scaling& sc, const Eigen::VectorXd& d,
                             Eigen::VectorXd& out) const {
  out.resize(m_);
  const int diag = p_lp_ + q_exp_;
  out.head(diag) = d.head(diag).cwiseQuotient(sc.lambda.head(diag));
  for (size_t bi = 0; bi < socs_.size(); ++bi) {
    const auto& b = socs_[bi];
    const auto& ss = sc.soc[bi];
    const auto dseg = d.segment(b.offset, b.dim());
    const double nu = ss.lambda0 * ss.lambda0 - ss.lambda_bar.squaredNorm();
    const double x0 = (ss.lambda0 * dseg(0) - ss.lambda_bar.dot(dseg.tail(b.dim() - 1))) / nu;
    out(b.offset) = x0;
    out.segment(b.offset + 1, b.dim() - 1) =
        (dseg.tail(b.dim() - 1) - x0 * ss.lambda_bar) / ss.lambda0;
  }
}

void Solver::apply_Hinv(const Scaling& sc, const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  // H = W^T W; H^{-1} u = W^{-1} W^{-T} u (W symmetric per block)
  Eigen::VectorXd tmp;
  apply_Winv(sc, u, tmp);
  apply_Winv(sc, tmp, out);
}

double Solver::step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const {
  double alpha = kInf;
  const int diag = p_lp_ + q_exp_;
  for (int i = 0; i < diag; ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  for (const auto& b : socs_) {
    const auto vseg = v.segment(b.offset, b.dim());
    const auto dseg = dv.segment(b.offset, b.dim());
    if (dseg(0) < 0.0) alpha = std::min(alpha, -vseg(0) / dseg(0));
    const double a2 = dseg(0) * dseg(0) - dseg.tail(b.dim() - 1).squaredNorm();
    const double a1 = vseg(0) * dseg(0) - vseg.tail(b.dim() - 1).dot(dseg.tail(b.dim() - 1));
    const double a0 = vseg(0) * vseg(0) - vseg.tail(b.dim() - 1).squaredNorm();
    // roots of a2 t^2 + 2 a1 t + a0 = 0
    const double disc = a1 * a1 - a2 * a0;
    if (disc < 0.0) continue;
    const double rtdisc = std::sqrt(disc);
    double roots[2];
    int nroots = 0;
    if (std::abs(a2) > 1e-300) {
      roots[nroots++] = (-a1 - rtdisc) / a2;
      roots[nroots++] = (-a1 + rtdisc) / a2;
    } else if (std::abs(a1) > 0.0) {
      roots[nroots++] = -a0 / (2.0 * a1);
    }
    double smallest_pos = kInf;
    for (int r = 0; r < nroots; ++r) {
      if (roots[r] > 1e-14) smallest_pos = std::min(smallest_pos, roots[r]);
    }
    alpha = std::min(alpha, smallest_pos);
  }
  return alpha;
}

Eigen::MatrixXd Solver::assemble_hessian(const Iterate& it, const Scaling& sc) const {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < p_lp_; ++i) {
    const double wi = it.z(i) / it.s(i);
    for (const auto& [va, ca] : lp_[i].terms)
      for (const auto& [vb, cb] : lp_[i].terms) H(va, vb) += wi * ca * cb;
  }
  for (int j = 0; j < q_exp_; ++j) {
    const auto& b = exps_[j];
    const int row = b.row;
    const double zj = it.z(row);
    const double sj = it.s(row);
    const double Y = b.y.evaluate(it.x);
    const double Z = b.z.evaluate(it.x);
    // grad f on the footprint
    const int fsize = static_cast<int>(b.footprint.size());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(fsize);
    Eigen::VectorXd curv = Eigen::VectorXd::Zero(fsize);  // a_y - (Y/Z) a_z
    auto local = [&](int var) {
      return static_cast<int>(std::lower_bound(b.footprint.begin(), b.footprint.end(), var) -
                              b.footprint.begin());
    };
    for (const auto& t : b.x.terms) grad(local(t.var)) += t.coeff;
    for (const auto& t : b.y.terms) {
      grad(local(t.var)) += t.coeff * it.cy(j);
      curv(local(t.var)) += t.coeff;
    }
    for (const auto& t : b.z.terms) {
      grad(local(t.var)) += t.coeff * it.cz(j);
      curv(local(t.var)) -= t.coeff * (Y / Z);
    }
    const double wq = zj / sj;
    const double hess_scale = zj / Y;  // Hessian of f is (1/Y) curv curv^T
    for (int a = 0; a < fsize; ++a) {
      const int va = b.footprint[a];
      for (int bb = 0; bb < fsize; ++bb) {
        const int vb = b.footprint[bb];
        H(va, vb) += wq * grad(a) * grad(bb) + hess_scale * curv(a) * curv(bb);
      }
    }
  }
  for (size_t bi = 0; bi < socs_.size(); ++bi) {
    const auto& b = socs_[bi];
    const auto& ss = sc.soc[bi];
    const int fsize = static_cast<int>(b.footprint.size());
    const double inv_eta2 = 1.0 / (ss.eta * ss.eta);
    // v = G^T (R wbar) with R wbar = (a, -q)
    Eigen::VectorXd v = Eigen::VectorXd::Zero(fsize);
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(fsize);
    for (const auto& [lv, cv] : b.local_rows[0]) {
      v(lv) += ss.a * cv;
      g0(lv) += cv;
    }
    for (int r = 1; r < b.dim(); ++r) {
      const double qr = ss.q(r - 1);
      if (qr == 0.0) continue;
      for (const auto& [lv, cv] : b.local_rows[r]) v(lv) -= qr * cv;
    }
    Eigen::MatrixXd local = b.gram;
    local.noalias() += 2.0 * v * v.transpose();
    local.noalias() -= 2.0 * g0 * g0.transpose();
    local *= inv_eta2;
    for (int a = 0; a < fsize; ++a) {
      const int va = b.footprint[a];
      for (int bb = 0; bb < fsize; ++bb) H(va, b.footprint[bb]) += local(a, bb);
    }
  }
  return H;
}

SolveResult Solver::run(const SolveOptions& options) {
  SolveResult result;
  if (m_ == 0) throw std::invalid_argument("conic solve: program has no cone constraints");

  Iterate it;
  it.x = options.initial_point.value_or(Eigen::VectorXd::Zero(n_));
  if (it.x.size() != n_) throw std::invalid_argument("conic solve: initial point size mismatch");
  if (!exp_domain_ok(it.x)) {
    result.status = SolveStatus::numerical_failure;
    return result;
  }
  it.y = Eigen::VectorXd::Zero(eq_.size());
  it.s = Eigen::VectorXd::Zero(m_);
  it.z = Eigen::VectorXd::Zero(m_);
  const int diag = p_lp_ + q_exp_;
  it.s.head(diag).setOnes();
  it.z.head(diag).setOnes();
  for (const auto& b : socs_) {
    it.s(b.offset) = 1.0;
    it.z(b.offset) = 1.0;
  }

  const int meq = static_cast<int>(eq_.size());
  Eigen::MatrixXd Aeq = Eigen::MatrixXd::Zero(meq, n_);
  Eigen::VectorXd beq(meq);
  for (int i = 0; i < meq; ++i) {
    for (const auto& t : eq_[i].terms) Aeq(i, t.var) += t.coeff;
    beq(i) = eq_[i].h;
  }

  const double tol = options.tolerance;
  Scaling sc;
  int stall_count = 0;

  // Track the best iterate seen; at degenerate boundary optima the metrics
  // can degrade again once the achievable precision has been reached.
  Eigen::VectorXd best_x = it.x;
  double best_metric = kInf, best_pres = kInf, best_dres = kInf, best_gap = kInf;
  auto finish = [&](SolveStatus fallback) {
    result.x = best_x;
    result.objective = c_.dot(best_x);
    result.primal_residual = best_pres;
    result.dual_residual = best_dres;
    result.gap = best_gap;
    result.status = best_metric <= tol ? SolveStatus::optimal : fallback;
    return result;
  };

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    eval_nonlinear(it);
    compute_residuals(it);

    const double pres =
        std::max(it.req.size() ? it.req.lpNorm<Eigen::Infinity>() : 0.0,
                 it.rz.lpNorm<Eigen::Infinity>());
    const double dres = it.rx.lpNorm<Eigen::Infinity>();
    const double pobj = c_.dot(it.x) / cost_scale_;
    const double relgap = it.gap / std::max(1.0, std::abs(pobj));
    const double metric = std::max({pres, dres, relgap});

    result.iterations = iter;
    if (metric < best_metric) {
      best_metric = metric;
      best_pres = pres;
      best_dres = dres;
      best_gap = relgap;
      best_x = it.x;
    }

    if (best_metric <= tol) return finish(SolveStatus::optimal);
    if (metric > 1e4 * std::max(best_metric, 1e-300) && best_metric < 1e-4) {
      return finish(SolveStatus::iteration_limit);  // numerical floor reached
    }

    // Certificate-based infeasibility tests (linear programs only; programs
    // with exponential rows rely on caller-side phase-I checks).
    if (q_exp_ == 0) {
      double hz = 0.0;
      for (int i = 0; i < p_lp_; ++i) hz += lp_[i].h * it.z(i);
      for (const auto& b : socs_)
        for (int r = 0; r < b.dim(); ++r) hz += b.rows[r].h * it.z(b.offset + r);
      for (int i = 0; i < meq; ++i) hz += beq(i) * it.y(i);
      if (hz < -1e-10) {
        Eigen::VectorXd atz = jac_transpose_times(it, it.z);
        for (int i = 0; i < meq; ++i)
          for (const auto& t : eq_[i].terms) atz(t.var) += t.coeff * it.y(i);
        if (atz.lpNorm<Eigen::Infinity>() <= 1e-8 * (-hz)) {
          result.status = SolveStatus::infeasible;
          result.x = it.x;
          return result;
        }
      }
      const double cx = c_.dot(it.x) / cost_scale_;
      if (cx < -1e3) {
        // Unboundedness: scaled iterate is an improving ray.
        Eigen::VectorXd xn = it.x / std::max(1.0, it.x.lpNorm<Eigen::Infinity>());
        double ray_viol = 0.0;
        for (int i = 0; i < meq; ++i) ray_viol = std::max(ray_viol, std::abs(row_dot(eq_[i], xn)));
        for (int i = 0; i < p_lp_; ++i) ray_viol = std::max(ray_viol, row_dot(lp_[i], xn));
        for (const auto& b : socs_) {
          double nrm = 0.0;
          for (int r = 1; r < b.dim(); ++r) {
            const double vv = -row_dot(b.rows[r], xn);
            nrm += vv * vv;
          }
          ray_viol = std::max(ray_viol, std::sqrt(nrm) - (-row_dot(b.rows[0], xn)));
        }
        const double descent = -c_.dot(xn) / cost_scale_;
        if (descent > 0 && ray_viol <= 1e-8 * descent) {
          result.status = SolveStatus::unbounded;
          result.x = it.x;
          return result;
        }
      }
    }

    if (iter == options.max_iterations) break;

    if (!update_scaling(it, sc)) return finish(SolveStatus::numerical_failure);

    Eigen::MatrixXd Hbar = assemble_hessian(it, sc);
    const double reg0 = 1e-12 * std::max(1.0, Hbar.diagonal().maxCoeff());
    double reg = reg0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
      Eigen::MatrixXd Hreg = Hbar;
      Hreg.diagonal().array() += reg;
      llt.compute(Hreg);
      if (llt.info() == Eigen::Success) break;
      reg *= 100.0;
      if (reg > 1e-2 * std::max(1.0, Hbar.diagonal().maxCoeff())) {
        return finish(SolveStatus::numerical_failure);
      }
    }

    Eigen::MatrixXd schur;
    Eigen::LLT<Eigen::MatrixXd> schur_llt;
    if (meq > 0) {
      schur = Aeq * llt.solve(Aeq.transpose());
      schur.diagonal().array() += reg0;
      schur_llt.compute(schur);
      if (schur_llt.info() != Eigen::Success) return finish(SolveStatus::numerical_failure);
    }

    auto kkt_solve = [&](const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                         Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
      if (meq == 0) {
        dx = llt.solve(r1);
        dy.resize(0);
        return;
      }
      const Eigen::VectorXd hr1 = llt.solve(r1);
      dy = schur_llt.solve(Aeq * hr1 - r2);
      dx = llt.solve(r1 - Aeq.transpose() * dy);
    };

    // Solves the Newton system
    //   Hnl dx + A^T dy + J^T dz = e1,  A dx = e2,
    //   W^{-1} ds + W dz = e3,          J dx + ds = e4
    // by elimination, with iterative refinement against the full equations
    // (the normal-equations form squares the cone scaling's conditioning).
    auto newton_general = [&](const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                              const Eigen::VectorXd& e3, const Eigen::VectorXd& e4,
                              Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                              Eigen::VectorXd& ds) {
      Eigen::VectorXd wte3;
      apply_W(sc, e3, wte3);
      Eigen::VectorXd inner = wte3 - e4;
      Eigen::VectorXd hinv_inner;
      apply_Hinv(sc, inner, hinv_inner);
      const Eigen::VectorXd r1 = e1 - jac_transpose_times(it, hinv_inner);
      kkt_solve(r1, e2, dx, dy);
      Eigen::VectorXd jdx = jac_times(it, dx);
      apply_Hinv(sc, Eigen::VectorXd(jdx + inner), dz);
      ds = e4 - jdx;
    };

    auto hnl_times = [&](const Eigen::VectorXd& v) {
      // Curvature of the exponential rows only (the symmetric-cone part of
      // the Hessian lives inside H, not here).
      Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
      for (int j = 0; j < q_exp_; ++j) {
        const auto& b = exps_[j];
        const double Y = b.y.evaluate(it.x);
        const double Z = b.z.evaluate(it.x);
        double curv_dot = 0.0;
        for (const auto& t : b.y.terms) curv_dot += t.coeff * v(t.var);
        for (const auto& t : b.z.terms) curv_dot -= t.coeff * (Y / Z) * v(t.var);
        const double scale = it.z(b.row) / Y * curv_dot;
        for (const auto& t : b.y.terms) out(t.var) += t.coeff * scale;
        for (const auto& t : b.z.terms) out(t.var) -= t.coeff * (Y / Z) * scale;
      }
      return out;
    };

    auto direction = [&](double res_scale, const Eigen::VectorXd& dtilde, Eigen::VectorXd& dx,
                         Eigen::VectorXd& dy, Eigen::VectorXd& dz, Eigen::VectorXd& ds) {
      const Eigen::VectorXd e1 = -res_scale * it.rx;
      const Eigen::VectorXd e2 = -res_scale * it.req;
      const Eigen::VectorXd& e3 = dtilde;
      const Eigen::VectorXd e4 = -res_scale * it.rz;
      newton_general(e1, e2, e3, e4, dx, dy, dz, ds);

      for (int round = 0; round < 2; ++round) {
        // Defects against the full Newton equations.
        Eigen::VectorXd f1 = e1 - hnl_times(dx) - jac_transpose_times(it, dz);
        for (int i = 0; i < meq; ++i) {
          for (const auto& t : eq_[i].terms) f1(t.var) -= t.coeff * dy(i);
        }
        Eigen::VectorXd f2 = e2;
        for (int i = 0; i < meq; ++i) f2(i) -= row_dot(eq_[i], dx);
        Eigen::VectorXd winv_ds, w_dz;
        apply_Winv(sc, ds, winv_ds);
        apply_W(sc, dz, w_dz);
        const Eigen::VectorXd f3 = e3 - winv_ds - w_dz;
        const Eigen::VectorXd f4 = e4 - jac_times(it, dx) - ds;
        const double defect = std::max({f1.lpNorm<Eigen::Infinity>(),
                                        f2.size() ? f2.lpNorm<Eigen::Infinity>() : 0.0,
                                        f3.lpNorm<Eigen::Infinity>(),
                                        f4.lpNorm<Eigen::Infinity>()});
        if (defect < 1e-11 * (1.0 + dtilde.lpNorm<Eigen::Infinity>())) break;
        Eigen::VectorXd cx, cy, cz, cs;
        newton_general(f1, f2, f3, f4, cx, cy, cz, cs);
        dx += cx;
        if (meq > 0) dy += cy;
        dz += cz;
        ds += cs;
      }
    };

    // Affine (predictor) direction: d = -lambda o lambda => dtilde = -lambda
    Eigen::VectorXd dxa, dya, dza, dsa;
    {
      Eigen::VectorXd dtilde = -sc.lambda;
      direction(1.0, dtilde, dxa, dya, dza, dsa);
    }
    double alpha_aff = std::min({1.0, step_to_boundary(it.s, dsa), step_to_boundary(it.z, dza)});
    const double mu_aff = (it.s + alpha_aff * dsa).dot(it.z + alpha_aff * dza) / degree_;
    double sigma = std::pow(std::max(0.0, mu_aff / it.mu), 3.0);
    sigma = std::min(sigma, 0.999);

    // Combined (corrector) direction.
    Eigen::VectorXd dx, dy, dz, ds;
    {
      Eigen::VectorXd wds, wdz, corr, d(m_), dtilde;
      apply_Winv(sc, dsa, wds);
      apply_W(sc, dza, wdz);
      jordan_product(wds, wdz, corr);
      Eigen::VectorXd ll;
      jordan_product(sc.lambda, sc.lambda, ll);
      d = -ll - corr;
      const int dcount = p_lp_ + q_exp_;
      d.head(dcount).array() += sigma * it.mu;
      for (const auto& b : socs_) d(b.offset) += sigma * it.mu;
      lambda_division(sc, d, dtilde);
      direction(1.0 - sigma, dtilde, dx, dy, dz, ds);
    }

    double alpha =
        std::min({1.0, 0.99 * step_to_boundary(it.s, ds), 0.99 * step_to_boundary(it.z, dz)});
    // Keep exp-cone arguments inside their domain.
    int backtracks = 0;
    while (!exp_domain_ok(it.x + alpha * dx) && backtracks < 60) {
      alpha *= 0.5;
      ++backtracks;
    }
    if (alpha < 1e-13) {
      ++stall_count;
      if (stall_count >= 3) return finish(SolveStatus::numerical_failure);
    } else {
      stall_count = 0;
    }

    it.x += alpha * dx;
    if (meq > 0) it.y += alpha * dy;
    it.s += alpha * ds;
    it.z += alpha * dz;
  }

  return finish(SolveStatus::iteration_limit);
}

SolveResult ConicProgram::solve(const SolveOptions& options) const {
  Solver solver(*this);
  return solver.run(options);
}

void ConicProgram::dump(std::ostream& out) const {
  auto write_expr = [&out](const LinExpr& e) {
    out << e.constant;
    for (const auto& t : e.terms) out << " " << t.var << ":" << t.coeff;
    out << "\n";
  };
  out << "conic-program v1\n";
  out << "vars " << n_ << "\n";
  out << "minimize\n";
  LinExpr obj;
  obj.terms = objective_;
  write_expr(obj);
  out << "bounds\n";
  for (int v = 0; v < n_; ++v) {
    if (lower_[v] > -kInf || upper_[v] < kInf) {
      out << v << " " << lower_[v] << " " << upper_[v] << "\n";
    }
  }
  out << "eq " << equalities_.size() << "\n";
  for (const auto& e : equalities_) write_expr(e);
  out << "ineq " << inequalities_.size() << "\n";
  for (const auto& e : inequalities_) write_expr(e);
  out << "soc " << socs_.size() << "\n";
  for (const auto& b : socs_) {
    out << "block " << b.norm_rows.size() + 1 << "\n";
    write_expr(b.rhs);
    for (const auto& r : b.norm_rows) write_expr(r);
  }
  out << "exp " << exps_.size() << "\n";
  for (const auto& b : exps_) {
    write_expr(b.x);
    write_expr(b.y);
    write_expr(b.z);
  }
}

}  // namespace cfmimo::conic
