#include "rdoe/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace rdoe::conic {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "?";
}

NormKind dual_norm(NormKind k) {
  switch (k) {
    case NormKind::L1: return NormKind::LInf;
    case NormKind::LInf: return NormKind::L1;
    case NormKind::L2: return NormKind::L2;
  }
  return NormKind::L2;
}

double norm_value(NormKind k, const Eigen::VectorXd& v) {
  switch (k) {
    case NormKind::L1: return v.lpNorm<1>();
    case NormKind::L2: return v.norm();
    case NormKind::LInf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

NormKind norm_from_string(const std::string& s) {
  if (s == "1") return NormKind::L1;
  if (s == "2") return NormKind::L2;
  if (s == "inf") return NormKind::LInf;
  throw std::invalid_argument("unknown norm '" + s + "' (expected 1, 2 or inf)");
}

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::L1: return "1";
    case NormKind::L2: return "2";
    case NormKind::LInf: return "inf";
  }
  return "?";
}

void LinExpr::add_term(int var, double coeff) {
  if (coeff == 0.0) return;
  for (auto& [v, c] : terms_) {
    if (v == var) {
      c += coeff;
      return;
    }
  }
  terms_.push_back({var, coeff});
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  for (const auto& [v, c] : other.terms_) add_term(v, c);
  constant_ += other.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  for (const auto& [v, c] : other.terms_) add_term(v, -c);
  constant_ -= other.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& [v, c] : terms_) c *= s;
  constant_ *= s;
  return *this;
}

double LinExpr::evaluate(const Eigen::VectorXd& x) const {
  double out = constant_;
  for (const auto& [v, c] : terms_) out += c * x(v);
  return out;
}

int Program::add_var(const std::string& name) {
  std::string clean = name;
  std::replace(clean.begin(), clean.end(), ' ', '_');
  names_.push_back(clean.empty() ? "x" + std::to_string(names_.size()) : clean);
  nonneg_.push_back(false);
  in_cone_.push_back(false);
  return int(names_.size()) - 1;
}

int Program::add_nonneg_var(const std::string& name) {
  const int v = add_var(name);
  nonneg_[v] = true;
  in_cone_[v] = true;
  return v;
}

std::vector<int> Program::add_vars(const std::string& prefix, int count) {
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = add_var(prefix + "[" + std::to_string(i) + "]");
  return out;
}

void Program::add_eq(LinExpr expr, double rhs) {
  EqRow row;
  row.rhs = rhs - expr.constant();
  expr.constant() = 0.0;
  row.lhs = std::move(expr);
  equalities_.push_back(std::move(row));
}

void Program::add_le(LinExpr expr, double rhs) {
  const int slack = add_nonneg_var("_s" + std::to_string(aux_counter_++));
  expr.add_term(slack, 1.0);
  add_eq(std::move(expr), rhs);
}

void Program::add_ge(LinExpr expr, double rhs) {
  expr *= -1.0;
  add_le(std::move(expr), -rhs);
}

void Program::add_box(int var, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("empty box for variable " + names_[var]);
  add_le(LinExpr::variable(var), hi);
  add_ge(LinExpr::variable(var), lo);
}

void Program::add_soc(std::vector<int> vars) {
  if (vars.size() < 2) throw std::invalid_argument("second-order cone needs at least two variables");
  for (int v : vars) {
    if (in_cone_[v]) throw std::invalid_argument("variable " + names_[v] + " already belongs to a cone");
    in_cone_[v] = true;
  }
  socs_.push_back(std::move(vars));
}

void Program::add_norm_epigraph(NormKind norm, const std::vector<LinExpr>& argument, const LinExpr& bound) {
  const std::string tag = "_epi" + std::to_string(aux_counter_++);
  switch (norm) {
    case NormKind::L1: {
      LinExpr total;
      for (size_t i = 0; i < argument.size(); ++i) {
        const int pos = add_nonneg_var(tag + "p" + std::to_string(i));
        const int neg = add_nonneg_var(tag + "n" + std::to_string(i));
        LinExpr split = argument[i];
        split.add_term(pos, -1.0);
        split.add_term(neg, 1.0);
        add_eq(std::move(split), 0.0);
        total.add_term(pos, 1.0);
        total.add_term(neg, 1.0);
      }
      total -= bound;
      add_le(std::move(total), 0.0);
      break;
    }
    case NormKind::LInf: {
      for (const LinExpr& a : argument) {
        LinExpr up = a;
        up -= bound;
        add_le(std::move(up), 0.0);
        LinExpr dn = a;
        dn *= -1.0;
        dn -= bound;
        add_le(std::move(dn), 0.0);
      }
      break;
    }
    case NormKind::L2: {
      std::vector<int> cone;
      const int t = add_var(tag + "t");
      cone.push_back(t);
      LinExpr tie = bound;
      tie.add_term(t, -1.0);
      add_eq(std::move(tie), 0.0);
      for (size_t i = 0; i < argument.size(); ++i) {
        const int u = add_var(tag + "u" + std::to_string(i));
        cone.push_back(u);
        LinExpr e = argument[i];
        e.add_term(u, -1.0);
        add_eq(std::move(e), 0.0);
      }
      add_soc(std::move(cone));
      break;
    }
  }
}

void Program::set_objective(LinExpr expr) { objective_ = std::move(expr); }

std::vector<std::pair<int, int>> Program::nonneg_ranges() const {
  std::vector<std::pair<int, int>> ranges;
  int i = 0;
  const int n = n_vars();
  while (i < n) {
    if (!nonneg_[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && nonneg_[j]) ++j;
    ranges.push_back({i, j});
    i = j;
  }
  return ranges;
}

SolveOptions SolveOptions::with_env_overrides() const {
  SolveOptions out = *this;
  if (const char* env = std::getenv("ENVELOPE_SOLVER_TOL")) {
    char* end = nullptr;
    const double tol = std::strtod(env, &end);
    if (end != env && tol > 0) {
      out.feastol = tol;
      out.abstol = tol;
      out.reltol = tol;
    }
  }
  return out;
}

namespace {

/* ------------------------------------------------------------------ */
/* Standard form: minimize c'x  s.t.  Ax = b,  Gx + s = h,  s in K    */
/* with K = R+^{n_lp} x SOC(d_1) x ... The program's cones map to     */
/* selector rows of G with h = 0.                                     */
/* ------------------------------------------------------------------ */

struct StandardForm {
  int n = 0;  // variables
  int p = 0;  // equality rows
  int m = 0;  // cone rows
  int n_lp = 0;
  std::vector<int> soc_dims;
  Eigen::MatrixXd A, G;
  Eigen::VectorXd c, b, h;
  bool trivially_infeasible = false;
  std::string presolve_message;
};

StandardForm standardize(const Program& prog, bool presolve) {
  StandardForm sf;
  sf.n = prog.n_vars();

  sf.c = Eigen::VectorXd::Zero(sf.n);
  for (const auto& [v, cf] : prog.objective().terms()) sf.c(v) -= cf;  // maximize -> minimize

  const auto& eqs = prog.equalities();
  Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(int(eqs.size()), sf.n);
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(int(eqs.size()));
  for (int r = 0; r < int(eqs.size()); ++r) {
    for (const auto& [v, cf] : eqs[r].lhs.terms()) A0(r, v) += cf;
    b0(r) = eqs[r].rhs;
  }

  if (presolve && A0.rows() > 0) {
    /* Keep a maximal independent row subset; a dependent row with an
     * inconsistent right-hand side is an infeasibility certificate. */
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A0.transpose());
    qr.setThreshold(1e-11);
    const int rank = int(qr.rank());
    if (rank < A0.rows()) {
      std::vector<int> keep(qr.colsPermutation().indices().data(),
                            qr.colsPermutation().indices().data() + A0.rows());
      std::vector<int> kept(keep.begin(), keep.begin() + rank);
      std::sort(kept.begin(), kept.end());
      Eigen::MatrixXd Ak(rank, sf.n);
      Eigen::VectorXd bk(rank);
      for (int r = 0; r < rank; ++r) {
        Ak.row(r) = A0.row(kept[r]);
        bk(r) = b0(kept[r]);
      }
      // Consistency of the dropped rows against the kept ones.
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qk(Ak.transpose());
      for (int r = rank; r < int(keep.size()); ++r) {
        const int row = keep[r];
        const Eigen::VectorXd coef = qk.solve(A0.row(row).transpose());
        const double rhs_pred = coef.dot(bk);
        const double scale = 1.0 + std::abs(b0(row)) + bk.cwiseAbs().maxCoeff();
        if (std::abs(rhs_pred - b0(row)) > 1e-8 * scale) {
          sf.trivially_infeasible = true;
          sf.presolve_message = "equality row " + std::to_string(row) + " is inconsistent with the others";
        }
      }
      A0 = std::move(Ak);
      b0 = std::move(bk);
    }
  }
  sf.A = std::move(A0);
  sf.b = std::move(b0);
  sf.p = int(sf.A.rows());

  std::vector<int> lp_vars;
  for (int v = 0; v < sf.n; ++v)
    if (prog.is_nonneg(v)) lp_vars.push_back(v);
  sf.n_lp = int(lp_vars.size());

  int m = sf.n_lp;
  for (const auto& cone : prog.soc_cones()) m += int(cone.size());
  sf.m = m;
  sf.G = Eigen::MatrixXd::Zero(m, sf.n);
  sf.h = Eigen::VectorXd::Zero(m);
  int row = 0;
  for (int v : lp_vars) sf.G(row++, v) = -1.0;
  for (const auto& cone : prog.soc_cones()) {
    sf.soc_dims.push_back(int(cone.size()));
    for (int v : cone) sf.G(row++, v) = -1.0;
  }
  return sf;
}

/* ------------------------------------------------------------------ */
/* Dense LDL' factorization for the quasidefinite KKT matrix.          */
/* No pivoting; per-pivot dynamic regularization with expected signs.  */
/* ------------------------------------------------------------------ */

class DenseLdl {
 public:
  void factor(const Eigen::MatrixXd& K, const std::vector<int>& pivot_sign, double delta) {
    const int n = int(K.rows());
    L_ = K;
    d_.resize(n);
    Eigen::VectorXd tmp(n);
    for (int j = 0; j < n; ++j) {
      if (j > 0) {
        tmp.head(j) = d_.head(j).cwiseProduct(L_.row(j).head(j).transpose());
        L_.col(j).tail(n - j).noalias() -= L_.block(j, 0, n - j, j) * tmp.head(j);
      }
      double dj = L_(j, j);
      if (pivot_sign[j] > 0) {
        if (dj < delta) dj = delta;
      } else {
        if (dj > -delta) dj = -delta;
      }
      d_(j) = dj;
      if (j + 1 < n) L_.col(j).tail(n - j - 1) /= dj;
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = rhs;
    const int n = int(L_.rows());
    for (int j = 0; j < n; ++j)
      if (j + 1 < n) x.tail(n - j - 1).noalias() -= x(j) * L_.col(j).tail(n - j - 1);
    x.array() /= d_.array();
    for (int j = n - 1; j >= 0; --j)
      if (j + 1 < n) x(j) -= L_.col(j).tail(n - j - 1).dot(x.tail(n - j - 1));
    return x;
  }

 private:
  Eigen::MatrixXd L_;
  Eigen::VectorXd d_;
};

/* ------------------------------------------------------------------ */
/* Homogeneous self-dual predictor-corrector interior-point solver.    */
/* ------------------------------------------------------------------ */

enum class ExitCode { optimal, primal_infeasible, dual_infeasible, maxit, numerics, not_yet };

struct IterateInfo {
  double pcost = 0, dcost = 0, gap = 0, mu = 0, kapovert = 0;
  std::optional<double> relgap;
  double pres = 0, dres = 0;
  std::optional<double> pinfres, dinfres;
};

struct Iterate {
  Eigen::VectorXd x, y, z, s, lambda;
  double tau = 1, kap = 1;
  double cx = 0, by = 0, hz = 0;
  IterateInfo info;
  int iter = 0;
};

struct SocScaling {
  int dim = 0;
  double eta = 0, eta_square = 0, a = 0, w = 0;
  Eigen::VectorXd q;
};

class HsdSolver {
 public:
  HsdSolver(StandardForm sf, const SolveOptions& opt) : sf_(std::move(sf)), opt_(opt) {
    n_ = sf_.n;
    p_ = sf_.p;
    m_ = sf_.m;
    dim_ = n_ + p_ + m_;
    pivot_sign_.assign(dim_, -1);
    for (int i = 0; i < n_; ++i) pivot_sign_[i] = 1;
    lp_w2_ = Eigen::VectorXd::Ones(sf_.n_lp);
    socs_.resize(sf_.soc_dims.size());
    for (size_t k = 0; k < socs_.size(); ++k) {
      socs_[k].dim = sf_.soc_dims[k];
      // Identity scaling until the first update.
      socs_[k].a = 1.0;
      socs_[k].eta = 1.0;
      socs_[k].eta_square = 1.0;
      socs_[k].w = 0.0;
      socs_[k].q = Eigen::VectorXd::Zero(sf_.soc_dims[k] - 1);
    }
    equilibrate();
  }

  ExitCode run();

  const Iterate& iterate() const { return w_; }
  const IterateInfo& info() const { return w_.info; }
  int iterations() const { return total_iters_; }

  /// Undoes equilibration and the homogenizing scale.
  void extract(Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& z) const {
    x = w_.x.cwiseQuotient(col_eq_) / w_.tau;
    y = row_eq_a_.cwiseProduct(w_.y) / w_.tau;
    z = row_eq_g_.cwiseProduct(w_.z) / w_.tau;
  }

 private:
  void equilibrate();
  void compute_residuals();
  void update_statistics();
  ExitCode check_exit(bool reduced) const;
  bool update_scalings();
  void build_kkt();
  Eigen::VectorXd solve_kkt(const Eigen::VectorXd& rhs, bool init) const;
  void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const;
  void scale(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;       // out = W z
  void conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  void conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& out) const;
  double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds, const Eigen::VectorXd& dz,
                     double tau, double dtau, double kap, double dkap) const;
  bool is_better(const IterateInfo& a, const IterateInfo& b) const;

  StandardForm sf_;
  SolveOptions opt_;
  int n_ = 0, p_ = 0, m_ = 0, dim_ = 0;

  Eigen::VectorXd col_eq_, row_eq_a_, row_eq_g_;

  Eigen::VectorXd lp_w2_;
  std::vector<SocScaling> socs_;
  std::vector<int> pivot_sign_;
  Eigen::MatrixXd kkt_;
  DenseLdl ldl_;

  Iterate w_, best_;
  int total_iters_ = 0;
  Eigen::VectorXd rx_, ry_, rz_;
  double rt_ = 0, hresx_ = 0, hresy_ = 0, hresz_ = 0;
  double nx_ = 0, ny_ = 0, nz_ = 0, ns_ = 0;
  double resx0_ = 1, resy0_ = 1, resz0_ = 1;

  // Tuning constants in the spirit of embedded conic solvers.
  static constexpr double kGammaStep = 0.99;
  static constexpr double kStepMin = 1e-6;
  static constexpr double kStepMax = 0.9999;
  static constexpr double kSigmaMin = 1e-4;
  static constexpr double kSigmaMax = 0.7989;
  static constexpr double kDeltaStat = 7e-8;
  static constexpr double kSafeguard = 500.0;
  static constexpr int kNitRef = 9;
  static constexpr double kLinSysAcc = 1e-14;
  static constexpr double kFeasTolInacc = 1e-4;
  static constexpr double kAbsTolInacc = 5e-5;
  static constexpr double kRelTolInacc = 5e-5;
};

void HsdSolver::equilibrate() {
  col_eq_ = Eigen::VectorXd::Ones(n_);
  row_eq_a_ = Eigen::VectorXd::Ones(p_);
  row_eq_g_ = Eigen::VectorXd::Ones(m_);

  auto safe_scale = [](double v) { return v < 1e-12 ? 1.0 : std::sqrt(v); };

  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      double mx = 0;
      if (p_ > 0) mx = std::max(mx, sf_.A.col(j).cwiseAbs().maxCoeff());
      if (m_ > 0) mx = std::max(mx, sf_.G.col(j).cwiseAbs().maxCoeff());
      cs(j) = safe_scale(mx);
    }
    Eigen::VectorXd ra(p_), rg(m_);
    for (int i = 0; i < p_; ++i) ra(i) = safe_scale(sf_.A.row(i).cwiseAbs().maxCoeff());
    {
      int row = 0;
      for (int i = 0; i < sf_.n_lp; ++i, ++row) rg(row) = safe_scale(sf_.G.row(row).cwiseAbs().maxCoeff());
      for (const SocScaling& sc : socs_) {
        // One factor per cone so the cone geometry is preserved.
        double mx = 0;
        for (int i = 0; i < sc.dim; ++i) mx = std::max(mx, sf_.G.row(row + i).cwiseAbs().maxCoeff());
        const double f = safe_scale(mx);
        for (int i = 0; i < sc.dim; ++i) rg(row + i) = f;
        row += sc.dim;
      }
    }
    for (int i = 0; i < p_; ++i) sf_.A.row(i) /= ra(i);
    for (int i = 0; i < m_; ++i) sf_.G.row(i) /= rg(i);
    for (int j = 0; j < n_; ++j) {
      if (p_ > 0) sf_.A.col(j) /= cs(j);
      if (m_ > 0) sf_.G.col(j) /= cs(j);
    }
    col_eq_ = col_eq_.cwiseProduct(cs);
    row_eq_a_ = row_eq_a_.cwiseQuotient(ra);
    row_eq_g_ = row_eq_g_.cwiseQuotient(rg);
  }
  sf_.c = sf_.c.cwiseQuotient(col_eq_);
  // row_eq holds the inverse row scaling applied to A and G.
  sf_.b = sf_.b.cwiseProduct(row_eq_a_);
  sf_.h = sf_.h.cwiseProduct(row_eq_g_);
}

void HsdSolver::compute_residuals() {
  rx_ = -sf_.G.transpose() * w_.z;
  if (p_ > 0) rx_ -= sf_.A.transpose() * w_.y;
  hresx_ = rx_.norm();
  rx_ -= w_.tau * sf_.c;

  if (p_ > 0) {
    ry_ = sf_.A * w_.x;
    hresy_ = ry_.norm();
    ry_ -= w_.tau * sf_.b;
  } else {
    ry_.resize(0);
    hresy_ = 0;
  }

  rz_ = w_.s + sf_.G * w_.x;
  hresz_ = rz_.norm();
  rz_ -= w_.tau * sf_.h;

  w_.cx = sf_.c.dot(w_.x);
  w_.by = p_ > 0 ? sf_.b.dot(w_.y) : 0.0;
  w_.hz = sf_.h.dot(w_.z);
  rt_ = w_.kap + w_.cx + w_.by + w_.hz;

  nx_ = w_.x.norm();
  ny_ = w_.y.norm();
  nz_ = w_.z.norm();
  ns_ = w_.s.norm();
}

void HsdSolver::update_statistics() {
  IterateInfo& i = w_.info;
  i.gap = w_.s.dot(w_.z);
  i.mu = (i.gap + w_.kap * w_.tau) / double(sf_.n_lp + int(socs_.size()) + 1);
  i.kapovert = w_.kap / w_.tau;
  i.pcost = w_.cx / w_.tau;
  i.dcost = -(w_.hz + w_.by) / w_.tau;

  if (i.pcost < 0)
    i.relgap = i.gap / (-i.pcost);
  else if (i.dcost > 0)
    i.relgap = i.gap / i.dcost;
  else
    i.relgap.reset();

  const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
  const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
  i.pres = std::max(nry, nrz) / w_.tau;
  i.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w_.tau;

  i.pinfres.reset();
  i.dinfres.reset();
  if ((w_.hz + w_.by) / std::max(ny_ + nz_, 1.0) < -opt_.reltol)
    i.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
  if (w_.cx / std::max(nx_, 1.0) < -opt_.reltol)
    i.dinfres = std::max(hresy_ / std::max(nx_, 1.0), hresz_ / std::max(nx_ + ns_, 1.0));
}

ExitCode HsdSolver::check_exit(bool reduced) const {
  const double feastol = reduced ? kFeasTolInacc : opt_.feastol;
  const double abstol = reduced ? kAbsTolInacc : opt_.abstol;
  const double reltol = reduced ? kRelTolInacc : opt_.reltol;
  const IterateInfo& i = w_.info;

  if ((-w_.cx > 0 || -w_.by - w_.hz >= -abstol) && (i.pres < feastol && i.dres < feastol) &&
      (i.gap < abstol || (i.relgap && *i.relgap < reltol)))
    return ExitCode::optimal;
  if (i.dinfres && *i.dinfres < feastol && w_.tau < w_.kap) return ExitCode::dual_infeasible;
  if ((i.pinfres && *i.pinfres < feastol && w_.tau < w_.kap) ||
      (w_.tau < feastol && w_.kap < feastol && i.pinfres && *i.pinfres < feastol))
    return ExitCode::primal_infeasible;
  return ExitCode::not_yet;
}

bool HsdSolver::update_scalings() {
  lp_w2_ = w_.s.head(sf_.n_lp).cwiseQuotient(w_.z.head(sf_.n_lp));
  if ((lp_w2_.array() <= 0).any()) return false;

  int start = sf_.n_lp;
  for (SocScaling& sc : socs_) {
    const auto s1 = w_.s.segment(start + 1, sc.dim - 1);
    const auto z1 = w_.z.segment(start + 1, sc.dim - 1);
    const double sres = w_.s(start) * w_.s(start) - s1.squaredNorm();
    const double zres = w_.z(start) * w_.z(start) - z1.squaredNorm();
    if (sres <= 0 || zres <= 0) return false;

    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    Eigen::VectorXd skbar = w_.s.segment(start, sc.dim) / snorm;
    Eigen::VectorXd zkbar = w_.z.segment(start, sc.dim) / znorm;
    sc.eta_square = snorm / znorm;
    sc.eta = std::sqrt(sc.eta_square);

    double gamma = std::sqrt(0.5 * (1.0 + skbar.dot(zkbar)));
    sc.a = (0.5 / gamma) * (skbar(0) + zkbar(0));
    sc.q = (0.5 / gamma) * (skbar.tail(sc.dim - 1) - zkbar.tail(sc.dim - 1));
    sc.w = sc.q.squaredNorm();
    start += sc.dim;
  }
  scale(w_.z, w_.lambda);
  return true;
}

void HsdSolver::build_kkt() {
  kkt_ = Eigen::MatrixXd::Zero(dim_, dim_);
  kkt_.topLeftCorner(n_, n_).diagonal().setConstant(kDeltaStat);
  if (p_ > 0) {
    kkt_.block(n_, 0, p_, n_) = sf_.A;
    kkt_.block(0, n_, n_, p_) = sf_.A.transpose();
    kkt_.block(n_, n_, p_, p_).diagonal().setConstant(-kDeltaStat);
  }
  if (m_ > 0) {
    kkt_.block(n_ + p_, 0, m_, n_) = sf_.G;
    kkt_.block(0, n_ + p_, n_, m_) = sf_.G.transpose();
    auto zblock = kkt_.block(n_ + p_, n_ + p_, m_, m_);
    zblock.diagonal().head(sf_.n_lp) = -lp_w2_.array() - kDeltaStat;
    int start = sf_.n_lp;
    for (const SocScaling& sc : socs_) {
      /* -W^2 = -eta^2 (2 wbar wbar' - J), wbar = (a; q), J = diag(1, -I) */
      Eigen::VectorXd wbar(sc.dim);
      wbar(0) = sc.a;
      wbar.tail(sc.dim - 1) = sc.q;
      Eigen::MatrixXd w2 = 2.0 * sc.eta_square * (wbar * wbar.transpose());
      w2(0, 0) -= sc.eta_square;
      for (int i = 1; i < sc.dim; ++i) w2(i, i) += sc.eta_square;
      zblock.block(start, start, sc.dim, sc.dim) = -w2;
      zblock.block(start, start, sc.dim, sc.dim).diagonal().array() -= kDeltaStat;
      start += sc.dim;
    }
  }
  ldl_.factor(kkt_, pivot_sign_, kDeltaStat);
}

Eigen::VectorXd HsdSolver::solve_kkt(const Eigen::VectorXd& rhs, bool init) const {
  Eigen::VectorXd x = ldl_.solve(rhs);
  const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * kLinSysAcc;

  /* Iterative refinement against the unregularized KKT matrix. */
  auto residual = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r = rhs;
    const auto dx = v.head(n_);
    const auto dy = v.segment(n_, p_);
    const auto dz = v.tail(m_);
    if (p_ > 0) {
      r.head(n_) -= sf_.A.transpose() * dy;
      r.segment(n_, p_) -= sf_.A * dx;
    }
    if (m_ > 0) {
      r.head(n_) -= sf_.G.transpose() * dz;
      r.tail(m_) -= sf_.G * dx;
      if (init) {
        r.tail(m_) += dz;
      } else {
        Eigen::VectorXd w2dz(m_);
        w2dz.head(sf_.n_lp) = lp_w2_.cwiseProduct(dz.head(sf_.n_lp));
        int start = sf_.n_lp;
        for (const SocScaling& sc : socs_) {
          const auto seg = dz.segment(start, sc.dim);
          Eigen::VectorXd wbar(sc.dim);
          wbar(0) = sc.a;
          wbar.tail(sc.dim - 1) = sc.q;
          const double inner = wbar.dot(seg);
          Eigen::VectorXd r2 = 2.0 * sc.eta_square * inner * wbar;
          r2(0) -= sc.eta_square * seg(0);
          r2.tail(sc.dim - 1) += sc.eta_square * seg.tail(sc.dim - 1);
          w2dz.segment(start, sc.dim) = r2;
          start += sc.dim;
        }
        r.tail(m_) += w2dz;
      }
    }
    return r;
  };

  double err_prev = std::numeric_limits<double>::max();
  for (int it = 0; it < kNitRef; ++it) {
    const Eigen::VectorXd r = residual(x);
    const double err = r.lpNorm<Eigen::Infinity>();
    if (err <= threshold || err >= err_prev) break;
    err_prev = err;
    x += ldl_.solve(r);
  }
  return x;
}

void HsdSolver::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const {
  double alpha = -1.0;
  for (int i = 0; i < sf_.n_lp; ++i)
    if (r(i) <= 0 && -r(i) > alpha) alpha = -r(i);
  int start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    const double res = r(start) - r.segment(start + 1, sc.dim - 1).norm();
    if (res <= 0 && -res > alpha) alpha = -res;
    start += sc.dim;
  }
  alpha += 1.0;
  s = r;
  s.head(sf_.n_lp).array() += alpha;
  start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    s(start) += alpha;
    start += sc.dim;
  }
}

void HsdSolver::scale(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
  out.resize(m_);
  out.head(sf_.n_lp) = lp_w2_.cwiseSqrt().cwiseProduct(z.head(sf_.n_lp));
  int start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto z1 = z.segment(start + 1, sc.dim - 1);
    const double zeta = sc.q.dot(z1);
    const double factor = z(start) + zeta / (1.0 + sc.a);
    out(start) = sc.eta * (sc.a * z(start) + zeta);
    out.segment(start + 1, sc.dim - 1) = sc.eta * (z1 + factor * sc.q);
    start += sc.dim;
  }
}

void HsdSolver::conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  out.resize(m_);
  out.head(sf_.n_lp) = u.head(sf_.n_lp).cwiseProduct(v.head(sf_.n_lp));
  int start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto useg = u.segment(start, sc.dim);
    const auto vseg = v.segment(start, sc.dim);
    out(start) = useg.dot(vseg);
    out.segment(start + 1, sc.dim - 1) = u(start) * vseg.tail(sc.dim - 1) + v(start) * useg.tail(sc.dim - 1);
    start += sc.dim;
  }
}

void HsdSolver::conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
  out.resize(m_);
  out.head(sf_.n_lp) = w.head(sf_.n_lp).cwiseQuotient(u.head(sf_.n_lp));
  int start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    const auto u1 = u.segment(start + 1, sc.dim - 1);
    const auto w1 = w.segment(start + 1, sc.dim - 1);
    const double u0 = u(start);
    const double w0 = w(start);
    const double rho = u0 * u0 - u1.squaredNorm();
    const double zeta = u1.dot(w1);
    const double factor = (zeta / u0 - w0) / rho;
    out(start) = (u0 * w0 - zeta) / rho;
    out.segment(start + 1, sc.dim - 1) = factor * u1 + w1 / u0;
    start += sc.dim;
  }
}

double HsdSolver::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds, const Eigen::VectorXd& dz,
                              double tau, double dtau, double kap, double dkap) const {
  double alpha = 10.0;
  if (sf_.n_lp > 0) {
    const double rhomin = ds.head(sf_.n_lp).cwiseQuotient(lambda.head(sf_.n_lp)).minCoeff();
    const double sigmamin = dz.head(sf_.n_lp).cwiseQuotient(lambda.head(sf_.n_lp)).minCoeff();
    const double eps = 1e-13;
    if (-sigmamin > -rhomin)
      alpha = sigmamin < 0 ? 1.0 / (-sigmamin) : 1.0 / eps;
    else
      alpha = rhomin < 0 ? 1.0 / (-rhomin) : 1.0 / eps;
  }

  const double t_limit = -tau / dtau;
  const double k_limit = -kap / dkap;
  if (t_limit > 0 && t_limit < alpha) alpha = t_limit;
  if (k_limit > 0 && k_limit < alpha) alpha = k_limit;

  int start = sf_.n_lp;
  for (const SocScaling& sc : socs_) {
    const double lk2 = lambda(start) * lambda(start) - lambda.segment(start + 1, sc.dim - 1).squaredNorm();
    if (lk2 <= 0) {
      start += sc.dim;
      continue;
    }
    const double lknorm = std::sqrt(lk2);
    Eigen::VectorXd lkbar = lambda.segment(start, sc.dim) / lknorm;
    const double lknorminv = 1.0 / lknorm;

    const double lds = lkbar(0) * ds(start) - lkbar.tail(sc.dim - 1).dot(ds.segment(start + 1, sc.dim - 1));
    const double ldz = lkbar(0) * dz(start) - lkbar.tail(sc.dim - 1).dot(dz.segment(start + 1, sc.dim - 1));

    Eigen::VectorXd rho(sc.dim);
    rho(0) = lknorminv * lds;
    double factor = (lds + ds(start)) / (lkbar(0) + 1.0);
    rho.tail(sc.dim - 1) = lknorminv * (ds.segment(start + 1, sc.dim - 1) - factor * lkbar.tail(sc.dim - 1));
    const double rhonorm = rho.tail(sc.dim - 1).norm() - rho(0);

    Eigen::VectorXd sig(sc.dim);
    sig(0) = lknorminv * ldz;
    factor = (ldz + dz(start)) / (lkbar(0) + 1.0);
    sig.tail(sc.dim - 1) = lknorminv * (dz.segment(start + 1, sc.dim - 1) - factor * lkbar.tail(sc.dim - 1));
    const double signorm = sig.tail(sc.dim - 1).norm() - sig(0);

    const double conic_step = std::max({0.0, rhonorm, signorm});
    if (conic_step != 0.0) alpha = std::min(alpha, 1.0 / conic_step);
    start += sc.dim;
  }
  return std::clamp(alpha, kStepMin, kStepMax);
}

bool HsdSolver::is_better(const IterateInfo& a, const IterateInfo& b) const {
  if (a.pinfres && a.kapovert > 1.0)
    return a.gap > 0 && b.gap > 0 && a.gap < b.gap && a.mu > 0 && a.mu < b.mu;
  return a.gap > 0 && b.gap > 0 && a.gap < b.gap && a.pres > 0 && a.pres < b.pres && a.dres > 0 &&
         a.dres < b.dres && a.kapovert > 0 && a.kapovert < b.kapovert && a.mu > 0 && a.mu < b.mu;
}

ExitCode HsdSolver::run() {
  resx0_ = std::max(1.0, sf_.c.norm());
  resy0_ = std::max(1.0, sf_.b.norm());
  resz0_ = std::max(1.0, sf_.h.norm());

  build_kkt();  // with identity scaling

  Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(dim_);
  rhs1.segment(n_, p_) = sf_.b;
  rhs1.tail(m_) = sf_.h;
  Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(dim_);
  rhs2.head(n_) = -sf_.c;

  /* Initialization: x from arg min |Gx - h| s.t. Ax = b; s, z brought
   * to the cone interior. */
  Eigen::VectorXd sol1 = solve_kkt(rhs1, true);
  w_.x = sol1.head(n_);
  w_.s.resize(m_);
  bring_to_cone(-sol1.tail(m_), w_.s);

  Eigen::VectorXd sol2 = solve_kkt(rhs2, true);
  w_.y = sol2.segment(n_, p_);
  w_.z.resize(m_);
  bring_to_cone(sol2.tail(m_), w_.z);

  w_.tau = 1.0;
  w_.kap = 1.0;
  w_.lambda.resize(m_);

  rhs1.head(n_) = -sf_.c;

  Eigen::VectorXd dx1, dy1, dz1, dx2, dy2, dz2;
  Eigen::VectorXd w_dz(m_), ds_by_w(m_), ds_final(m_), ds_corr(m_), ds_tmp(m_);

  double pres_prev = std::numeric_limits<double>::max();
  ExitCode code = ExitCode::not_yet;

  for (w_.iter = 0; w_.iter <= opt_.max_iters; ++w_.iter) {
    total_iters_ = w_.iter;
    compute_residuals();
    update_statistics();

    if (opt_.verbose) {
      std::printf("it %3d  pcost %+.6e  dcost %+.6e  gap %.2e  pres %.2e  dres %.2e  k/t %.2e\n", w_.iter,
                  w_.info.pcost, w_.info.dcost, w_.info.gap, w_.info.pres, w_.info.dres, w_.info.kapovert);
    }

    if (w_.iter > 0 && (w_.info.pres > kSafeguard * std::max(pres_prev, 1e-14) || w_.info.gap < 0)) {
      w_ = best_;
      code = check_exit(true);
      if (code == ExitCode::not_yet) code = ExitCode::numerics;
      break;
    }
    pres_prev = w_.info.pres;

    code = check_exit(false);
    if (code != ExitCode::not_yet) break;

    if (w_.iter == opt_.max_iters) {
      if (w_.iter > 0 && !is_better(w_.info, best_.info)) w_ = best_;
      code = check_exit(true);
      if (code == ExitCode::not_yet) code = ExitCode::maxit;
      break;
    }
    if (std::isnan(w_.info.pcost)) {
      if (w_.iter > 0) w_ = best_;
      code = check_exit(true);
      if (code == ExitCode::not_yet) code = ExitCode::numerics;
      break;
    }

    if (w_.iter == 0 || is_better(w_.info, best_.info)) best_ = w_;

    if (!update_scalings()) {
      w_ = best_;
      code = check_exit(true);
      if (code == ExitCode::not_yet) code = ExitCode::numerics;
      break;
    }
    build_kkt();

    sol1 = solve_kkt(rhs1, false);
    dx1 = sol1.head(n_);
    dy1 = sol1.segment(n_, p_);
    dz1 = sol1.tail(m_);

    /* Affine direction. */
    rhs2.head(n_) = rx_;
    rhs2.segment(n_, p_) = -ry_;
    rhs2.tail(m_) = w_.s - rz_;
    sol2 = solve_kkt(rhs2, false);
    dx2 = sol2.head(n_);
    dy2 = sol2.segment(n_, p_);
    dz2 = sol2.tail(m_);

    const double dtau_denom = w_.kap / w_.tau - sf_.c.dot(dx1) - sf_.b.dot(dy1) - sf_.h.dot(dz1);
    const double dtau_aff = (rt_ - w_.kap + sf_.c.dot(dx2) + sf_.b.dot(dy2) + sf_.h.dot(dz2)) / dtau_denom;

    dz2 += dtau_aff * dz1;
    scale(dz2, w_dz);
    ds_by_w = -w_dz - w_.lambda;
    const double dkap_aff = -w_.kap - w_.kap / w_.tau * dtau_aff;

    const double step_aff = line_search(w_.lambda, ds_by_w, w_dz, w_.tau, dtau_aff, w_.kap, dkap_aff);
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), kSigmaMin, kSigmaMax);

    /* Combined direction with Mehrotra correction:
     * ds = lambda o lambda + (W^{-1} ds_aff) o (W dz_aff) - sigma mu e */
    conic_product(w_.lambda, w_.lambda, ds_corr);
    conic_product(ds_by_w, w_dz, ds_tmp);
    ds_corr += ds_tmp;
    const double sigmamu = sigma * w_.info.mu;
    ds_corr.head(sf_.n_lp).array() -= sigmamu;
    {
      int start = sf_.n_lp;
      for (const SocScaling& sc : socs_) {
        ds_corr(start) -= sigmamu;
        start += sc.dim;
      }
    }
    conic_division(w_.lambda, ds_corr, ds_by_w);  // ds_by_w = lambda \ ds
    scale(ds_by_w, ds_tmp);                       // ds_tmp = W (lambda \ ds)

    const double one_minus_sigma = 1.0 - sigma;
    rhs2.head(n_) = one_minus_sigma * rx_;
    rhs2.segment(n_, p_) = -one_minus_sigma * ry_;
    rhs2.tail(m_) = -one_minus_sigma * rz_ + ds_tmp;

    sol2 = solve_kkt(rhs2, false);
    dx2 = sol2.head(n_);
    dy2 = sol2.segment(n_, p_);
    dz2 = sol2.tail(m_);

    const double bkap = w_.kap * w_.tau + dkap_aff * dtau_aff - sigmamu;
    const double dtau =
        (one_minus_sigma * rt_ - bkap / w_.tau + sf_.c.dot(dx2) + sf_.b.dot(dy2) + sf_.h.dot(dz2)) / dtau_denom;

    dx2 += dtau * dx1;
    dy2 += dtau * dy1;
    dz2 += dtau * dz1;

    scale(dz2, w_dz);
    ds_by_w = -(ds_by_w + w_dz);
    const double dkap = -(bkap + w_.kap * dtau) / w_.tau;

    const double step = kGammaStep * line_search(w_.lambda, ds_by_w, w_dz, w_.tau, dtau, w_.kap, dkap);
    if (opt_.verbose)
      std::printf("        step_aff %.3e  sigma %.3e  step %.3e  dtau_denom %.3e\n", step_aff, sigma, step,
                  dtau_denom);
    scale(ds_by_w, ds_final);

    w_.x += step * dx2;
    w_.y += step * dy2;
    w_.z += step * dz2;
    w_.s += step * ds_final;
    w_.kap += step * dkap;
    w_.tau += step * dtau;

    if (step == kStepMin * kGammaStep) {
      w_ = best_;
      code = check_exit(true);
      if (code == ExitCode::not_yet) code = ExitCode::numerics;
      break;
    }
  }
  return code;
}

/* ------------------------------------------------------------------ */

std::map<std::string, BackendFn>& backend_registry() {
  static std::map<std::string, BackendFn> registry;
  return registry;
}

std::mutex& backend_mutex() {
  static std::mutex m;
  return m;
}

Report solve_no_cones(const StandardForm& sf, const Program& prog) {
  /* Equality-constrained linear objective: bounded iff c is in the row
   * space of A, in which case the objective is constant on the feasible
   * set. */
  Report rep;
  rep.x = Eigen::VectorXd::Zero(sf.n);
  rep.eq_duals = Eigen::VectorXd::Zero(sf.p);
  if (sf.p == 0) {
    if (sf.c.norm() > 0) {
      rep.status = Status::unbounded;
      rep.message = "objective has unconstrained improving direction";
    } else {
      rep.status = Status::optimal;
      rep.objective = prog.objective().constant();
      rep.dual_objective = rep.objective;
    }
    return rep;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sf.A);
  const Eigen::VectorXd x = qr.solve(sf.b);
  if ((sf.A * x - sf.b).norm() > 1e-8 * (1.0 + sf.b.norm())) {
    rep.status = Status::infeasible;
    rep.message = "equality system has no solution";
    return rep;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrt(sf.A.transpose());
  const Eigen::VectorXd y = qrt.solve(-sf.c);
  if ((sf.A.transpose() * y + sf.c).norm() > 1e-8 * (1.0 + sf.c.norm())) {
    rep.status = Status::unbounded;
    rep.message = "objective unbounded on the equality-constrained affine set";
    return rep;
  }
  rep.status = Status::optimal;
  rep.x = x;
  rep.eq_duals = y;
  rep.objective = prog.objective().evaluate(x);
  rep.dual_objective = rep.objective;
  return rep;
}

}  // namespace

Report solve(const Program& prog, const SolveOptions& options_in) {
  const auto t0 = std::chrono::steady_clock::now();
  const SolveOptions options = options_in.with_env_overrides();

  StandardForm sf = standardize(prog, options.presolve);

  Report rep;
  if (sf.trivially_infeasible) {
    rep.status = Status::infeasible;
    rep.message = sf.presolve_message;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  if (sf.m == 0) {
    rep = solve_no_cones(sf, prog);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  HsdSolver solver(std::move(sf), options);
  const ExitCode code = solver.run();

  Eigen::VectorXd x, y, z;
  solver.extract(x, y, z);
  rep.x = x;
  rep.eq_duals = y;
  rep.cone_duals = z;
  rep.iterations = solver.iterations();
  rep.objective = prog.objective().evaluate(x);
  rep.dual_objective = -solver.info().dcost + prog.objective().constant();
  rep.gap = solver.info().gap;
  rep.rel_gap = solver.info().relgap.value_or(rep.gap);
  rep.primal_residual = solver.info().pres;
  rep.dual_residual = solver.info().dres;

  switch (code) {
    case ExitCode::optimal:
      rep.status = Status::optimal;
      break;
    case ExitCode::primal_infeasible:
      rep.status = Status::infeasible;
      rep.message = "primal infeasibility certificate found";
      break;
    case ExitCode::dual_infeasible:
      rep.status = Status::unbounded;
      rep.message = "dual infeasibility certificate found (objective unbounded)";
      break;
    case ExitCode::maxit:
      rep.status = Status::numerical_failure;
      rep.message = "iteration limit reached at iteration " + std::to_string(solver.iterations()) +
                    " (pres=" + std::to_string(solver.info().pres) + ", dres=" + std::to_string(solver.info().dres) +
                    ", gap=" + std::to_string(solver.info().gap) + ")";
      break;
    default:
      rep.status = Status::numerical_failure;
      rep.message = "no further progress possible (pres=" + std::to_string(solver.info().pres) +
                    ", dres=" + std::to_string(solver.info().dres) + ", gap=" + std::to_string(solver.info().gap) + ")";
      break;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void backend_register(const std::string& name, BackendFn fn) {
  std::lock_guard<std::mutex> lock(backend_mutex());
  auto& reg = backend_registry();
  if (name == "bundled" || reg.count(name)) throw std::invalid_argument("solver backend '" + name + "' already registered");
  reg[name] = std::move(fn);
}

std::vector<std::string> backend_names() {
  std::lock_guard<std::mutex> lock(backend_mutex());
  std::vector<std::string> out{"bundled"};
  for (const auto& [k, v] : backend_registry()) out.push_back(k);
  return out;
}

Report solve_with(const std::string& backend, const Program& program, const SolveOptions& options) {
  if (backend == "bundled") return solve(program, options);
  BackendFn fn;
  {
    std::lock_guard<std::mutex> lock(backend_mutex());
    auto it = backend_registry().find(backend);
    if (it == backend_registry().end()) throw std::invalid_argument("unknown solver backend '" + backend + "'");
    fn = it->second;
  }
  return fn(program, options);
}

void dump_program(const Program& prog, std::ostream& out) {
  out.precision(17);
  out << "conic-program/1\n";
  out << "vars " << prog.n_vars() << "\n";
  for (int v = 0; v < prog.n_vars(); ++v)
    out << "var " << v << " " << prog.var_name(v) << " " << (prog.is_nonneg(v) ? "nonneg" : "free") << "\n";
  for (const auto& cone : prog.soc_cones()) {
    out << "soc " << cone.size();
    for (int v : cone) out << " " << v;
    out << "\n";
  }
  const LinExpr& obj = prog.objective();
  out << "objective " << obj.terms().size();
  for (const auto& [v, c] : obj.terms()) out << " " << v << " " << c;
  out << " " << obj.constant() << "\n";
  out << "eqs " << prog.equalities().size() << "\n";
  for (const EqRow& row : prog.equalities()) {
    out << "eq " << row.lhs.terms().size();
    for (const auto& [v, c] : row.lhs.terms()) out << " " << v << " " << c;
    out << " " << row.rhs << "\n";
  }
  out << "end\n";
}

Program parse_program(std::istream& in) {
  Program prog;
  std::string header;
  in >> header;
  if (header != "conic-program/1") throw std::invalid_argument("not a conic-program/1 stream");
  std::string tok;
  int n_vars = 0;
  in >> tok >> n_vars;
  if (tok != "vars") throw std::invalid_argument("expected 'vars'");
  std::vector<std::pair<std::string, bool>> vars(n_vars);
  while (in >> tok) {
    if (tok == "var") {
      int idx;
      std::string name, kind;
      in >> idx >> name >> kind;
      vars.at(idx) = {name, kind == "nonneg"};
      continue;
    }
    break;
  }
  for (auto& [name, nonneg] : vars)
    nonneg ? prog.add_nonneg_var(name) : prog.add_var(name);

  auto read_expr = [&](LinExpr& e) {
    int nterms;
    in >> nterms;
    for (int i = 0; i < nterms; ++i) {
      int v;
      double c;
      in >> v >> c;
      e.add_term(v, c);
    }
  };

  while (true) {
    if (tok == "soc") {
      int k;
      in >> k;
      std::vector<int> cone(k);
      for (int& v : cone) in >> v;
      prog.add_soc(std::move(cone));
    } else if (tok == "objective") {
      LinExpr obj;
      read_expr(obj);
      double cst;
      in >> cst;
      obj.constant() = cst;
      prog.set_objective(std::move(obj));
    } else if (tok == "eqs") {
      int rows;
      in >> rows;
    } else if (tok == "eq") {
      LinExpr lhs;
      read_expr(lhs);
      double rhs;
      in >> rhs;
      prog.add_eq(std::move(lhs), rhs);
    } else if (tok == "end") {
      break;
    } else {
      throw std::invalid_argument("unexpected token '" + tok + "' in conic program stream");
    }
    if (!(in >> tok)) break;
  }
  return prog;
}

}  // namespace rdoe::conic
