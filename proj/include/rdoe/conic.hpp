#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rdoe::conic {

enum class Status { optimal, infeasible, unbounded, numerical_failure };

std::string to_string(Status s);

enum class NormKind { L1, L2, LInf };

NormKind dual_norm(NormKind k);
double norm_value(NormKind k, const Eigen::VectorXd& v);
NormKind norm_from_string(const std::string& s);
std::string to_string(NormKind k);

/// Sparse affine expression sum_i coeff_i * x_{var_i} + constant.
class LinExpr {
 public:
  LinExpr() = default;
  /*implicit*/ LinExpr(double constant) : constant_(constant) {}
  static LinExpr variable(int var, double coeff = 1.0) {
    LinExpr e;
    e.add_term(var, coeff);
    return e;
  }

  void add_term(int var, double coeff);
  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double s);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }

  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }
  double& constant() { return constant_; }
  double evaluate(const Eigen::VectorXd& x) const;

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

struct EqRow {
  LinExpr lhs;   // lhs == rhs
  double rhs = 0.0;
};

/// Solver-agnostic conic program: maximize c'x subject to linear
/// equalities, with each variable free, nonnegative, or part of one
/// second-order cone tuple (t, u) with |u|_2 <= t.
class Program {
 public:
  int add_var(const std::string& name);
  int add_nonneg_var(const std::string& name);
  std::vector<int> add_vars(const std::string& prefix, int count);

  int n_vars() const { return int(names_.size()); }
  const std::string& var_name(int v) const { return names_[v]; }
  bool is_nonneg(int v) const { return nonneg_[v]; }

  void add_eq(LinExpr expr, double rhs);
  /// expr <= rhs, realized as expr + slack == rhs with slack >= 0.
  void add_le(LinExpr expr, double rhs);
  void add_ge(LinExpr expr, double rhs);
  void add_box(int var, double lo, double hi);
  /// Marks (vars[0], vars[1..]) as a second-order cone tuple.
  void add_soc(std::vector<int> vars);

  /// Adds constraints enforcing ||argument||_norm <= bound.
  /// L1 and LInf expand to linear rows; L2 becomes one second-order cone.
  void add_norm_epigraph(NormKind norm, const std::vector<LinExpr>& argument, const LinExpr& bound);

  void set_objective(LinExpr expr);  // maximize
  const LinExpr& objective() const { return objective_; }

  const std::vector<EqRow>& equalities() const { return equalities_; }
  const std::vector<std::vector<int>>& soc_cones() const { return socs_; }
  std::vector<std::pair<int, int>> nonneg_ranges() const;

 private:
  std::vector<std::string> names_;
  std::vector<bool> nonneg_;
  std::vector<bool> in_cone_;
  std::vector<EqRow> equalities_;
  std::vector<std::vector<int>> socs_;
  LinExpr objective_;
  int aux_counter_ = 0;
};

struct SolveOptions {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iters = 200;
  bool presolve = true;
  bool verbose = false;

  /// Applies the ENVELOPE_SOLVER_TOL environment variable, if set, to the
  /// three tolerances.
  SolveOptions with_env_overrides() const;
};

struct Report {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x;           // primal values for the program's variables
  Eigen::VectorXd eq_duals;    // one multiplier per equality row
  Eigen::VectorXd cone_duals;  // one multiplier per cone slack row
  double objective = 0.0;      // c'x in the maximize sense
  double dual_objective = 0.0;
  double gap = 0.0;
  double rel_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::string message;
};

/// Solves with the bundled dense homogeneous self-dual interior-point
/// method. Deterministic given the program and options.
Report solve(const Program& program, const SolveOptions& options = {});

using BackendFn = std::function<Report(const Program&, const SolveOptions&)>;

/// Registers an external solve backend; throws on duplicate names.
void backend_register(const std::string& name, BackendFn fn);
std::vector<std::string> backend_names();
/// Dispatches to a named backend ("bundled" is always available).
Report solve_with(const std::string& backend, const Program& program, const SolveOptions& options = {});

/// Plain-text interchange format (objective, equality triplets, cones).
void dump_program(const Program& program, std::ostream& out);
Program parse_program(std::istream& in);

}  // namespace rdoe::conic
