#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdoe/conic.hpp"
#include "rdoe/netmodel.hpp"

namespace rdoe {

/// Fixed complex voltages used to linearize the current-injection and
/// voltage-magnitude relations. Rows follow NetworkModel::buses(); the
/// reference row always equals v_ref.
struct OperatingPoint {
  Eigen::MatrixXcd v;  // n_bus x 3, per-unit

  static OperatingPoint flat(const NetworkModel& network);
  void validate(const NetworkModel& network) const;
};

/// Index bookkeeping for the real-valued stacked system. Voltages and
/// currents are stacked real part first, then imaginary part; within a
/// part, entity index = position * 3 + phase. Voltage entities are the
/// non-reference buses in BFS order, current entities the oriented lines
/// (line k is the parent edge of non-reference bus k).
struct SystemOrdering {
  int n_nonref = 0;
  std::vector<int> nonref_buses;  // bus index per position

  int n_entities() const { return 3 * n_nonref; }
  int dim() const { return 2 * n_entities(); }
  int re_index(int position, int phase) const { return position * 3 + phase; }
  int im_index(int position, int phase) const { return n_entities() + position * 3 + phase; }
};

/// Per-customer decision metadata carried alongside the feasible region so
/// envelope solvers do not need the NetworkModel. All values per-unit.
struct DecisionMeta {
  double s_base_kva = 1.0;
  std::vector<std::string> active_ids;
  std::vector<std::string> passive_ids;
  Eigen::VectorXd p1_min, p1_max;  // active customer boxes
  Eigen::VectorXd q1_min, q1_max;
  Eigen::VectorXd q2_min, q2_max;  // passive boxes (used when q2 is controllable)
};

/// Real-valued matrices of the linearized three-phase OPF in compact form:
///   A1 p1 + A2 p2 + B1 q1 + B2 q2 + C l = b
///   D v + E l = d
///   F v <= f
struct LinearSystem {
  Eigen::MatrixXd A1, A2, B1, B2, C, D, E, F;
  Eigen::VectorXd b, d, f;
  SystemOrdering ordering;
  OperatingPoint op;
  DecisionMeta meta;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu_c, lu_d;

  int dim() const { return ordering.dim(); }
};

LinearSystem assemble(const NetworkModel& network, const OperatingPoint& op);

/// Linear voltage-magnitude rows: |V| approximated by the projection of V
/// onto the unit direction of the given voltage, first-order exact at the
/// operating point. Two rows per (bus, phase): upper bounds first, then
/// lower bounds.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> voltage_linearization(const NetworkModel& network,
                                                                  const OperatingPoint& op,
                                                                  const SystemOrdering& ordering);

/// Feasible region for p1 as the polyhedron
///   vec(E)' H_i (A1 p1 + A2 p2 + B q - b) <= t_i,
/// with H_i = C^{-1} kron ([F]_i D^{-1})' and t_i = [f - F D^{-1} d]_i.
struct FeasibleRegion {
  Eigen::MatrixXd fdinv;     // F D^{-1}
  Eigen::MatrixXd cinv;      // C^{-1}
  Eigen::MatrixXd e_nominal; // the matrix E at assembly
  Eigen::MatrixXd det_rows;  // row i = [F]_i D^{-1} E C^{-1}
  Eigen::VectorXd t;
  Eigen::VectorXd p2, q2;    // fixed passive injections, per-unit
  Eigen::MatrixXd A1, A2, B1, B2;
  Eigen::VectorXd b;
  DecisionMeta meta;

  int rows() const { return int(fdinv.rows()); }
  int ambient_dim() const { return int(cinv.rows()); }
  Eigen::VectorXd vec_e_nominal() const;

  /// Materializes H_i by its Kronecker definition (tests and exports).
  Eigen::MatrixXd H_row(int i) const;

  /// w = A1 p1 + A2 p2 + B1 q1 + B2 q2 - b for given decisions (p.u.).
  Eigen::VectorXd w_of(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1) const;
  Eigen::VectorXd w_of(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1, const Eigen::VectorXd& p2,
                       const Eigen::VectorXd& q2) const;

  /// Row values det_rows * w against t; negative slack means violation.
  Eigen::VectorXd slack(const Eigen::VectorXd& w) const { return t - det_rows * w; }
  bool contains(const Eigen::VectorXd& p1_kw, const Eigen::VectorXd& q1_kvar, double tol = 1e-9) const;

  void export_csv(const std::string& path) const;
};

FeasibleRegion feasible_region(const LinearSystem& ls, const Eigen::VectorXd& p2_kw, const Eigen::VectorXd& q2_kvar);

/// Takes the passive injections from the network's forecasts.
FeasibleRegion feasible_region(const LinearSystem& ls, const NetworkModel& network);

enum class AllocationPolicy { strictly_equal };

enum class QMode { fixed_zero, optimized };

struct SolveSettings {
  AllocationPolicy allocation = AllocationPolicy::strictly_equal;
  QMode q1 = QMode::fixed_zero;
  bool q2_controllable = false;
  conic::SolveOptions solver;
  std::string backend = "bundled";
};

struct EnvelopeResult {
  std::vector<std::string> customer_ids;   // active customers
  Eigen::VectorXd envelope_kw;             // negative values are export limits
  Eigen::VectorXd q1_kvar;
  std::optional<Eigen::VectorXd> q2_kvar;  // populated when q2 is controllable
  double objective_kw = 0.0;               // sum of envelopes
  conic::Status status = conic::Status::numerical_failure;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  std::string message;
};

/// Deterministic DOE: maximize total export subject to the FR rows,
/// strictly-equal allocation and per-customer boxes.
EnvelopeResult solve_ddoe(const FeasibleRegion& fr, const SolveSettings& settings = {});

struct TracedPolygon {
  std::vector<double> angle_deg;
  std::vector<Eigen::Vector2d> points_kw;  // one boundary point per direction
  bool feasible = true;
  std::string diagnostic;

  void export_csv(const std::string& path) const;
};

/// Boundary of the 2-D slice of the FR spanned by two active customers,
/// traced by maximizing cos/sin direction objectives.
TracedPolygon trace_fr_2d(const FeasibleRegion& fr, int active_a, int active_b, int n_directions,
                          const SolveSettings& settings = {});

/// v* = D^{-1} E C^{-1} (A p* + B q* - b) + D^{-1} d mapped back to complex
/// voltages per (bus, phase); re-assemble with the result and re-solve
/// until the given point stops moving. Vectors in kW/kvar over the full
/// customer list.
OperatingPoint refine_operating_point(const NetworkModel& network, const LinearSystem& ls,
                                      const Eigen::VectorXd& p_kw, const Eigen::VectorXd& q_kvar);

/// Linear power-flow voltages at given customer injections (kW/kvar over
/// all customers in network order).
Eigen::MatrixXcd linear_pf_voltages(const NetworkModel& network, const LinearSystem& ls,
                                    const Eigen::VectorXd& p_kw, const Eigen::VectorXd& q_kvar);

namespace detail {

/// Conic-program variable indices of the envelope decisions.
struct DecisionVars {
  std::vector<int> p1, q1, q2;
};

/// Adds p1/q1/q2 variables with boxes and the allocation equalities.
DecisionVars add_decision_vars(conic::Program& prog, const FeasibleRegion& fr, const SolveSettings& settings);

/// row * (A1 p1 + A2 p2_used + B1 q1 + B2 q2 - b) as an affine expression
/// in the decision variables; p2 can be excluded or overridden so robust
/// builders reuse the exact deterministic code path.
conic::LinExpr row_in_decisions(const Eigen::RowVectorXd& row, const FeasibleRegion& fr, const DecisionVars& vars,
                                const Eigen::VectorXd& p2_used, bool include_p2, bool include_q2 = true);
conic::LinExpr row_in_decisions(const Eigen::RowVectorXd& row, const FeasibleRegion& fr, const DecisionVars& vars);

EnvelopeResult extract_result(const DecisionMeta& meta, const DecisionVars& vars, const conic::Report& rep,
                              double setup_seconds);

void set_export_objective(conic::Program& prog, const DecisionVars& vars);

}  // namespace detail

}  // namespace rdoe
