#pragma once

#include <string>
#include <vector>

#include "rdoe/lintopf.hpp"
#include "rdoe/uncertainty.hpp"

namespace rdoe {

/// Impedance-matrix realizations accumulated by the cutting-plane loop;
/// the first member is always the nominal E.
struct ScenarioSet {
  std::vector<Eigen::MatrixXd> e_matrices;
};

struct TsroRound {
  int round = 0;
  double master_objective_kw = 0.0;
  double violation = 0.0;
  int added_scenario = -1;  // index into the scenario set, -1 if none added
};

struct TsroTrace {
  std::vector<TsroRound> rounds;
  std::string termination;  // "converged", "max-rounds", "infeasible"

  void export_csv(const std::string& path) const;
};

struct TsroOptions {
  SolveSettings settings;
  double tol = 1e-7;
  int max_rounds = 50;
};

struct TsroMasterResult {
  Eigen::VectorXd p1, q1;  // per-unit decisions
  double objective_kw = 0.0;
  conic::Status status = conic::Status::numerical_failure;
};

/// Scenario-constrained master: max total export with replicated state
/// variables (v_i, l_i) and the full constraint block per scenario E_i.
TsroMasterResult tsro_master(const ScenarioSet& scenarios, const LinearSystem& ls, const FeasibleRegion& fr,
                             const SolveSettings& settings = {});

struct TsroSubResult {
  double violation = 0.0;        // total voltage-limit violation at the worst vertex
  Eigen::MatrixXd e_worst;       // the violating E realization
  Eigen::VectorXd latent_worst;  // its latent coordinates
};

/// Worst-case search over the LInf box on the designated impedance
/// entries: the states (v, l) are pinned by the invertibility of C and D,
/// so the slack-maximization reduces to evaluating the voltage-limit
/// violation at each box vertex (at most 2^16 vertices supported).
TsroSubResult tsro_subproblem(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1, const LinearSystem& ls,
                              const FeasibleRegion& fr, const ComponentSet& e_set);

/// Alternates master and subproblem until no violating realization
/// remains (Appendix-style three-stage robust optimization baseline).
std::pair<EnvelopeResult, TsroTrace> tsro_solve(const NetworkModel& network, const UncertaintyModel& model,
                                                const TsroOptions& options = {});
std::pair<EnvelopeResult, TsroTrace> tsro_solve(const LinearSystem& ls, const FeasibleRegion& fr,
                                                const UncertaintyModel& model, const TsroOptions& options = {});

}  // namespace rdoe
