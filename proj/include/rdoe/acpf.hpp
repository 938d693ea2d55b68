#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdoe/lintopf.hpp"
#include "rdoe/netmodel.hpp"

namespace rdoe {

/// Exact unbalanced three-phase power-flow solution from the
/// backward/forward sweep. Ground truth for linearization-error studies
/// and envelope feasibility audits.
struct PowerFlowSolution {
  Eigen::MatrixXcd v;       // n_bus x 3, p.u.
  Eigen::MatrixXcd i_line;  // n_line x 3 over oriented lines, p.u.
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;    // max voltage update at the last sweep

  /// Largest Kirchhoff current mismatch over (bus, phase), p.u.
  double kirchhoff_residual(const NetworkModel& network, const Eigen::VectorXd& p_kw,
                            const Eigen::VectorXd& q_kvar) const;
};

struct AcpfOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Fixed-point backward/forward sweep: current aggregation with the latest
/// voltages in the denominator, then a voltage forward sweep from the
/// reference. Non-convergence is reported, not thrown.
PowerFlowSolution solve_acpf(const NetworkModel& network, const Eigen::VectorXd& p_kw,
                             const Eigen::VectorXd& q_kvar, const AcpfOptions& options = {});

struct ErrorScenario {
  std::string status;  // "export" or "import"
  std::string load;    // "high" or "low"
  Eigen::VectorXd p_kw;
  Eigen::VectorXd q_kvar;
};

struct ErrorRow {
  std::string status;
  std::string load;
  double avg_vm_error = 0.0;  // p.u.
  double max_vm_error = 0.0;  // p.u.
  bool converged = true;
};

/// Voltage-magnitude error |(|V_lin| - |V_acpf|)| per (bus, phase),
/// averaged and maximized over the network, one row per scenario.
std::vector<ErrorRow> linearization_error_report(const NetworkModel& network, const OperatingPoint& op,
                                                 const std::vector<ErrorScenario>& scenarios,
                                                 const AcpfOptions& options = {});

/// The four Table-style scenarios: export/import at high/low per-customer
/// load (every active customer at -/+ the load, passives at forecast).
std::vector<ErrorScenario> standard_scenarios(const NetworkModel& network, double high_kw = 3.0,
                                              double low_kw = 1.0);

void export_error_csv(const std::vector<ErrorRow>& rows, const std::string& path);

struct AuditResult {
  double worst_vm = 0.0;              // largest limit violation in p.u. (0 if none)
  double min_vm = 0.0, max_vm = 0.0;  // observed magnitudes
  std::vector<std::string> violations;  // "bus/phase: |V|=..."
  bool converged = true;
};

/// Realization of the non-envelope quantities for an audit: by default the
/// passive customers sit at their forecasts.
struct AuditRealization {
  std::optional<Eigen::VectorXd> passive_p_kw;
  std::optional<Eigen::VectorXd> passive_q_kvar;
};

/// Exact voltages when every active customer sits at its envelope
/// simultaneously; reports the worst magnitude against the bus limits.
AuditResult feasibility_audit(const NetworkModel& network, const EnvelopeResult& envelope,
                              const AcpfOptions& options = {}, const AuditRealization& realization = {});

}  // namespace rdoe
