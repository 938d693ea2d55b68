#include "rdoe/acpf.hpp"

#include <cmath>
#include <fstream>

namespace rdoe {

namespace {

/// Complex load power per (bus, phase) in per-unit, consumption positive.
Eigen::MatrixXcd busphase_power(const NetworkModel& network, const Eigen::VectorXd& p_kw,
                                const Eigen::VectorXd& q_kvar) {
  if (p_kw.size() != int(network.customers().size()) || q_kvar.size() != int(network.customers().size()))
    throw ValidationError("injection vectors must cover every customer");
  const double s_base = network.base().s_kva;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(network.buses().size(), 3);
  for (int m = 0; m < int(network.customers().size()); ++m) {
    const Customer& c = network.customers()[m];
    s(network.bus_index(c.bus), int(c.phase)) += Complex(p_kw(m), q_kvar(m)) / s_base;
  }
  return s;
}

}  // namespace

PowerFlowSolution solve_acpf(const NetworkModel& network, const Eigen::VectorXd& p_kw,
                             const Eigen::VectorXd& q_kvar, const AcpfOptions& options) {
  if (options.tol <= 0) throw ValidationError("acpf tolerance must be positive");
  const auto& lines = network.oriented_lines();
  const int n_bus = int(network.buses().size());
  const int n_line = int(lines.size());
  const Eigen::MatrixXcd s = busphase_power(network, p_kw, q_kvar);

  PowerFlowSolution sol;
  sol.v.resize(n_bus, 3);
  for (int i = 0; i < n_bus; ++i)
    for (int p = 0; p < 3; ++p) sol.v(i, p) = network.v_ref()[p];
  sol.i_line = Eigen::MatrixXcd::Zero(n_line, 3);

  // Children of each line position when walking away from the reference.
  // Oriented lines are in BFS order, so reverse order is a valid backward
  // sweep and forward order a valid forward sweep.
  std::vector<std::vector<int>> child_lines(n_line);
  std::vector<int> parent_line_of_bus(n_bus, -1);
  for (int k = 0; k < n_line; ++k) parent_line_of_bus[lines[k].child_bus] = k;
  for (int k = 0; k < n_line; ++k) {
    const int pl = parent_line_of_bus[lines[k].parent_bus];
    if (pl >= 0) child_lines[pl].push_back(k);
  }

  for (sol.iterations = 1; sol.iterations <= options.max_iter; ++sol.iterations) {
    /* Backward: aggregate load currents (S/V)* up the tree. */
    for (int k = n_line - 1; k >= 0; --k) {
      const int bus = lines[k].child_bus;
      for (int p = 0; p < 3; ++p) {
        Complex inj = std::conj(s(bus, p) / sol.v(bus, p));
        for (int c : child_lines[k]) inj += sol.i_line(c, p);
        sol.i_line(k, p) = inj;
      }
    }
    /* Forward: propagate voltage drops from the reference. */
    double dv = 0.0;
    for (int k = 0; k < n_line; ++k) {
      const int parent = lines[k].parent_bus;
      const int child = lines[k].child_bus;
      for (int p = 0; p < 3; ++p) {
        Complex drop = 0.0;
        for (int ps = 0; ps < 3; ++ps) drop += lines[k].z_pu(p, ps) * sol.i_line(k, ps);
        const Complex vnew = sol.v(parent, p) - drop;
        dv = std::max(dv, std::abs(vnew - sol.v(child, p)));
        sol.v(child, p) = vnew;
      }
    }
    sol.residual = dv;
    if (dv < options.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

double PowerFlowSolution::kirchhoff_residual(const NetworkModel& network, const Eigen::VectorXd& p_kw,
                                             const Eigen::VectorXd& q_kvar) const {
  const Eigen::MatrixXcd s = busphase_power(network, p_kw, q_kvar);
  const auto& lines = network.oriented_lines();
  double worst = 0.0;
  for (int b = 0; b < int(network.buses().size()); ++b) {
    if (b == network.reference_index()) continue;
    for (int p = 0; p < 3; ++p) {
      Complex net = 0.0;
      for (int k = 0; k < int(lines.size()); ++k) {
        if (lines[k].child_bus == b) net += i_line(k, p);
        if (lines[k].parent_bus == b) net -= i_line(k, p);
      }
      const Complex load = std::conj(s(b, p) / v(b, p));
      worst = std::max(worst, std::abs(net - load));
    }
  }
  return worst;
}

std::vector<ErrorScenario> standard_scenarios(const NetworkModel& network, double high_kw, double low_kw) {
  const int n = int(network.customers().size());
  Eigen::VectorXd base_p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd base_q = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < n; ++m) {
    const Customer& c = network.customers()[m];
    if (!c.is_active()) {
      base_p(m) = c.p_forecast_kw;
      base_q(m) = c.q_forecast_kvar;
    }
  }
  auto with_active = [&](double kw) {
    Eigen::VectorXd p = base_p;
    for (int m = 0; m < n; ++m)
      if (network.customers()[m].is_active()) p(m) = kw;
    return p;
  };
  return {
      {"export", "high", with_active(-high_kw), base_q},
      {"export", "low", with_active(-low_kw), base_q},
      {"import", "high", with_active(high_kw), base_q},
      {"import", "low", with_active(low_kw), base_q},
  };
}

std::vector<ErrorRow> linearization_error_report(const NetworkModel& network, const OperatingPoint& op,
                                                 const std::vector<ErrorScenario>& scenarios,
                                                 const AcpfOptions& options) {
  const LinearSystem ls = assemble(network, op);
  std::vector<ErrorRow> rows;
  for (const ErrorScenario& sc : scenarios) {
    ErrorRow row;
    row.status = sc.status;
    row.load = sc.load;
    const PowerFlowSolution pf = solve_acpf(network, sc.p_kw, sc.q_kvar, options);
    row.converged = pf.converged;
    if (pf.converged) {
      const Eigen::MatrixXcd v_lin = linear_pf_voltages(network, ls, sc.p_kw, sc.q_kvar);
      double sum = 0.0, worst = 0.0;
      int count = 0;
      for (int b = 0; b < int(network.buses().size()); ++b) {
        if (b == network.reference_index()) continue;
        for (int p = 0; p < 3; ++p) {
          const double err = std::abs(std::abs(v_lin(b, p)) - std::abs(pf.v(b, p)));
          sum += err;
          worst = std::max(worst, err);
          ++count;
        }
      }
      row.avg_vm_error = count > 0 ? sum / count : 0.0;
      row.max_vm_error = worst;
    }
    rows.push_back(row);
  }
  return rows;
}

void export_error_csv(const std::vector<ErrorRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write error report '" + path + "'");
  out << "status,load,avg_vm_error,max_vm_error,converged\n";
  out.precision(10);
  for (const ErrorRow& r : rows)
    out << r.status << "," << r.load << "," << r.avg_vm_error << "," << r.max_vm_error << ","
        << (r.converged ? 1 : 0) << "\n";
}

AuditResult feasibility_audit(const NetworkModel& network, const EnvelopeResult& envelope,
                              const AcpfOptions& options, const AuditRealization& realization) {
  const int n = int(network.customers().size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  const auto actives = network.active_customers();
  if (envelope.envelope_kw.size() != int(actives.size()))
    throw ValidationError("envelope does not cover every active customer");
  for (int i = 0; i < int(actives.size()); ++i) {
    p(actives[i]) = envelope.envelope_kw(i);
    if (envelope.q1_kvar.size() == int(actives.size())) q(actives[i]) = envelope.q1_kvar(i);
  }
  const auto passives = network.passive_customers();
  if (realization.passive_p_kw && realization.passive_p_kw->size() != int(passives.size()))
    throw ValidationError("passive realization does not cover every passive customer");
  for (int i = 0; i < int(passives.size()); ++i) {
    const Customer& c = network.customers()[passives[i]];
    p(passives[i]) = realization.passive_p_kw ? (*realization.passive_p_kw)(i) : c.p_forecast_kw;
    if (realization.passive_q_kvar)
      q(passives[i]) = (*realization.passive_q_kvar)(i);
    else
      q(passives[i]) = envelope.q2_kvar ? (*envelope.q2_kvar)(i) : c.q_forecast_kvar;
  }

  AuditResult res;
  const PowerFlowSolution pf = solve_acpf(network, p, q, options);
  res.converged = pf.converged;
  if (!pf.converged) return res;

  res.min_vm = 10.0;
  res.max_vm = 0.0;
  for (int b = 0; b < int(network.buses().size()); ++b) {
    if (b == network.reference_index()) continue;
    const Bus& bus = network.buses()[b];
    for (int ph = 0; ph < 3; ++ph) {
      const double vm = std::abs(pf.v(b, ph));
      res.min_vm = std::min(res.min_vm, vm);
      res.max_vm = std::max(res.max_vm, vm);
      const double viol = std::max(vm - bus.vmax, bus.vmin - vm);
      if (viol > 0) {
        res.worst_vm = std::max(res.worst_vm, viol);
        res.violations.push_back(bus.id + "/" + to_string(Phase(ph)) + ": |V|=" + std::to_string(vm));
      }
    }
  }
  return res;
}

}  // namespace rdoe
