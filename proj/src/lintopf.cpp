#include "rdoe/lintopf.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace rdoe {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<int> position_of_bus(const NetworkModel& network) {
  std::vector<int> pos(network.buses().size(), -1);
  const auto& order = network.nonref_order();
  for (int i = 0; i < int(order.size()); ++i) pos[order[i]] = i;
  return pos;
}

DecisionMeta make_meta(const NetworkModel& network) {
  DecisionMeta meta;
  meta.s_base_kva = network.base().s_kva;
  const auto actives = network.active_customers();
  const auto passives = network.passive_customers();
  meta.p1_min.resize(actives.size());
  meta.p1_max.resize(actives.size());
  meta.q1_min.resize(actives.size());
  meta.q1_max.resize(actives.size());
  for (int i = 0; i < int(actives.size()); ++i) {
    const Customer& c = network.customers()[actives[i]];
    meta.active_ids.push_back(c.id);
    meta.p1_min(i) = c.p_min_kw / meta.s_base_kva;
    meta.p1_max(i) = c.p_max_kw / meta.s_base_kva;
    meta.q1_min(i) = c.q_min_kvar / meta.s_base_kva;
    meta.q1_max(i) = c.q_max_kvar / meta.s_base_kva;
  }
  meta.q2_min.resize(passives.size());
  meta.q2_max.resize(passives.size());
  for (int i = 0; i < int(passives.size()); ++i) {
    const Customer& c = network.customers()[passives[i]];
    meta.passive_ids.push_back(c.id);
    meta.q2_min(i) = c.q_min_kvar / meta.s_base_kva;
    meta.q2_max(i) = c.q_max_kvar / meta.s_base_kva;
  }
  return meta;
}

}  // namespace

OperatingPoint OperatingPoint::flat(const NetworkModel& network) {
  OperatingPoint op;
  op.v.resize(network.buses().size(), 3);
  for (int i = 0; i < op.v.rows(); ++i)
    for (int p = 0; p < 3; ++p) op.v(i, p) = network.v_ref()[p];
  return op;
}

void OperatingPoint::validate(const NetworkModel& network) const {
  if (v.rows() != int(network.buses().size()) || v.cols() != 3)
    throw ValidationError("operating point does not cover all (bus, phase) pairs");
  for (int i = 0; i < v.rows(); ++i)
    for (int p = 0; p < 3; ++p) {
      const double mag = std::abs(v(i, p));
      if (!(mag > 0.5 && mag < 1.5))
        throw ValidationError("operating-point voltage magnitude outside (0.5, 1.5) p.u. at bus " +
                              network.buses()[i].id);
    }
  const int ref = network.reference_index();
  for (int p = 0; p < 3; ++p)
    if (std::abs(v(ref, p) - network.v_ref()[p]) > 1e-12)
      throw ValidationError("operating point must equal v_ref at the reference bus");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> voltage_linearization(const NetworkModel& network,
                                                                  const OperatingPoint& op,
                                                                  const SystemOrdering& ordering) {
  const int ne = ordering.n_entities();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2 * ne, 2 * ne);
  Eigen::VectorXd f(2 * ne);
  for (int pos = 0; pos < ordering.n_nonref; ++pos) {
    const int bus = ordering.nonref_buses[pos];
    for (int ph = 0; ph < 3; ++ph) {
      const double theta = std::arg(op.v(bus, ph));
      const int k = ordering.re_index(pos, ph);
      F(k, ordering.re_index(pos, ph)) = std::cos(theta);
      F(k, ordering.im_index(pos, ph)) = std::sin(theta);
      f(k) = network.buses()[bus].vmax;
      const int kl = ne + k;
      F(kl, ordering.re_index(pos, ph)) = -std::cos(theta);
      F(kl, ordering.im_index(pos, ph)) = -std::sin(theta);
      f(kl) = -network.buses()[bus].vmin;
    }
  }
  return {F, f};
}

LinearSystem assemble(const NetworkModel& network, const OperatingPoint& op) {
  op.validate(network);

  LinearSystem ls;
  ls.op = op;
  ls.ordering.n_nonref = int(network.nonref_order().size());
  ls.ordering.nonref_buses = network.nonref_order();
  if (ls.ordering.n_nonref == 0) throw ValidationError("network has no non-reference bus");

  const SystemOrdering& ord = ls.ordering;
  const int n = ord.dim();
  const auto pos_of = position_of_bus(network);
  const auto& lines = network.oriented_lines();

  /* C realizes the linearized injection-to-current coupling: for each
   * non-reference (bus, phase), sum of oriented line currents equals the
   * injection current (P - jQ) / conj(Vbar). */
  ls.C = Eigen::MatrixXd::Zero(n, n);
  for (int bpos = 0; bpos < ord.n_nonref; ++bpos) {
    for (int lpos = 0; lpos < int(lines.size()); ++lpos) {
      double entry = 0.0;
      if (lpos == bpos) entry = 1.0;  // parent edge of this bus
      else if (lines[lpos].parent_bus == ord.nonref_buses[bpos]) entry = -1.0;
      if (entry == 0.0) continue;
      for (int ph = 0; ph < 3; ++ph) {
        ls.C(ord.re_index(bpos, ph), ord.re_index(lpos, ph)) = entry;
        ls.C(ord.im_index(bpos, ph), ord.im_index(lpos, ph)) = entry;
      }
    }
  }
  ls.b = Eigen::VectorXd::Zero(n);

  /* Injection maps: current = (P - jQ) * (1 / conj(Vbar)); with
   * 1/conj(Vbar) = g + jh the real expansion is [g h; h -g] applied to
   * (P, Q), moved to the left-hand side. */
  const auto actives = network.active_customers();
  const auto passives = network.passive_customers();
  ls.A1 = Eigen::MatrixXd::Zero(n, actives.size());
  ls.B1 = Eigen::MatrixXd::Zero(n, actives.size());
  ls.A2 = Eigen::MatrixXd::Zero(n, passives.size());
  ls.B2 = Eigen::MatrixXd::Zero(n, passives.size());
  auto fill_customer = [&](int cust_index, Eigen::MatrixXd& Ap, Eigen::MatrixXd& Bq, int col) {
    const Customer& c = network.customers()[cust_index];
    const int bus = network.bus_index(c.bus);
    if (bus == network.reference_index()) return;  // slack absorbs it
    const int bpos = pos_of[bus];
    const int ph = int(c.phase);
    const Complex w = 1.0 / std::conj(op.v(bus, ph));
    const double g = w.real();
    const double h = w.imag();
    Ap(ord.re_index(bpos, ph), col) = -g;
    Ap(ord.im_index(bpos, ph), col) = -h;
    Bq(ord.re_index(bpos, ph), col) = -h;
    Bq(ord.im_index(bpos, ph), col) = g;
  };
  for (int i = 0; i < int(actives.size()); ++i) fill_customer(actives[i], ls.A1, ls.B1, i);
  for (int i = 0; i < int(passives.size()); ++i) fill_customer(passives[i], ls.A2, ls.B2, i);

  /* D: oriented voltage differences; E: line impedance blocks expressed in
   * real numbers, R on the diagonal blocks and -/+X off-diagonal. Line k
   * relates child voltage, parent voltage and the line current:
   *   V_child - V_parent + Z I = [parent == ref] * V0. */
  ls.D = Eigen::MatrixXd::Zero(n, n);
  ls.E = Eigen::MatrixXd::Zero(n, n);
  ls.d = Eigen::VectorXd::Zero(n);
  for (int lpos = 0; lpos < int(lines.size()); ++lpos) {
    const OrientedLine& ln = lines[lpos];
    const int child = pos_of[ln.child_bus];
    for (int ph = 0; ph < 3; ++ph) {
      ls.D(ord.re_index(lpos, ph), ord.re_index(child, ph)) = 1.0;
      ls.D(ord.im_index(lpos, ph), ord.im_index(child, ph)) = 1.0;
      if (ln.parent_bus != network.reference_index()) {
        const int parent = pos_of[ln.parent_bus];
        ls.D(ord.re_index(lpos, ph), ord.re_index(parent, ph)) = -1.0;
        ls.D(ord.im_index(lpos, ph), ord.im_index(parent, ph)) = -1.0;
      } else {
        ls.d(ord.re_index(lpos, ph)) = network.v_ref()[ph].real();
        ls.d(ord.im_index(lpos, ph)) = network.v_ref()[ph].imag();
      }
      for (int ps = 0; ps < 3; ++ps) {
        const double r = ln.z_pu(ph, ps).real();
        const double x = ln.z_pu(ph, ps).imag();
        ls.E(ord.re_index(lpos, ph), ord.re_index(lpos, ps)) = r;
        ls.E(ord.re_index(lpos, ph), ord.im_index(lpos, ps)) = -x;
        ls.E(ord.im_index(lpos, ph), ord.re_index(lpos, ps)) = x;
        ls.E(ord.im_index(lpos, ph), ord.im_index(lpos, ps)) = r;
      }
    }
  }

  auto Ff = voltage_linearization(network, op, ord);
  ls.F = std::move(Ff.first);
  ls.f = std::move(Ff.second);

  ls.lu_c.compute(ls.C);
  ls.lu_d.compute(ls.D);
  const double cond_check_c = (ls.lu_c.reconstructedMatrix() - ls.C).cwiseAbs().maxCoeff();
  const double cond_check_d = (ls.lu_d.reconstructedMatrix() - ls.D).cwiseAbs().maxCoeff();
  if (!(cond_check_c < 1e-8) || !(cond_check_d < 1e-8))
    throw std::runtime_error("internal error: C or D factorization failed on a validated network");

  ls.meta = make_meta(network);
  return ls;
}

Eigen::VectorXd FeasibleRegion::vec_e_nominal() const {
  const int n = ambient_dim();
  Eigen::VectorXd out(n * n);
  for (int col = 0; col < n; ++col)
    for (int row = 0; row < n; ++row) out(col * n + row) = e_nominal(row, col);
  return out;
}

Eigen::MatrixXd FeasibleRegion::H_row(int i) const {
  const int n = ambient_dim();
  const Eigen::VectorXd a = fdinv.row(i).transpose();  // ([F]_i D^{-1})'
  Eigen::MatrixXd H(n * n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) H.row(j * n + k) = cinv.row(j) * a(k);
  return H;
}

Eigen::VectorXd FeasibleRegion::w_of(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1) const {
  return w_of(p1, q1, p2, q2);
}

Eigen::VectorXd FeasibleRegion::w_of(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1,
                                     const Eigen::VectorXd& p2v, const Eigen::VectorXd& q2v) const {
  Eigen::VectorXd w = -b;
  if (p1.size() > 0) w += A1 * p1;
  if (p2v.size() > 0) w += A2 * p2v;
  if (q1.size() > 0) w += B1 * q1;
  if (q2v.size() > 0) w += B2 * q2v;
  return w;
}

bool FeasibleRegion::contains(const Eigen::VectorXd& p1_kw, const Eigen::VectorXd& q1_kvar, double tol) const {
  const Eigen::VectorXd s = slack(w_of(p1_kw / meta.s_base_kva, q1_kvar / meta.s_base_kva));
  return (s.array() >= -tol).all();
}

void FeasibleRegion::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write FR export '" + path + "'");
  const int n = ambient_dim();
  out << "# feasible-region rows: t_i then H_i flattened column-major,"
      << " H_i is (" << n * n << " x " << n << ")\n";
  out << "row,t";
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n * n; ++r) out << ",h_" << r << "_" << c;
  out << "\n";
  out.precision(17);
  for (int i = 0; i < rows(); ++i) {
    const Eigen::MatrixXd H = H_row(i);
    out << i << "," << t(i);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n * n; ++r) out << "," << H(r, c);
    out << "\n";
  }
}

FeasibleRegion feasible_region(const LinearSystem& ls, const Eigen::VectorXd& p2_kw, const Eigen::VectorXd& q2_kvar) {
  if (p2_kw.size() != ls.A2.cols() || q2_kvar.size() != ls.B2.cols())
    throw ValidationError("passive injection vectors do not match the passive customer count");

  FeasibleRegion fr;
  fr.cinv = ls.lu_c.inverse();
  const Eigen::MatrixXd dinv = ls.lu_d.inverse();
  fr.fdinv = ls.F * dinv;
  fr.e_nominal = ls.E;
  fr.det_rows = fr.fdinv * ls.E * fr.cinv;
  fr.t = ls.f - fr.fdinv * ls.d;
  fr.p2 = p2_kw / ls.meta.s_base_kva;
  fr.q2 = q2_kvar / ls.meta.s_base_kva;
  fr.A1 = ls.A1;
  fr.A2 = ls.A2;
  fr.B1 = ls.B1;
  fr.B2 = ls.B2;
  fr.b = ls.b;
  fr.meta = ls.meta;
  return fr;
}

FeasibleRegion feasible_region(const LinearSystem& ls, const NetworkModel& network) {
  const auto passives = network.passive_customers();
  Eigen::VectorXd p2(passives.size()), q2(passives.size());
  for (int i = 0; i < int(passives.size()); ++i) {
    p2(i) = network.customers()[passives[i]].p_forecast_kw;
    q2(i) = network.customers()[passives[i]].q_forecast_kvar;
  }
  return feasible_region(ls, p2, q2);
}

namespace detail {

DecisionVars add_decision_vars(conic::Program& prog, const FeasibleRegion& fr, const SolveSettings& settings) {
  DecisionVars vars;
  const int n_act = int(fr.meta.active_ids.size());
  for (int i = 0; i < n_act; ++i) vars.p1.push_back(prog.add_var("p1[" + fr.meta.active_ids[i] + "]"));
  for (int i = 0; i < n_act; ++i) prog.add_box(vars.p1[i], fr.meta.p1_min(i), fr.meta.p1_max(i));
  if (settings.q1 == QMode::optimized) {
    for (int i = 0; i < n_act; ++i) vars.q1.push_back(prog.add_var("q1[" + fr.meta.active_ids[i] + "]"));
    for (int i = 0; i < n_act; ++i) prog.add_box(vars.q1[i], fr.meta.q1_min(i), fr.meta.q1_max(i));
  }
  if (settings.q2_controllable) {
    const int n_pas = int(fr.meta.passive_ids.size());
    for (int i = 0; i < n_pas; ++i) vars.q2.push_back(prog.add_var("q2[" + fr.meta.passive_ids[i] + "]"));
    for (int i = 0; i < n_pas; ++i) prog.add_box(vars.q2[i], fr.meta.q2_min(i), fr.meta.q2_max(i));
  }
  if (settings.allocation == AllocationPolicy::strictly_equal) {
    for (int i = 1; i < n_act; ++i) {
      conic::LinExpr eq = conic::LinExpr::variable(vars.p1[i]);
      eq.add_term(vars.p1[0], -1.0);
      prog.add_eq(std::move(eq), 0.0);
    }
  }
  return vars;
}

conic::LinExpr row_in_decisions(const Eigen::RowVectorXd& row, const FeasibleRegion& fr, const DecisionVars& vars,
                                const Eigen::VectorXd& p2_used, bool include_p2, bool include_q2) {
  conic::LinExpr e;
  const Eigen::RowVectorXd cp1 = row * fr.A1;
  for (size_t i = 0; i < vars.p1.size(); ++i) e.add_term(vars.p1[i], cp1(int(i)));
  if (!vars.q1.empty()) {
    const Eigen::RowVectorXd cq1 = row * fr.B1;
    for (size_t i = 0; i < vars.q1.size(); ++i) e.add_term(vars.q1[i], cq1(int(i)));
  }
  double constant = -row.dot(fr.b);
  if (include_p2 && p2_used.size() > 0) constant += row.dot(fr.A2 * p2_used);
  if (vars.q2.empty()) {
    if (include_q2 && fr.q2.size() > 0) constant += row.dot(fr.B2 * fr.q2);
  } else if (include_q2) {
    const Eigen::RowVectorXd cq2 = row * fr.B2;
    for (size_t i = 0; i < vars.q2.size(); ++i) e.add_term(vars.q2[i], cq2(int(i)));
  }
  e.constant() += constant;
  return e;
}

conic::LinExpr row_in_decisions(const Eigen::RowVectorXd& row, const FeasibleRegion& fr, const DecisionVars& vars) {
  return row_in_decisions(row, fr, vars, fr.p2, true, true);
}

void set_export_objective(conic::Program& prog, const DecisionVars& vars) {
  conic::LinExpr obj;
  for (int v : vars.p1) obj.add_term(v, -1.0);
  prog.set_objective(std::move(obj));
}

EnvelopeResult extract_result(const DecisionMeta& meta, const DecisionVars& vars, const conic::Report& rep,
                              double setup_seconds) {
  EnvelopeResult res;
  res.customer_ids = meta.active_ids;
  res.status = rep.status;
  res.message = rep.message;
  res.setup_seconds = setup_seconds;
  res.solve_seconds = rep.seconds;
  const double s_base = meta.s_base_kva;
  if (rep.status == conic::Status::optimal) {
    res.envelope_kw.resize(vars.p1.size());
    for (size_t i = 0; i < vars.p1.size(); ++i) res.envelope_kw(int(i)) = rep.x(vars.p1[i]) * s_base;
    res.q1_kvar = Eigen::VectorXd::Zero(vars.p1.size());
    for (size_t i = 0; i < vars.q1.size(); ++i) res.q1_kvar(int(i)) = rep.x(vars.q1[i]) * s_base;
    if (!vars.q2.empty()) {
      Eigen::VectorXd q2(vars.q2.size());
      for (size_t i = 0; i < vars.q2.size(); ++i) q2(int(i)) = rep.x(vars.q2[i]) * s_base;
      res.q2_kvar = q2;
    }
    res.objective_kw = res.envelope_kw.sum();
  }
  return res;
}

}  // namespace detail

EnvelopeResult solve_ddoe(const FeasibleRegion& fr, const SolveSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  conic::Program prog;
  const detail::DecisionVars vars = detail::add_decision_vars(prog, fr, settings);
  for (int i = 0; i < fr.rows(); ++i) {
    conic::LinExpr e = detail::row_in_decisions(fr.det_rows.row(i), fr, vars);
    prog.add_le(std::move(e), fr.t(i));
  }
  detail::set_export_objective(prog, vars);
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const conic::Report rep = conic::solve_with(settings.backend, prog, settings.solver);
  return detail::extract_result(fr.meta, vars, rep, setup);
}

TracedPolygon trace_fr_2d(const FeasibleRegion& fr, int active_a, int active_b, int n_directions,
                          const SolveSettings& settings) {
  TracedPolygon poly;
  if (fr.meta.active_ids.size() != 2) {
    poly.feasible = false;
    poly.diagnostic = "FR tracing requires exactly two active customers, got " +
                      std::to_string(fr.meta.active_ids.size());
    return poly;
  }

  /* The sweep explores the full 2-D slice, so no equal-allocation tie. */
  conic::Program prog_base;
  detail::DecisionVars sweep_vars;
  for (int i = 0; i < 2; ++i) sweep_vars.p1.push_back(prog_base.add_var("p1[" + fr.meta.active_ids[i] + "]"));
  for (int i = 0; i < 2; ++i) prog_base.add_box(sweep_vars.p1[i], fr.meta.p1_min(i), fr.meta.p1_max(i));
  if (settings.q1 == QMode::optimized) {
    for (int i = 0; i < 2; ++i) sweep_vars.q1.push_back(prog_base.add_var("q1[" + fr.meta.active_ids[i] + "]"));
    for (int i = 0; i < 2; ++i) prog_base.add_box(sweep_vars.q1[i], fr.meta.q1_min(i), fr.meta.q1_max(i));
  }
  if (settings.q2_controllable) {
    const int n_pas = int(fr.meta.passive_ids.size());
    for (int i = 0; i < n_pas; ++i) sweep_vars.q2.push_back(prog_base.add_var("q2[" + fr.meta.passive_ids[i] + "]"));
    for (int i = 0; i < n_pas; ++i) prog_base.add_box(sweep_vars.q2[i], fr.meta.q2_min(i), fr.meta.q2_max(i));
  }
  for (int i = 0; i < fr.rows(); ++i) {
    conic::LinExpr e = detail::row_in_decisions(fr.det_rows.row(i), fr, sweep_vars);
    prog_base.add_le(std::move(e), fr.t(i));
  }

  const double s_base = fr.meta.s_base_kva;
  for (int k = 0; k < n_directions; ++k) {
    const double theta = 2.0 * kPi * k / n_directions;
    conic::Program prog = prog_base;
    conic::LinExpr obj;
    obj.add_term(sweep_vars.p1[size_t(active_a)], std::cos(theta));
    obj.add_term(sweep_vars.p1[size_t(active_b)], std::sin(theta));
    prog.set_objective(std::move(obj));
    const conic::Report rep = conic::solve_with(settings.backend, prog, settings.solver);
    if (rep.status != conic::Status::optimal) {
      poly.feasible = false;
      poly.diagnostic = "direction " + std::to_string(k) + ": " + conic::to_string(rep.status) +
                        (rep.message.empty() ? "" : " (" + rep.message + ")");
      poly.angle_deg.clear();
      poly.points_kw.clear();
      return poly;
    }
    poly.angle_deg.push_back(theta * 180.0 / kPi);
    poly.points_kw.push_back(Eigen::Vector2d(rep.x(sweep_vars.p1[size_t(active_a)]) * s_base,
                                             rep.x(sweep_vars.p1[size_t(active_b)]) * s_base));
  }
  return poly;
}

void TracedPolygon::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write polygon export '" + path + "'");
  out << "angle_deg,p_a_kw,p_b_kw\n";
  out.precision(17);
  for (size_t i = 0; i < points_kw.size(); ++i)
    out << angle_deg[i] << "," << points_kw[i](0) << "," << points_kw[i](1) << "\n";
}

namespace {

Eigen::VectorXd state_voltages(const NetworkModel& network, const LinearSystem& ls, const Eigen::VectorXd& p_kw,
                               const Eigen::VectorXd& q_kvar) {
  if (p_kw.size() != int(network.customers().size()) || q_kvar.size() != int(network.customers().size()))
    throw ValidationError("injection vectors must cover every customer");
  const double s_base = network.base().s_kva;
  const auto actives = network.active_customers();
  const auto passives = network.passive_customers();
  Eigen::VectorXd p1(actives.size()), q1(actives.size()), p2(passives.size()), q2(passives.size());
  for (int i = 0; i < int(actives.size()); ++i) {
    p1(i) = p_kw(actives[i]) / s_base;
    q1(i) = q_kvar(actives[i]) / s_base;
  }
  for (int i = 0; i < int(passives.size()); ++i) {
    p2(i) = p_kw(passives[i]) / s_base;
    q2(i) = q_kvar(passives[i]) / s_base;
  }
  Eigen::VectorXd u = -ls.b;
  if (p1.size() > 0) u += ls.A1 * p1 + ls.B1 * q1;
  if (p2.size() > 0) u += ls.A2 * p2 + ls.B2 * q2;
  // l = C^{-1}(b - Ap - Bq), v = D^{-1}(d - E l)
  const Eigen::VectorXd l = ls.lu_c.solve(-u);
  return ls.lu_d.solve(ls.d - ls.E * l);
}

}  // namespace

Eigen::MatrixXcd linear_pf_voltages(const NetworkModel& network, const LinearSystem& ls, const Eigen::VectorXd& p_kw,
                                    const Eigen::VectorXd& q_kvar) {
  const Eigen::VectorXd v = state_voltages(network, ls, p_kw, q_kvar);
  const SystemOrdering& ord = ls.ordering;
  Eigen::MatrixXcd out(network.buses().size(), 3);
  for (int p = 0; p < 3; ++p) out(network.reference_index(), p) = network.v_ref()[p];
  for (int pos = 0; pos < ord.n_nonref; ++pos)
    for (int p = 0; p < 3; ++p)
      out(ord.nonref_buses[pos], p) = Complex(v(ord.re_index(pos, p)), v(ord.im_index(pos, p)));
  return out;
}

OperatingPoint refine_operating_point(const NetworkModel& network, const LinearSystem& ls,
                                      const Eigen::VectorXd& p_kw, const Eigen::VectorXd& q_kvar) {
  OperatingPoint next;
  next.v = linear_pf_voltages(network, ls, p_kw, q_kvar);
  next.validate(network);
  return next;
}

}  // namespace rdoe
