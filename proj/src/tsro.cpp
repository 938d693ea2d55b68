#include "rdoe/tsro.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace rdoe {

namespace {

void validate_box_set(const ComponentSet& e_set) {
  if (!e_set.ball1.has_value())
    throw ValidationError("the cutting-plane baseline needs an LInf (box) E uncertainty set");
  if (e_set.ball1->norm != NormKind::LInf)
    throw ValidationError("the cutting-plane baseline supports only the LInf box E set");
  if (e_set.ball2.has_value())
    throw ValidationError("the cutting-plane baseline supports only a single (box) E ball");
  if (e_set.ball1->latent_dim() > 16)
    throw ValidationError("subproblem vertex enumeration supports at most 16 uncertain entries (got " +
                          std::to_string(e_set.ball1->latent_dim()) + ")");
}

Eigen::MatrixXd reshape_vec(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd m(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) m(r, c) = v(c * n + r);
  return m;
}

}  // namespace

TsroMasterResult tsro_master(const ScenarioSet& scenarios, const LinearSystem& ls, const FeasibleRegion& fr,
                             const SolveSettings& settings) {
  if (scenarios.e_matrices.empty()) throw ValidationError("scenario set must contain at least the nominal E");
  const int n = fr.ambient_dim();

  conic::Program prog;
  const detail::DecisionVars vars = detail::add_decision_vars(prog, fr, settings);

  Eigen::VectorXd kcl_rhs = fr.b;
  if (fr.p2.size() > 0) kcl_rhs -= fr.A2 * fr.p2;
  if (vars.q2.empty() && fr.q2.size() > 0) kcl_rhs -= fr.B2 * fr.q2;

  for (size_t sc = 0; sc < scenarios.e_matrices.size(); ++sc) {
    const Eigen::MatrixXd& E = scenarios.e_matrices[sc];
    const std::string tag = "_s" + std::to_string(sc);
    const std::vector<int> v = prog.add_vars(tag + "_v", n);
    const std::vector<int> l = prog.add_vars(tag + "_l", n);

    for (int r = 0; r < n; ++r) {
      conic::LinExpr kcl;
      for (size_t j = 0; j < vars.p1.size(); ++j)
        if (fr.A1(r, int(j)) != 0.0) kcl.add_term(vars.p1[j], fr.A1(r, int(j)));
      for (size_t j = 0; j < vars.q1.size(); ++j)
        if (fr.B1(r, int(j)) != 0.0) kcl.add_term(vars.q1[j], fr.B1(r, int(j)));
      for (size_t j = 0; j < vars.q2.size(); ++j)
        if (fr.B2(r, int(j)) != 0.0) kcl.add_term(vars.q2[j], fr.B2(r, int(j)));
      for (int j = 0; j < n; ++j)
        if (ls.C(r, j) != 0.0) kcl.add_term(l[j], ls.C(r, j));
      prog.add_eq(std::move(kcl), kcl_rhs(r));

      conic::LinExpr volt;
      for (int j = 0; j < n; ++j) {
        if (ls.D(r, j) != 0.0) volt.add_term(v[j], ls.D(r, j));
        if (E(r, j) != 0.0) volt.add_term(l[j], E(r, j));
      }
      prog.add_eq(std::move(volt), ls.d(r));
    }
    for (int r = 0; r < int(ls.F.rows()); ++r) {
      conic::LinExpr lim;
      for (int j = 0; j < n; ++j)
        if (ls.F(r, j) != 0.0) lim.add_term(v[j], ls.F(r, j));
      prog.add_le(std::move(lim), ls.f(r));
    }
  }
  detail::set_export_objective(prog, vars);

  const conic::Report rep = conic::solve_with(settings.backend, prog, settings.solver);
  TsroMasterResult res;
  res.status = rep.status;
  if (rep.status == conic::Status::optimal) {
    res.p1.resize(vars.p1.size());
    for (size_t i = 0; i < vars.p1.size(); ++i) res.p1(int(i)) = rep.x(vars.p1[i]);
    res.q1 = Eigen::VectorXd::Zero(vars.p1.size());
    for (size_t i = 0; i < vars.q1.size(); ++i) res.q1(int(i)) = rep.x(vars.q1[i]);
    res.objective_kw = res.p1.sum() * fr.meta.s_base_kva;
  }
  return res;
}

TsroSubResult tsro_subproblem(const Eigen::VectorXd& p1, const Eigen::VectorXd& q1, const LinearSystem& ls,
                              const FeasibleRegion& fr, const ComponentSet& e_set) {
  validate_box_set(e_set);
  const AffineNormBall& ball = *e_set.ball1;
  const int n = fr.ambient_dim();
  const int nlat = ball.latent_dim();

  /* The currents are pinned by the invertible C regardless of E; the
   * voltage block then determines v per realization, so the slack
   * maximization reduces to the voltage-limit violation at each vertex. */
  const Eigen::VectorXd w = fr.w_of(p1, q1);
  const Eigen::VectorXd l = ls.lu_c.solve(-w);

  TsroSubResult best;
  best.violation = -1.0;
  const std::uint64_t count = std::uint64_t(1) << nlat;
  Eigen::VectorXd x(nlat);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int s = 0; s < nlat; ++s) x(s) = (mask >> s) & 1 ? ball.radius : -ball.radius;
    const Eigen::MatrixXd E = reshape_vec(ball.center + ball.map * x, n);
    const Eigen::VectorXd v = ls.lu_d.solve(ls.d - E * l);
    const double violation = (ls.F * v - ls.f).cwiseMax(0.0).sum();
    if (violation > best.violation) {
      best.violation = violation;
      best.e_worst = E;
      best.latent_worst = x;
    }
  }
  return best;
}

std::pair<EnvelopeResult, TsroTrace> tsro_solve(const LinearSystem& ls, const FeasibleRegion& fr,
                                                const UncertaintyModel& model, const TsroOptions& options) {
  validate_box_set(model.e);
  const auto t0 = std::chrono::steady_clock::now();

  ScenarioSet scenarios;
  scenarios.e_matrices.push_back(reshape_vec(model.e.ball1->center, fr.ambient_dim()));

  TsroTrace trace;
  EnvelopeResult result;
  result.customer_ids = fr.meta.active_ids;

  for (int round = 1; round <= options.max_rounds; ++round) {
    const TsroMasterResult master = tsro_master(scenarios, ls, fr, options.settings);
    if (master.status != conic::Status::optimal) {
      trace.termination = master.status == conic::Status::infeasible ? "infeasible" : "solver-failure";
      result.status = master.status;
      result.message = "master problem " + conic::to_string(master.status) + " in round " + std::to_string(round);
      result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return {result, trace};
    }

    const TsroSubResult sub = tsro_subproblem(master.p1, master.q1, ls, fr, model.e);
    TsroRound row;
    row.round = round;
    row.master_objective_kw = master.objective_kw;
    row.violation = sub.violation;

    result.envelope_kw = master.p1 * fr.meta.s_base_kva;
    result.q1_kvar = master.q1 * fr.meta.s_base_kva;
    result.objective_kw = master.objective_kw;
    result.status = conic::Status::optimal;

    if (sub.violation <= options.tol) {
      trace.rounds.push_back(row);
      trace.termination = "converged";
      result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return {result, trace};
    }
    scenarios.e_matrices.push_back(sub.e_worst);
    row.added_scenario = int(scenarios.e_matrices.size()) - 1;
    trace.rounds.push_back(row);
  }
  trace.termination = "max-rounds";
  result.message = "cutting-plane loop did not certify robustness within " + std::to_string(options.max_rounds) +
                   " rounds";
  result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {result, trace};
}

std::pair<EnvelopeResult, TsroTrace> tsro_solve(const NetworkModel& network, const UncertaintyModel& model,
                                                const TsroOptions& options) {
  const LinearSystem ls = assemble(network, OperatingPoint::flat(network));
  const FeasibleRegion fr = feasible_region(ls, network);
  return tsro_solve(ls, fr, model, options);
}

void TsroTrace::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
  out << "round,master_objective_kw,violation,scenario_id\n";
  out.precision(17);
  for (const TsroRound& r : rounds)
    out << r.round << "," << r.master_objective_kw << "," << r.violation << "," << r.added_scenario << "\n";
  out << "# termination," << termination << "\n";
}

}  // namespace rdoe
