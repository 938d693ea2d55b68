#include "rdoe/robustrc.hpp"

#include <chrono>
#include <cmath>

namespace rdoe {

RcMode rc_mode_from_string(const std::string& s) {
  if (s == "impedance") return RcMode::impedance_only;
  if (s == "demand") return RcMode::demand_only;
  if (s == "bilinear") return RcMode::bilinear;
  throw std::invalid_argument("unknown robust mode '" + s + "' (expected impedance, demand or bilinear)");
}

std::string to_string(RcMode mode) {
  switch (mode) {
    case RcMode::impedance_only: return "impedance";
    case RcMode::demand_only: return "demand";
    case RcMode::bilinear: return "bilinear";
  }
  return "?";
}

namespace {

using detail::DecisionVars;
using detail::row_in_decisions;

/// Row data of one E-ball: center'H_i as full row matrix, and per latent
/// dimension s the rows (a_i' J_s) C^{-1} so that J' h_i stays affine in
/// the decisions.
struct EBallRows {
  Eigen::MatrixXd center_rows;              // fr.rows() x n
  std::vector<Eigen::MatrixXd> latent_rows; // [s] -> fr.rows() x n
};

EBallRows precompute_ball_rows(const FeasibleRegion& fr, const AffineNormBall& ball) {
  const int n = fr.ambient_dim();
  if (ball.ambient_dim() != n * n)
    throw ValidationError("impedance ball ambient dimension does not match vec(E)");
  EBallRows out;
  if (ball.center.isApprox(fr.vec_e_nominal(), 0.0)) {
    out.center_rows = fr.det_rows;  // bitwise-identical deterministic rows
  } else {
    Eigen::MatrixXd center_mat(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) center_mat(r, c) = ball.center(c * n + r);
    out.center_rows = fr.fdinv * center_mat * fr.cinv;
  }
  out.latent_rows.reserve(ball.latent_dim());
  for (int s = 0; s < ball.latent_dim(); ++s) {
    Eigen::MatrixXd Js(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) Js(r, c) = ball.map(c * n + r, s);
    out.latent_rows.push_back(fr.fdinv * Js * fr.cinv);
  }
  return out;
}

/// Emits the robust rows protecting one FR row against the E set, with the
/// passive active-power vector fixed at p2_used. Handles the single-ball
/// closed form and the two-ball split.
void emit_impedance_block(conic::Program& prog, const FeasibleRegion& fr, const DecisionVars& vars,
                          const ComponentSet& eset, const std::vector<EBallRows>& rows_by_ball,
                          const Eigen::VectorXd& p2_used, int i, const std::string& tag,
                          std::vector<int>* tau1_out, std::vector<int>* tau2_out) {
  const bool two_balls = eset.ball1.has_value() && eset.ball2.has_value();
  if (!two_balls) {
    const AffineNormBall& ball = eset.any_ball();
    const EBallRows& rows = rows_by_ball[0];
    conic::LinExpr base = row_in_decisions(rows.center_rows.row(i), fr, vars, p2_used, true);
    if (ball.radius == 0.0) {
      prog.add_le(std::move(base), fr.t(i));
      return;
    }
    std::vector<conic::LinExpr> args;
    args.reserve(rows.latent_rows.size());
    for (const Eigen::MatrixXd& lr : rows.latent_rows)
      args.push_back(row_in_decisions(lr.row(i), fr, vars, p2_used, true));
    const int u = prog.add_var(tag + "_u");
    prog.add_norm_epigraph(conic::dual_norm(ball.norm), args, conic::LinExpr::variable(u));
    base.add_term(u, ball.radius);
    prog.add_le(std::move(base), fr.t(i));
    return;
  }

  /* Two balls: free split duals with sum t1 + t2 = h_i, one epigraph per
   * ball on J_j' t_j, and the supporting row
   *   e1' t1 + e2' t2 + g1 u1 + g2 u2 <= t_i. */
  const AffineNormBall& b1 = *eset.ball1;
  const AffineNormBall& b2 = *eset.ball2;
  const int n = fr.ambient_dim();
  const int N = n * n;
  const std::vector<int> t1 = prog.add_vars(tag + "_t1", N);
  const std::vector<int> t2 = prog.add_vars(tag + "_t2", N);
  if (tau1_out) *tau1_out = t1;
  if (tau2_out) *tau2_out = t2;

  const Eigen::VectorXd a = fr.fdinv.row(i).transpose();
  for (int j = 0; j < n; ++j) {
    const Eigen::RowVectorXd cj = fr.cinv.row(j);
    for (int k = 0; k < n; ++k) {
      // h_i[(j,k)] = a(k) * cinv.row(j) * w
      conic::LinExpr h = row_in_decisions(a(k) * cj, fr, vars, p2_used, true);
      h.add_term(t1[j * n + k], -1.0);
      h.add_term(t2[j * n + k], -1.0);
      prog.add_eq(std::move(h), 0.0);
    }
  }

  conic::LinExpr lhs;
  for (int v = 0; v < N; ++v) {
    if (b1.center(v) != 0.0) lhs.add_term(t1[v], b1.center(v));
    if (b2.center(v) != 0.0) lhs.add_term(t2[v], b2.center(v));
  }
  auto add_ball_norm = [&](const AffineNormBall& ball, const std::vector<int>& tv, const char* suffix) {
    if (ball.radius == 0.0) return;
    std::vector<conic::LinExpr> args;
    for (int s = 0; s < ball.latent_dim(); ++s) {
      conic::LinExpr e;
      for (int v = 0; v < int(ball.map.rows()); ++v)
        if (ball.map(v, s) != 0.0) e.add_term(tv[v], ball.map(v, s));
      args.push_back(std::move(e));
    }
    const int u = prog.add_var(tag + suffix);
    prog.add_norm_epigraph(conic::dual_norm(ball.norm), args, conic::LinExpr::variable(u));
    lhs.add_term(u, ball.radius);
  };
  add_ball_norm(b1, t1, "_u1");
  add_ball_norm(b2, t2, "_u2");
  prog.add_le(std::move(lhs), fr.t(i));
}

/// Support terms of one demand component applied to the row constant g_i;
/// returns the expression to add to the constraint's left side.
conic::LinExpr emit_demand_support(conic::Program& prog, const ComponentSet& set, const Eigen::VectorXd& g,
                                   const std::string& tag) {
  conic::LinExpr lhs;
  const bool two_balls = set.ball1.has_value() && set.ball2.has_value();
  if (!two_balls) {
    const AffineNormBall& ball = set.any_ball();
    lhs.constant() += ball.center.dot(g);
    if (ball.radius > 0.0)
      lhs.constant() += ball.radius * conic::norm_value(conic::dual_norm(ball.norm), ball.map.transpose() * g);
    return lhs;
  }
  const AffineNormBall& b1 = *set.ball1;
  const AffineNormBall& b2 = *set.ball2;
  const int nd = int(g.size());
  const std::vector<int> f1 = prog.add_vars(tag + "_f1", nd);
  const std::vector<int> f2 = prog.add_vars(tag + "_f2", nd);
  for (int v = 0; v < nd; ++v) {
    conic::LinExpr split = conic::LinExpr::variable(f1[v]);
    split.add_term(f2[v], 1.0);
    prog.add_eq(std::move(split), g(v));
  }
  for (int v = 0; v < nd; ++v) {
    if (b1.center(v) != 0.0) lhs.add_term(f1[v], b1.center(v));
    if (b2.center(v) != 0.0) lhs.add_term(f2[v], b2.center(v));
  }
  auto add_ball_norm = [&](const AffineNormBall& ball, const std::vector<int>& fv, const char* suffix) {
    if (ball.radius == 0.0) return;
    std::vector<conic::LinExpr> args;
    for (int s = 0; s < ball.latent_dim(); ++s) {
      conic::LinExpr e;
      for (int v = 0; v < int(ball.map.rows()); ++v)
        if (ball.map(v, s) != 0.0) e.add_term(fv[v], ball.map(v, s));
      args.push_back(std::move(e));
    }
    const int u = prog.add_var(tag + suffix);
    prog.add_norm_epigraph(conic::dual_norm(ball.norm), args, conic::LinExpr::variable(u));
    lhs.add_term(u, ball.radius);
  };
  add_ball_norm(b1, f1, "_u1");
  add_ball_norm(b2, f2, "_u2");
  return lhs;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void emit_impedance_rows(RobustProblem& rp, const FeasibleRegion& fr, const UncertaintyModel& model) {
  if (!model.e.present()) throw ValidationError("impedance robust counterpart needs an E uncertainty set");
  model.e.validate();
  const bool two = model.e.ball1.has_value() && model.e.ball2.has_value();
  std::vector<EBallRows> rows_by_ball;
  if (!two) rows_by_ball.push_back(precompute_ball_rows(fr, model.e.any_ball()));
  if (two) {
    rp.tau1.resize(fr.rows());
    rp.tau2.resize(fr.rows());
  }
  for (int i = 0; i < fr.rows(); ++i) {
    emit_impedance_block(rp.program, fr, rp.vars, model.e, rows_by_ball, fr.p2, i, "_rc" + std::to_string(i),
                         two ? &rp.tau1[i] : nullptr, two ? &rp.tau2[i] : nullptr);
    ++rp.rc_blocks;
  }
}

void emit_demand_rows(RobustProblem& rp, const FeasibleRegion& fr, const UncertaintyModel& model) {
  const bool p2u = model.p2.present();
  const bool q2u = model.q2.present();
  if (!p2u && !q2u) throw ValidationError("demand robust counterpart needs a p2 and/or q2 uncertainty set");
  if (p2u) model.p2.validate();
  if (q2u) model.q2.validate();
  if (q2u && !rp.vars.q2.empty()) throw ValidationError("q2 cannot be both uncertain and controllable");

  const Eigen::MatrixXd Gp2 = fr.det_rows * fr.A2;
  const Eigen::MatrixXd Gq2 = fr.det_rows * fr.B2;

  // A zero-radius single ball is the deterministic row with the forecast
  // replaced by the ball's center; folding it through the deterministic
  // path keeps the reduction exact.
  const bool p2_fold = p2u && !(model.p2.ball1 && model.p2.ball2) && model.p2.any_ball().radius == 0.0;

  for (int i = 0; i < fr.rows(); ++i) {
    const Eigen::RowVectorXd det_row = fr.det_rows.row(i);
    const Eigen::VectorXd p2_used = p2_fold ? model.p2.any_ball().center : fr.p2;
    const bool include_p2 = !p2u || p2_fold;
    conic::LinExpr expr = row_in_decisions(det_row, fr, rp.vars, p2_used, include_p2, !q2u);
    if (p2u && !p2_fold)
      expr += emit_demand_support(rp.program, model.p2, Gp2.row(i).transpose(), "_rcp" + std::to_string(i));
    if (q2u) expr += emit_demand_support(rp.program, model.q2, Gq2.row(i).transpose(), "_rcq" + std::to_string(i));
    rp.program.add_le(std::move(expr), fr.t(i));
    ++rp.rc_blocks;
  }
}

void emit_bilinear_rows(RobustProblem& rp, const FeasibleRegion& fr, const UncertaintyModel& model) {
  if (!model.e.present()) throw ValidationError("bilinear robust counterpart needs an E uncertainty set");
  if (!model.p2.present()) throw ValidationError("bilinear robust counterpart needs a p2 uncertainty set");
  model.e.validate();

  const ComponentSet& dset = model.p2;
  if (!dset.ball1 || !dset.ball2 || !dset.shared_latent)
    throw ValidationError("bilinear mode needs the shared-latent LInf/L1 demand set");
  const int n_latent = dset.ball1->latent_dim();
  if (n_latent > 64)
    throw ValidationError("bilinear mode supports at most 64 latent demand dimensions (got " +
                          std::to_string(n_latent) + "); the 2n-vertex expansion would dominate the build");

  const bool two = model.e.ball1.has_value() && model.e.ball2.has_value();
  std::vector<EBallRows> rows_by_ball;
  if (!two) rows_by_ball.push_back(precompute_ball_rows(fr, model.e.any_ball()));

  std::vector<Eigen::VectorXd> realizations;
  if (dset.ball1->radius == 0.0) {
    realizations.push_back(dset.ball1->center);  // vertex set collapses to the center
  } else {
    for (const Eigen::VectorXd& y : vertices(dset, 1))
      realizations.push_back(dset.ball1->center + dset.ball1->map * y);
  }

  for (int i = 0; i < fr.rows(); ++i) {
    for (size_t k = 0; k < realizations.size(); ++k) {
      std::vector<int> t1, t2;
      emit_impedance_block(rp.program, fr, rp.vars, model.e, rows_by_ball, realizations[k], i,
                           "_rc" + std::to_string(i) + "v" + std::to_string(k), two ? &t1 : nullptr,
                           two ? &t2 : nullptr);
      if (two) {
        rp.tau1.push_back(std::move(t1));
        rp.tau2.push_back(std::move(t2));
      }
      ++rp.rc_blocks;
    }
  }
}

void emit_robust_rows(RobustProblem& rp, const FeasibleRegion& fr, const UncertaintyModel& model, RcMode mode) {
  switch (mode) {
    case RcMode::impedance_only: emit_impedance_rows(rp, fr, model); break;
    case RcMode::demand_only: emit_demand_rows(rp, fr, model); break;
    case RcMode::bilinear: emit_bilinear_rows(rp, fr, model); break;
  }
}

}  // namespace

RobustProblem build_rc_impedance(const FeasibleRegion& fr, const UncertaintyModel& model,
                                 const SolveSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  RobustProblem rp;
  rp.mode = RcMode::impedance_only;
  rp.meta = fr.meta;
  rp.fr_rows = fr.rows();
  rp.vars = detail::add_decision_vars(rp.program, fr, settings);
  emit_impedance_rows(rp, fr, model);
  detail::set_export_objective(rp.program, rp.vars);
  rp.build_seconds = seconds_since(t0);
  return rp;
}

RobustProblem build_rc_demand(const FeasibleRegion& fr, const UncertaintyModel& model,
                              const SolveSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  RobustProblem rp;
  rp.mode = RcMode::demand_only;
  rp.meta = fr.meta;
  rp.fr_rows = fr.rows();
  rp.vars = detail::add_decision_vars(rp.program, fr, settings);
  emit_demand_rows(rp, fr, model);
  detail::set_export_objective(rp.program, rp.vars);
  rp.build_seconds = seconds_since(t0);
  return rp;
}

RobustProblem build_rc_bilinear(const FeasibleRegion& fr, const UncertaintyModel& model,
                                const SolveSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  RobustProblem rp;
  rp.mode = RcMode::bilinear;
  rp.meta = fr.meta;
  rp.fr_rows = fr.rows();
  rp.vars = detail::add_decision_vars(rp.program, fr, settings);
  emit_bilinear_rows(rp, fr, model);
  detail::set_export_objective(rp.program, rp.vars);
  rp.build_seconds = seconds_since(t0);
  return rp;
}

EnvelopeResult solve_rdoe(const RobustProblem& problem, const SolveSettings& settings) {
  const conic::Report rep = conic::solve_with(settings.backend, problem.program, settings.solver);
  return detail::extract_result(problem.meta, problem.vars, rep, problem.build_seconds);
}

EnvelopeResult solve_rdoe(const FeasibleRegion& fr, const UncertaintyModel& model, RcMode mode,
                          const SolveSettings& settings) {
  RobustProblem problem;
  switch (mode) {
    case RcMode::impedance_only: problem = build_rc_impedance(fr, model, settings); break;
    case RcMode::demand_only: problem = build_rc_demand(fr, model, settings); break;
    case RcMode::bilinear: problem = build_rc_bilinear(fr, model, settings); break;
  }
  return solve_rdoe(problem, settings);
}

TracedPolygon trace_rfr_2d(const FeasibleRegion& fr, const UncertaintyModel& model, RcMode mode,
                           int n_directions, const SolveSettings& settings) {
  TracedPolygon poly;
  if (fr.meta.active_ids.size() != 2) {
    poly.feasible = false;
    poly.diagnostic = "RFR tracing requires exactly two active customers, got " +
                      std::to_string(fr.meta.active_ids.size());
    return poly;
  }
  /* Build once without the equal-allocation tie (the sweep explores the
   * full slice), then swap objectives per direction. */
  RobustProblem base;
  base.mode = mode;
  base.meta = fr.meta;
  for (int i = 0; i < 2; ++i) base.vars.p1.push_back(base.program.add_var("p1[" + fr.meta.active_ids[i] + "]"));
  for (int i = 0; i < 2; ++i) base.program.add_box(base.vars.p1[i], fr.meta.p1_min(i), fr.meta.p1_max(i));
  if (settings.q1 == QMode::optimized) {
    for (int i = 0; i < 2; ++i) base.vars.q1.push_back(base.program.add_var("q1[" + fr.meta.active_ids[i] + "]"));
    for (int i = 0; i < 2; ++i) base.program.add_box(base.vars.q1[i], fr.meta.q1_min(i), fr.meta.q1_max(i));
  }
  if (settings.q2_controllable) {
    const int n_pas = int(fr.meta.passive_ids.size());
    for (int i = 0; i < n_pas; ++i)
      base.vars.q2.push_back(base.program.add_var("q2[" + fr.meta.passive_ids[i] + "]"));
    for (int i = 0; i < n_pas; ++i) base.program.add_box(base.vars.q2[i], fr.meta.q2_min(i), fr.meta.q2_max(i));
  }
  emit_robust_rows(base, fr, model, mode);

  constexpr double kPi = 3.14159265358979323846;
  const double s_base = fr.meta.s_base_kva;
  for (int k = 0; k < n_directions; ++k) {
    const double theta = 2.0 * kPi * k / n_directions;
    conic::Program prog = base.program;
    conic::LinExpr obj;
    obj.add_term(base.vars.p1[0], std::cos(theta));
    obj.add_term(base.vars.p1[1], std::sin(theta));
    prog.set_objective(std::move(obj));
    const conic::Report rep = conic::solve_with(settings.backend, prog, settings.solver);
    if (rep.status != conic::Status::optimal) {
      poly.feasible = false;
      poly.diagnostic = "direction " + std::to_string(k) + ": " + conic::to_string(rep.status);
      poly.angle_deg.clear();
      poly.points_kw.clear();
      return poly;
    }
    poly.angle_deg.push_back(theta * 180.0 / kPi);
    poly.points_kw.push_back(
        Eigen::Vector2d(rep.x(base.vars.p1[0]) * s_base, rep.x(base.vars.p1[1]) * s_base));
  }
  return poly;
}

}  // namespace rdoe
