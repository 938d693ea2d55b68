#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rdoe/robustrc.hpp"
#include "rdoe/tsro.hpp"
#include "support/oracles.hpp"

using namespace rdoe;

namespace {

const std::string kTwoBus = std::string(RDOE_DATA_DIR) + "/twobus.json";

struct Fixture {
  NetworkModel net = load_network(kTwoBus);
  LinearSystem ls = assemble(net, OperatingPoint::flat(net));
  FeasibleRegion fr = feasible_region(ls, net);

  UncertaintyModel box_model(double gamma) const {
    UncertaintyModel m;
    m.e = make_impedance_set(ls, {EntrySelection{}}, gamma);
    return m;
  }
  Eigen::MatrixXd nominal_E() const { return ls.E; }
};

}  // namespace

TEST_CASE("master with the nominal scenario equals the deterministic solve") {
  const Fixture f;
  ScenarioSet scenarios;
  scenarios.e_matrices.push_back(f.nominal_E());
  const TsroMasterResult master = tsro_master(scenarios, f.ls, f.fr, SolveSettings{});
  REQUIRE(master.status == conic::Status::optimal);
  const EnvelopeResult det = solve_ddoe(f.fr, SolveSettings{});
  REQUIRE(det.status == conic::Status::optimal);
  CHECK(master.objective_kw == doctest::Approx(det.objective_kw).epsilon(1e-6));

  SUBCASE("duplicating the scenario changes nothing") {
    ScenarioSet twice = scenarios;
    twice.e_matrices.push_back(f.nominal_E());
    const TsroMasterResult again = tsro_master(twice, f.ls, f.fr, SolveSettings{});
    REQUIRE(again.status == conic::Status::optimal);
    CHECK(again.objective_kw == doctest::Approx(master.objective_kw).epsilon(1e-7));
  }
}

TEST_CASE("subproblem evaluates the worst box vertex") {
  const Fixture f;
  const UncertaintyModel model = f.box_model(0.10);
  const EnvelopeResult det = solve_ddoe(f.fr, SolveSettings{});
  REQUIRE(det.status == conic::Status::optimal);
  const double s = f.fr.meta.s_base_kva;
  const Eigen::VectorXd p1 = det.envelope_kw / s;
  const Eigen::VectorXd q1 = det.q1_kvar / s;

  SUBCASE("zero radius reports no violation at the nominal") {
    const TsroSubResult sub = tsro_subproblem(p1, q1, f.ls, f.fr, f.box_model(0.0).e);
    CHECK(sub.violation <= 1e-9);
    CHECK((sub.e_worst - f.nominal_E()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("unprotected deterministic point is strictly violated") {
    const TsroSubResult sub = tsro_subproblem(p1, q1, f.ls, f.fr, model.e);
    CHECK(sub.violation > 1e-6);
    // The violating realization lies in the box.
    CHECK(sub.latent_worst.lpNorm<Eigen::Infinity>() <= 0.10 + 1e-12);
  }
  SUBCASE("closed-form robust point passes the subproblem") {
    const EnvelopeResult rob = solve_rdoe(f.fr, model, RcMode::impedance_only, SolveSettings{});
    REQUIRE(rob.status == conic::Status::optimal);
    const TsroSubResult sub =
        tsro_subproblem(rob.envelope_kw / s, rob.q1_kvar / s, f.ls, f.fr, model.e);
    CHECK(sub.violation <= 1e-7);
  }
}

TEST_CASE("subproblem closed form equals the slack-restoration LP") {
  // Per vertex, the minimal slack restoration: the equalities pin l and v,
  // so the optimal slack equals the voltage-limit violation.
  const Fixture f;
  const UncertaintyModel model = f.box_model(0.10);
  const EnvelopeResult det = solve_ddoe(f.fr, SolveSettings{});
  REQUIRE(det.status == conic::Status::optimal);
  const double s = f.fr.meta.s_base_kva;
  const Eigen::VectorXd p1 = det.envelope_kw / s;
  const Eigen::VectorXd q1 = Eigen::VectorXd::Zero(2);
  const TsroSubResult sub = tsro_subproblem(p1, q1, f.ls, f.fr, model.e);

  const int n = f.fr.ambient_dim();
  conic::Program prog;
  std::vector<int> v = prog.add_vars("v", n);
  std::vector<int> l = prog.add_vars("l", n);
  std::vector<int> u = prog.add_vars("u", n);
  for (int j = 0; j < n; ++j) {
    // u >= 0 via box below; t/s slacks are not needed because the
    // equalities are imposed exactly here.
    prog.add_ge(conic::LinExpr::variable(u[j]), 0.0);
  }
  Eigen::VectorXd kcl_rhs = f.fr.b - f.fr.A1 * p1 - f.fr.B1 * q1 - f.fr.A2 * f.fr.p2 - f.fr.B2 * f.fr.q2;
  for (int r = 0; r < n; ++r) {
    conic::LinExpr kcl;
    for (int j = 0; j < n; ++j)
      if (f.ls.C(r, j) != 0.0) kcl.add_term(l[j], f.ls.C(r, j));
    prog.add_eq(std::move(kcl), kcl_rhs(r));
    conic::LinExpr volt;
    for (int j = 0; j < n; ++j) {
      if (f.ls.D(r, j) != 0.0) volt.add_term(v[j], f.ls.D(r, j));
      if (sub.e_worst(r, j) != 0.0) volt.add_term(l[j], sub.e_worst(r, j));
    }
    prog.add_eq(std::move(volt), f.ls.d(r));
  }
  conic::LinExpr total;
  for (int r = 0; r < int(f.ls.F.rows()); ++r) {
    conic::LinExpr lim;
    for (int j = 0; j < n; ++j)
      if (f.ls.F(r, j) != 0.0) lim.add_term(v[j], f.ls.F(r, j));
    lim.add_term(u[r], -1.0);
    prog.add_le(std::move(lim), f.ls.f(r));
    total.add_term(u[r], 1.0);
  }
  total *= -1.0;
  prog.set_objective(std::move(total));  // maximize -> minimize total slack
  const conic::Report rep = conic::solve(prog);
  REQUIRE(rep.status == conic::Status::optimal);
  CHECK(-rep.objective == doctest::Approx(sub.violation).epsilon(1e-6));
}

TEST_CASE("cutting-plane loop converges to the closed-form counterpart") {
  const Fixture f;
  for (const double gamma : {0.025, 0.05}) {
    const UncertaintyModel model = f.box_model(gamma);
    TsroOptions options;
    const auto [res, trace] = tsro_solve(f.ls, f.fr, model, options);
    REQUIRE(res.status == conic::Status::optimal);
    CHECK(trace.termination == "converged");
    CHECK(trace.rounds.size() <= 10);

    const EnvelopeResult rc = solve_rdoe(f.fr, model, RcMode::impedance_only, SolveSettings{});
    REQUIRE(rc.status == conic::Status::optimal);
    CHECK(std::abs(res.objective_kw - rc.objective_kw) <= 1e-4 * std::abs(rc.objective_kw));

    // The export headroom shrinks monotonically as scenarios accumulate.
    double prev = 1e100;
    for (const TsroRound& r : trace.rounds) {
      CHECK(-r.master_objective_kw <= prev + 1e-9);
      prev = -r.master_objective_kw;
      CHECK(r.violation >= 0.0);
    }
    CHECK(trace.rounds.back().violation <= options.tol);
  }
}

TEST_CASE("cutting-plane loop with optimized reactive power") {
  const Fixture f;
  TsroOptions options;
  options.settings.q1 = QMode::optimized;
  const UncertaintyModel model = f.box_model(0.05);
  const auto [res, trace] = tsro_solve(f.ls, f.fr, model, options);
  REQUIRE(res.status == conic::Status::optimal);
  CHECK(trace.termination == "converged");

  SolveSettings cq;
  cq.q1 = QMode::optimized;
  const EnvelopeResult rc = solve_rdoe(f.fr, model, RcMode::impedance_only, cq);
  REQUIRE(rc.status == conic::Status::optimal);
  CHECK(std::abs(res.objective_kw - rc.objective_kw) <= 1e-4 * std::abs(rc.objective_kw));
}

TEST_CASE("zero radius terminates in one round at the deterministic point") {
  const Fixture f;
  const auto [res, trace] = tsro_solve(f.ls, f.fr, f.box_model(0.0), TsroOptions{});
  REQUIRE(res.status == conic::Status::optimal);
  CHECK(trace.rounds.size() == 1);
  CHECK(trace.termination == "converged");
  const EnvelopeResult det = solve_ddoe(f.fr, SolveSettings{});
  CHECK(std::abs(res.objective_kw - det.objective_kw) <= 1e-6);
}

TEST_CASE("network-level entry point and trace export") {
  const Fixture f;
  const auto [res, trace] = tsro_solve(f.net, f.box_model(0.05), TsroOptions{});
  REQUIRE(res.status == conic::Status::optimal);
  const std::string path = "tsro_trace_test.csv";
  trace.export_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "round,master_objective_kw,violation,scenario_id");
  std::remove(path.c_str());
}

TEST_CASE("unsupported uncertainty shapes are rejected") {
  const Fixture f;
  SUBCASE("two-ball set") {
    UncertaintyModel m;
    m.e = make_impedance_set(f.ls, {EntrySelection{}}, 0.05, std::make_pair(NormKind::L2, 0.1));
    CHECK_THROWS_AS(tsro_solve(f.ls, f.fr, m, TsroOptions{}), ValidationError);
  }
  SUBCASE("more than 16 uncertain entries") {
    // All elements and parts of the line: 6 elements x 2 parts = 12; use a
    // larger network to exceed 16.
    const NetworkModel net = oracles::random_radial_network(3, 4, 2, 1);
    const LinearSystem ls = assemble(net, OperatingPoint::flat(net));
    const FeasibleRegion fr = feasible_region(ls, net);
    UncertaintyModel m;
    m.e = make_impedance_set(ls, {EntrySelection{-1, "all", true, true}}, 0.05);
    CHECK(m.e.ball1->latent_dim() > 16);
    CHECK_THROWS_AS(tsro_solve(ls, fr, m, TsroOptions{}), ValidationError);
  }
}
