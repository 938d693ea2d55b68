#include <doctest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "rdoe/conic.hpp"
#include "support/oracles.hpp"

using namespace rdoe::conic;

namespace {

/// max c'x over {Gx <= h, |x_i| <= box} through the bundled solver.
Report solve_ineq_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c, double box) {
  Program prog;
  const int d = int(c.size());
  std::vector<int> x = prog.add_vars("x", d);
  for (int i = 0; i < d; ++i) prog.add_box(x[i], -box, box);
  for (int r = 0; r < G.rows(); ++r) {
    LinExpr e;
    for (int j = 0; j < d; ++j) e.add_term(x[j], G(r, j));
    prog.add_le(std::move(e), h(r));
  }
  LinExpr obj;
  for (int j = 0; j < d; ++j) obj.add_term(x[j], c(j));
  prog.set_objective(std::move(obj));
  return solve(prog);
}

}  // namespace

TEST_CASE("trivial LP: max x s.t. x <= 1, x >= 0") {
  Program prog;
  const int x = prog.add_nonneg_var("x");
  prog.add_le(LinExpr::variable(x), 1.0);
  prog.set_objective(LinExpr::variable(x));
  const Report rep = solve(prog);
  REQUIRE(rep.status == Status::optimal);
  CHECK(rep.objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.x(x) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.gap <= 1e-8);
}

TEST_CASE("L1 epigraph on a scalar bounds |x|") {
  for (const double sign : {1.0, -1.0}) {
    Program prog;
    const int x = prog.add_var("x");
    prog.add_norm_epigraph(NormKind::L1, {LinExpr::variable(x)}, LinExpr(1.0));
    prog.set_objective(LinExpr::variable(x, sign));
    const Report rep = solve(prog);
    REQUIRE(rep.status == Status::optimal);
    CHECK(rep.objective == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("L2 epigraph on constants (3,4) forces t >= 5") {
  Program prog;
  const int t = prog.add_var("t");
  prog.add_norm_epigraph(NormKind::L2, {LinExpr(3.0), LinExpr(4.0)}, LinExpr::variable(t));
  LinExpr obj;
  obj.add_term(t, -1.0);
  prog.set_objective(std::move(obj));  // minimize t
  const Report rep = solve(prog);
  REQUIRE(rep.status == Status::optimal);
  CHECK(rep.x(t) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("minimized epigraph bound equals the direct norm value") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (const NormKind norm : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
    for (int rep_i = 0; rep_i < 5; ++rep_i) {
      const int d = 3 + rep_i;
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v(i) = gauss(rng);

      Program prog;
      const int t = prog.add_var("t");
      std::vector<int> x = prog.add_vars("x", d);
      std::vector<LinExpr> args;
      for (int i = 0; i < d; ++i) {
        prog.add_eq(LinExpr::variable(x[i]), v(i));
        args.push_back(LinExpr::variable(x[i]));
      }
      prog.add_norm_epigraph(norm, args, LinExpr::variable(t));
      LinExpr obj;
      obj.add_term(t, -1.0);
      prog.set_objective(std::move(obj));
      const Report rep = solve(prog);
      REQUIRE(rep.status == Status::optimal);
      CHECK(rep.x(t) == doctest::Approx(norm_value(norm, v)).epsilon(1e-8));
    }
  }
}

TEST_CASE("random LPs match the vertex-enumeration oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim_pick(2, 5);
  std::uniform_int_distribution<int> row_pick(3, 10);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = dim_pick(rng);
    const int m = row_pick(rng);
    const double box = 10.0;
    Eigen::MatrixXd G(m, d);
    Eigen::VectorXd h(m), c(d), x0(d);
    for (int i = 0; i < d; ++i) {
      c(i) = gauss(rng);
      x0(i) = 0.5 * gauss(rng);
    }
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < d; ++j) G(r, j) = gauss(rng);
      h(r) = G.row(r).dot(x0) + 0.1 + std::abs(gauss(rng));  // strictly feasible at x0
    }
    // The oracle enumerates over the inequality rows plus the box rows.
    Eigen::MatrixXd Gfull(m + 2 * d, d);
    Eigen::VectorXd hfull(m + 2 * d);
    Gfull.topRows(m) = G;
    hfull.head(m) = h;
    Gfull.middleRows(m, d) = Eigen::MatrixXd::Identity(d, d);
    hfull.segment(m, d).setConstant(box);
    Gfull.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
    hfull.tail(d).setConstant(box);

    double oracle_value;
    Eigen::VectorXd oracle_x;
    REQUIRE(oracles::vertex_enum_lp(Gfull, hfull, c, oracle_value, oracle_x));

    const Report rep = solve_ineq_lp(G, h, c, box);
    REQUIRE(rep.status == Status::optimal);
    CHECK(std::abs(rep.objective - oracle_value) <= 1e-7 * (1.0 + std::abs(oracle_value)));
    CHECK((rep.gap <= 1e-8 || rep.rel_gap <= 1e-8));
    ++solved;
  }
  CHECK(solved == 60);
}

TEST_CASE("random SOCPs match a first-order oracle") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 2 + trial % 3;
    const double box = 3.0;
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i) c(i) = gauss(rng);
    std::vector<Eigen::VectorXd> centers;
    std::vector<double> radii;
    const int n_balls = 1 + trial % 2;
    for (int k = 0; k < n_balls; ++k) {
      Eigen::VectorXd ctr(d);
      for (int i = 0; i < d; ++i) ctr(i) = 0.3 * gauss(rng);
      centers.push_back(ctr);
      radii.push_back(1.0 + 0.5 * std::abs(gauss(rng)));
    }

    Program prog;
    std::vector<int> x = prog.add_vars("x", d);
    for (int i = 0; i < d; ++i) prog.add_box(x[i], -box, box);
    for (int k = 0; k < n_balls; ++k) {
      std::vector<LinExpr> args;
      for (int i = 0; i < d; ++i) {
        LinExpr e = LinExpr::variable(x[i]);
        e.constant() -= centers[k](i);
        args.push_back(std::move(e));
      }
      prog.add_norm_epigraph(NormKind::L2, args, LinExpr(radii[k]));
    }
    LinExpr obj;
    for (int i = 0; i < d; ++i) obj.add_term(x[i], c(i));
    prog.set_objective(std::move(obj));

    const Report rep = solve(prog);
    REQUIRE(rep.status == Status::optimal);
    const double oracle = oracles::socp_first_order_max(c, centers, radii, box);
    CHECK(std::abs(rep.objective - oracle) <= 1e-4 * (1.0 + std::abs(oracle)));
  }
}

TEST_CASE("infeasibility and unboundedness are certified") {
  SUBCASE("nonnegative variable pinned negative") {
    Program prog;
    const int x = prog.add_nonneg_var("x");
    prog.add_eq(LinExpr::variable(x), -1.0);
    prog.set_objective(LinExpr::variable(x));
    CHECK(solve(prog).status == Status::infeasible);
  }
  SUBCASE("inconsistent equalities caught by presolve") {
    Program prog;
    const int x = prog.add_var("x");
    const int y = prog.add_var("y");
    LinExpr e1 = LinExpr::variable(x);
    e1.add_term(y, 1.0);
    LinExpr e2 = e1;
    prog.add_eq(std::move(e1), 1.0);
    prog.add_eq(std::move(e2), 2.0);
    prog.set_objective(LinExpr::variable(x));
    CHECK(solve(prog).status == Status::infeasible);
  }
  SUBCASE("free improving ray") {
    Program prog;
    const int x = prog.add_var("x");
    prog.set_objective(LinExpr::variable(x));
    CHECK(solve(prog).status == Status::unbounded);
  }
  SUBCASE("cone-constrained improving ray") {
    Program prog;
    const int x = prog.add_nonneg_var("x");
    prog.set_objective(LinExpr::variable(x));
    CHECK(solve(prog).status == Status::unbounded);
  }
}

TEST_CASE("presolve does not change the optimum") {
  Program prog;
  const int x = prog.add_var("x");
  const int y = prog.add_nonneg_var("y");
  LinExpr e1 = LinExpr::variable(x);
  e1.add_term(y, 2.0);
  prog.add_eq(e1, 4.0);
  LinExpr dup = LinExpr::variable(x, 2.0);
  dup.add_term(y, 4.0);
  prog.add_eq(dup, 8.0);  // dependent duplicate
  prog.add_box(x, -10.0, 10.0);
  LinExpr obj = LinExpr::variable(x);
  obj.add_term(y, 1.0);
  prog.set_objective(obj);

  SolveOptions with, without;
  without.presolve = false;
  const Report a = solve(prog, with);
  const Report b = solve(prog, without);
  REQUIRE(a.status == Status::optimal);
  REQUIRE(b.status == Status::optimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));
}

TEST_CASE("weak duality at reported optima") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    Eigen::MatrixXd G(5, d);
    Eigen::VectorXd h(5), c(d);
    for (int i = 0; i < d; ++i) c(i) = gauss(rng);
    for (int r = 0; r < 5; ++r) {
      for (int j = 0; j < d; ++j) G(r, j) = gauss(rng);
      h(r) = 0.5 + std::abs(gauss(rng));
    }
    const Report rep = solve_ineq_lp(G, h, c, 5.0);
    REQUIRE(rep.status == Status::optimal);
    // maximize sense: dual bound from above
    CHECK(rep.dual_objective >= rep.objective - 1e-6 * (1.0 + std::abs(rep.objective)));
    CHECK(std::abs(rep.dual_objective - rep.objective) <= 1e-6 * (1.0 + std::abs(rep.objective)));
  }
}

TEST_CASE("backend registry dispatches and rejects duplicates") {
  static bool registered = false;
  if (!registered) {
    backend_register("file-roundtrip", [](const Program& p, const SolveOptions& o) {
      std::stringstream ss;
      dump_program(p, ss);
      const Program parsed = parse_program(ss);
      return solve(parsed, o);
    });
    registered = true;
  }
  CHECK_THROWS_AS(backend_register("file-roundtrip", nullptr), std::invalid_argument);
  CHECK_THROWS_AS(solve_with("no-such-backend", Program{}), std::invalid_argument);

  Program prog;
  const int x = prog.add_nonneg_var("x");
  const int y = prog.add_var("y");
  prog.add_le(LinExpr::variable(x), 2.0);
  prog.add_box(y, -1.0, 1.0);
  LinExpr obj = LinExpr::variable(x);
  obj.add_term(y, 0.5);
  prog.set_objective(obj);
  const Report direct = solve(prog);
  const Report routed = solve_with("file-roundtrip", prog);
  REQUIRE(direct.status == Status::optimal);
  REQUIRE(routed.status == Status::optimal);
  CHECK(std::abs(direct.objective - routed.objective) <= 1e-6);

  bool found = false;
  for (const auto& name : backend_names())
    if (name == "file-roundtrip") found = true;
  CHECK(found);
}

TEST_CASE("program dump includes cones and survives parsing") {
  Program prog;
  const int t = prog.add_var("t");
  std::vector<int> u = prog.add_vars("u", 2);
  prog.add_soc({t, u[0], u[1]});
  prog.add_eq(LinExpr::variable(u[0]), 0.6);
  prog.add_eq(LinExpr::variable(u[1]), 0.8);
  LinExpr obj;
  obj.add_term(t, -1.0);
  prog.set_objective(obj);

  std::stringstream ss;
  dump_program(prog, ss);
  const std::string text = ss.str();
  CHECK(text.find("soc 3") != std::string::npos);
  std::stringstream in(text);
  const Program parsed = parse_program(in);
  CHECK(parsed.n_vars() == prog.n_vars());
  CHECK(parsed.soc_cones().size() == 1);
  const Report rep = solve(parsed);
  REQUIRE(rep.status == Status::optimal);
  CHECK(rep.x(t) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("environment variable overrides tolerances") {
  setenv("ENVELOPE_SOLVER_TOL", "1e-6", 1);
  const SolveOptions opts = SolveOptions{}.with_env_overrides();
  CHECK(opts.feastol == doctest::Approx(1e-6));
  CHECK(opts.abstol == doctest::Approx(1e-6));
  unsetenv("ENVELOPE_SOLVER_TOL");
  const SolveOptions plain = SolveOptions{}.with_env_overrides();
  CHECK(plain.feastol == doctest::Approx(1e-8));
}

TEST_CASE("nonnegative variables report as maximal index ranges") {
  Program prog;
  prog.add_var("a");
  prog.add_nonneg_var("b");
  prog.add_nonneg_var("c");
  prog.add_var("d");
  prog.add_nonneg_var("e");
  const auto ranges = prog.nonneg_ranges();
  REQUIRE(ranges.size() == 2);
  CHECK(ranges[0] == std::pair<int, int>(1, 3));
  CHECK(ranges[1] == std::pair<int, int>(4, 5));
}

TEST_CASE("cone bookkeeping rejects double membership") {
  Program prog;
  const int a = prog.add_var("a");
  const int b = prog.add_var("b");
  prog.add_soc({a, b});
  CHECK_THROWS_AS(prog.add_soc({a, b}), std::invalid_argument);
  const int c = prog.add_nonneg_var("c");
  CHECK_THROWS_AS(prog.add_soc({c, a}), std::invalid_argument);
}
