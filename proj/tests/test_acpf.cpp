#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rdoe/acpf.hpp"
#include "rdoe/lintopf.hpp"
#include "support/oracles.hpp"

using namespace rdoe;

namespace {

const std::string kTwoBus = std::string(RDOE_DATA_DIR) + "/twobus.json";

Eigen::VectorXd customer_vector(const NetworkModel& net, double active, bool use_forecast_p) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(net.customers().size());
  for (int m = 0; m < int(net.customers().size()); ++m) {
    const Customer& c = net.customers()[m];
    v(m) = c.is_active() ? active : (use_forecast_p ? c.p_forecast_kw : c.q_forecast_kvar);
  }
  return v;
}

}  // namespace

TEST_CASE("no-load solution is the propagated reference voltage") {
  const NetworkModel net = oracles::random_radial_network(2, 8, 2, 2);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(net.customers().size());
  const PowerFlowSolution pf = solve_acpf(net, zeros, zeros);
  REQUIRE(pf.converged);
  CHECK(pf.iterations <= 2);
  for (int b = 0; b < int(net.buses().size()); ++b)
    for (int p = 0; p < 3; ++p) CHECK(std::abs(pf.v(b, p) - net.v_ref()[p]) <= 1e-14);
  CHECK(pf.i_line.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("two-bus sweep matches the independent Newton root-find to 1e-10") {
  const NetworkModel net = load_network(kTwoBus);
  const Eigen::VectorXd p = customer_vector(net, 3.0, true);
  const Eigen::VectorXd q = customer_vector(net, 0.0, false);
  const PowerFlowSolution pf = solve_acpf(net, p, q);
  REQUIRE(pf.converged);

  // Aggregate bus-2 powers per phase in per-unit for the 2-bus oracle.
  Eigen::Vector3cd s = Eigen::Vector3cd::Zero();
  for (int m = 0; m < int(net.customers().size()); ++m) {
    const Customer& c = net.customers()[m];
    s(int(c.phase)) += Complex(p(m), q(m)) / net.base().s_kva;
  }
  Eigen::Vector3cd v0;
  for (int ph = 0; ph < 3; ++ph) v0(ph) = net.v_ref()[ph];
  const Eigen::Vector3cd v_newton = oracles::newton_two_bus(v0, net.oriented_lines()[0].z_pu, s);
  for (int ph = 0; ph < 3; ++ph) CHECK(std::abs(pf.v(1, ph) - v_newton(ph)) <= 1e-10);
}

TEST_CASE("sweep agrees with the general Newton oracle on small networks") {
  for (unsigned seed : {31u, 32u, 33u}) {
    const NetworkModel net = oracles::random_radial_network(seed, 4 + int(seed % 7), 2, 3);
    Eigen::VectorXd p(net.customers().size()), q(net.customers().size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int m = 0; m < p.size(); ++m) {
      p(m) = uni(rng);
      q(m) = 0.3 * uni(rng);
    }
    const PowerFlowSolution pf = solve_acpf(net, p, q);
    REQUIRE(pf.converged);
    const Eigen::MatrixXcd v_newton = oracles::newton_pf(net, p, q);
    double worst = 0.0;
    for (int b = 0; b < int(net.buses().size()); ++b)
      for (int ph = 0; ph < 3; ++ph) worst = std::max(worst, std::abs(pf.v(b, ph) - v_newton(b, ph)));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("power balance holds at convergence") {
  const NetworkModel net = oracles::random_radial_network(8, 12, 3, 4);
  Eigen::VectorXd p(net.customers().size()), q(net.customers().size());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-4.0, 4.0);
  for (int m = 0; m < p.size(); ++m) {
    p(m) = uni(rng);
    q(m) = 0.2 * uni(rng);
  }
  AcpfOptions opts;
  const PowerFlowSolution pf = solve_acpf(net, p, q, opts);
  REQUIRE(pf.converged);
  CHECK(pf.kirchhoff_residual(net, p, q) <= 10.0 * opts.tol);
}

TEST_CASE("non-convergence is reported as data") {
  const NetworkModel net = load_network(kTwoBus);
  const Eigen::VectorXd p = customer_vector(net, 1e5, true);  // far beyond any fixed point
  const Eigen::VectorXd q = customer_vector(net, 0.0, false);
  AcpfOptions opts;
  opts.max_iter = 50;
  const PowerFlowSolution pf = solve_acpf(net, p, q, opts);
  CHECK(!pf.converged);
}

TEST_CASE("linearization errors grow monotonically with injection size") {
  const NetworkModel net = load_network(kTwoBus);
  const LinearSystem ls = assemble(net, OperatingPoint::flat(net));
  double prev = -1.0;
  for (const double kw : {0.5, 1.0, 2.0, 3.0}) {
    const Eigen::VectorXd p = customer_vector(net, -kw, true);
    const Eigen::VectorXd q = customer_vector(net, 0.0, false);
    const PowerFlowSolution pf = solve_acpf(net, p, q);
    REQUIRE(pf.converged);
    const Eigen::MatrixXcd v_lin = linear_pf_voltages(net, ls, p, q);
    double worst = 0.0;
    for (int ph = 0; ph < 3; ++ph) worst = std::max(worst, std::abs(std::abs(v_lin(1, ph)) - std::abs(pf.v(1, ph))));
    CHECK(worst >= prev);
    prev = worst;
  }
}

TEST_CASE("error report covers the four standard scenarios") {
  const NetworkModel net = load_network(kTwoBus);
  const auto rows = linearization_error_report(net, OperatingPoint::flat(net), standard_scenarios(net));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].status == "export");
  CHECK(rows[0].load == "high");
  CHECK(rows[3].status == "import");
  CHECK(rows[3].load == "low");
  for (const auto& r : rows) {
    CHECK(r.converged);
    CHECK(r.avg_vm_error <= r.max_vm_error);
  }

  SUBCASE("errors are reproducible bit for bit") {
    const auto again = linearization_error_report(net, OperatingPoint::flat(net), standard_scenarios(net));
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].avg_vm_error == again[i].avg_vm_error);
      CHECK(rows[i].max_vm_error == again[i].max_vm_error);
    }
  }

  SUBCASE("csv layout matches the table shape") {
    const std::string path = "lin_error_test.csv";
    export_error_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "status,load,avg_vm_error,max_vm_error,converged");
    int data_rows = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++data_rows;
    CHECK(data_rows == 4);
    std::remove(path.c_str());
  }
}

TEST_CASE("zero-load scenario has vanishing linearization error") {
  const NetworkModel net = oracles::random_radial_network(55, 6, 2, 0);  // no passive load
  std::vector<ErrorScenario> scenarios = {{
      "export",
      "zero",
      Eigen::VectorXd::Zero(net.customers().size()),
      Eigen::VectorXd::Zero(net.customers().size()),
  }};
  const auto rows = linearization_error_report(net, OperatingPoint::flat(net), scenarios);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].max_vm_error <= 1e-12);
}

TEST_CASE("feeder-scale errors stay in the expected band at 3 kW") {
  // A 33-bus feeder with 30 active and 57 passive customers; shortened
  // lines keep the trunk strong enough for the aggregate load.
  const NetworkModel net = oracles::random_radial_network(77, 33, 30, 57, 0.06);
  const auto rows = linearization_error_report(net, OperatingPoint::flat(net), standard_scenarios(net, 3.0, 1.0));
  for (const auto& r : rows) {
    REQUIRE(r.converged);
    CHECK(r.avg_vm_error <= 0.01);
    CHECK(r.max_vm_error <= 0.02);
    if (r.load == "low") CHECK(r.max_vm_error <= 0.01);
  }
}

TEST_CASE("feasibility audit") {
  const NetworkModel net = load_network(kTwoBus);

  SUBCASE("zero envelope on a healthy network has no violations") {
    EnvelopeResult env;
    env.customer_ids = {"c1", "c3"};
    env.envelope_kw = Eigen::VectorXd::Zero(2);
    env.q1_kvar = Eigen::VectorXd::Zero(2);
    env.status = conic::Status::optimal;
    const AuditResult audit = feasibility_audit(net, env);
    REQUIRE(audit.converged);
    CHECK(audit.worst_vm == 0.0);
    CHECK(audit.violations.empty());
  }

  SUBCASE("DDOE violations stay within the linearization slack") {
    const LinearSystem ls = assemble(net, OperatingPoint::flat(net));
    const FeasibleRegion fr = feasible_region(ls, net);
    const EnvelopeResult res = solve_ddoe(fr, SolveSettings{});
    REQUIRE(res.status == conic::Status::optimal);
    const AuditResult audit = feasibility_audit(net, res);
    REQUIRE(audit.converged);
    CHECK(audit.worst_vm <= 0.02);  // default linearization slack
  }
}
