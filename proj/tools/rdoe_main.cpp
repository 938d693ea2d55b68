#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdoe/acpf.hpp"
#include "rdoe/conic.hpp"
#include "rdoe/lintopf.hpp"
#include "rdoe/netmodel.hpp"
#include "rdoe/robustrc.hpp"
#include "rdoe/tsro.hpp"
#include "rdoe/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
  std::string network;
  std::string uncertainty;
  std::string mode = "det";
  std::string norm = "inf";
  double radius = 0.0;
  std::optional<double> radius_e;
  std::optional<double> radius_p2;
  std::string allocation = "equal";
  std::string out = ".";
  unsigned seed = 42;
  double tol = 1e-8;
  std::string q1 = "fixed";
  bool q2_control = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_network = true) {
  auto* net = cmd->add_option("--network", args.network, "network JSON file (utopf-net/1)");
  if (needs_network) net->required();
  cmd->add_option("--uncertainty", args.uncertainty, "uncertainty JSON file (utopf-unc/1)");
  cmd->add_option("--mode", args.mode, "det|impedance|demand|bilinear")->default_val("det");
  cmd->add_option("--norm", args.norm, "1|2|inf (norm of the second ball)")->default_val("inf");
  cmd->add_option("--radius", args.radius, "relative radius for single-uncertainty modes")->default_val(0.0);
  cmd->add_option("--radius-e", args.radius_e, "impedance radius for bilinear mode");
  cmd->add_option("--radius-p2", args.radius_p2, "demand radius for bilinear mode");
  cmd->add_option("--allocation", args.allocation, "allocation policy (equal)")->default_val("equal");
  cmd->add_option("--out", args.out, "output directory")->default_val(".");
  cmd->add_option("--seed", args.seed, "seed for sampling-based audits")->default_val(42u);
  cmd->add_option("--tol", args.tol, "solver tolerance (also via ENVELOPE_SOLVER_TOL)")->default_val(1e-8);
  cmd->add_option("--q1", args.q1, "fixed (0 kvar) or opt")->default_val("fixed");
  cmd->add_flag("--q2-control", args.q2_control, "treat passive reactive power as controllable");
}

rdoe::SolveSettings settings_of(const CommonArgs& args) {
  rdoe::SolveSettings s;
  if (args.allocation != "equal") throw rdoe::ValidationError("unsupported allocation policy '" + args.allocation + "'");
  if (args.q1 == "fixed")
    s.q1 = rdoe::QMode::fixed_zero;
  else if (args.q1 == "opt")
    s.q1 = rdoe::QMode::optimized;
  else
    throw rdoe::ValidationError("--q1 must be fixed or opt");
  s.q2_controllable = args.q2_control;
  s.solver.feastol = s.solver.abstol = s.solver.reltol = args.tol;
  return s;
}

/// Builds the uncertainty model from --uncertainty or from the mode/norm/
/// radius flags (impedance: LInf ball on the mutual impedances of every
/// line; demand: diag-of-forecast ball; bilinear: both).
rdoe::UncertaintyModel model_of(const CommonArgs& args, const rdoe::LinearSystem& ls, const rdoe::FeasibleRegion& fr) {
  if (!args.uncertainty.empty()) return rdoe::load_uncertainty(args.uncertainty, ls, fr);
  rdoe::UncertaintyModel model;
  const double re = args.radius_e.value_or(args.radius);
  const double rp = args.radius_p2.value_or(args.radius);
  if (args.mode == "impedance") {
    model.e = rdoe::make_impedance_set(ls, {rdoe::EntrySelection{}}, re);
  } else if (args.mode == "demand") {
    model.p2 = rdoe::make_demand_set(fr.p2, rdoe::conic::norm_from_string(args.norm), rp);
  } else if (args.mode == "bilinear") {
    model.e = rdoe::make_impedance_set(ls, {rdoe::EntrySelection{}}, re);
    model.p2 = rdoe::make_bilinear_demand_set(fr.p2, Eigen::MatrixXd(fr.p2.asDiagonal()), rp);
  }
  return model;
}

void write_timing_csv(const fs::path& dir, const std::string& command, double setup_s, double solve_s) {
  std::ofstream out(dir / "timing.csv");
  out << "command,setup_seconds,solve_seconds\n";
  out.precision(6);
  out << command << "," << setup_s << "," << solve_s << "\n";
}

void write_envelope_csv(const fs::path& dir, const rdoe::EnvelopeResult& res) {
  std::ofstream out(dir / "envelopes.csv");
  out << "customer_id,envelope_kw,q1_kvar\n";
  out.precision(12);
  for (size_t i = 0; i < res.customer_ids.size(); ++i)
    out << res.customer_ids[i] << "," << res.envelope_kw(int(i)) << "," << res.q1_kvar(int(i)) << "\n";
}

json result_payload(const std::string& command, const CommonArgs& args, const rdoe::EnvelopeResult& res) {
  json j;
  j["command"] = command;
  j["mode"] = args.mode;
  j["norm"] = args.norm;
  j["radius"] = args.radius;
  j["q1"] = args.q1;
  j["q2_controllable"] = args.q2_control;
  j["allocation"] = args.allocation;
  j["status"] = rdoe::conic::to_string(res.status);
  if (res.status == rdoe::conic::Status::optimal) {
    j["objective_kw"] = res.objective_kw;
    json envs = json::array();
    for (size_t i = 0; i < res.customer_ids.size(); ++i) {
      json e = {{"id", res.customer_ids[i]},
                {"envelope_kw", res.envelope_kw(int(i))},
                {"q1_kvar", res.q1_kvar(int(i))}};
      envs.push_back(e);
    }
    j["envelopes"] = envs;
    if (res.q2_kvar) {
      json q2 = json::array();
      for (int i = 0; i < res.q2_kvar->size(); ++i) q2.push_back((*res.q2_kvar)(i));
      j["q2_kvar"] = q2;
    }
  }
  if (!res.message.empty()) j["message"] = res.message;
  return j;
}

int finish_envelope_command(const std::string& command, const CommonArgs& args, const rdoe::EnvelopeResult& res) {
  const fs::path dir(args.out);
  fs::create_directories(dir);
  std::ofstream(dir / "result.json") << result_payload(command, args, res).dump(2) << "\n";
  write_timing_csv(dir, command, res.setup_seconds, res.solve_seconds);
  if (res.status == rdoe::conic::Status::optimal) {
    write_envelope_csv(dir, res);
    std::cout << command << ": objective " << res.objective_kw << " kW"
              << " (setup " << res.setup_seconds << " s, solve " << res.solve_seconds << " s)\n";
    for (size_t i = 0; i < res.customer_ids.size(); ++i)
      std::cout << "  " << res.customer_ids[i] << ": " << res.envelope_kw(int(i)) << " kW, q1 "
                << res.q1_kvar(int(i)) << " kvar\n";
    return kExitOk;
  }
  std::cerr << command << ": " << rdoe::conic::to_string(res.status)
            << (res.message.empty() ? "" : " - " + res.message) << "\n";
  return res.status == rdoe::conic::Status::infeasible ? kExitInfeasible : kExitSolver;
}

int run_ddoe(const CommonArgs& args) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
  const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);
  const rdoe::EnvelopeResult res = rdoe::solve_ddoe(fr, settings_of(args));
  return finish_envelope_command("ddoe", args, res);
}

/// Overlays a run-spec JSON onto the arguments; explicitly passed flags
/// keep priority (the caller clears spec-covered fields it wants filled).
CommonArgs apply_run_spec(CommonArgs args, const std::string& spec_path, const CLI::App* cmd) {
  std::ifstream in(spec_path);
  if (!in) throw rdoe::ParseError("cannot open run spec '" + spec_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rdoe::ParseError("malformed JSON in '" + spec_path + "': " + e.what());
  }
  auto overridden = [&](const char* flag) { return cmd->count(flag) > 0; };
  if (j.contains("network") && !overridden("--network")) args.network = j.at("network").get<std::string>();
  if (j.contains("uncertainty") && !overridden("--uncertainty"))
    args.uncertainty = j.at("uncertainty").get<std::string>();
  if (j.contains("mode") && !overridden("--mode")) args.mode = j.at("mode").get<std::string>();
  if (j.contains("norm") && !overridden("--norm")) args.norm = j.at("norm").get<std::string>();
  if (j.contains("radius") && !overridden("--radius")) args.radius = j.at("radius").get<double>();
  if (j.contains("radius_e") && !overridden("--radius-e")) args.radius_e = j.at("radius_e").get<double>();
  if (j.contains("radius_p2") && !overridden("--radius-p2")) args.radius_p2 = j.at("radius_p2").get<double>();
  if (j.contains("allocation") && !overridden("--allocation"))
    args.allocation = j.at("allocation").get<std::string>();
  if (j.contains("q1") && !overridden("--q1")) args.q1 = j.at("q1").get<std::string>();
  if (j.contains("q2_controllable") && !overridden("--q2-control"))
    args.q2_control = j.at("q2_controllable").get<bool>();
  if (j.contains("seed") && !overridden("--seed")) args.seed = j.at("seed").get<unsigned>();
  if (j.contains("solver") && j.at("solver").contains("tol") && !overridden("--tol"))
    args.tol = j.at("solver").at("tol").get<double>();
  if (args.network.empty()) throw rdoe::ValidationError("run spec or flags must name a network file");
  return args;
}

int run_rdoe(const CommonArgs& args) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
  const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);
  const rdoe::SolveSettings settings = settings_of(args);

  if (args.mode == "det") {
    const rdoe::EnvelopeResult res = rdoe::solve_ddoe(fr, settings);
    return finish_envelope_command("rdoe", args, res);
  }
  const rdoe::UncertaintyModel model = model_of(args, ls, fr);
  const rdoe::RcMode mode = rdoe::rc_mode_from_string(args.mode);
  const rdoe::EnvelopeResult res = rdoe::solve_rdoe(fr, model, mode, settings);
  return finish_envelope_command("rdoe", args, res);
}

int run_fr_trace(const CommonArgs& args, int directions) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  if (net.n_active() != 2) {
    std::cerr << "fr-trace: needs exactly two active customers, network has " << net.n_active() << "\n";
    return kExitConfig;
  }
  const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
  const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);
  const rdoe::SolveSettings settings = settings_of(args);

  const fs::path dir(args.out);
  fs::create_directories(dir);

  const rdoe::TracedPolygon dfr = rdoe::trace_fr_2d(fr, 0, 1, directions, settings);
  if (!dfr.feasible) {
    std::cerr << "fr-trace: " << dfr.diagnostic << "\n";
    return kExitInfeasible;
  }
  dfr.export_csv((dir / "dfr_polygon.csv").string());

  const rdoe::EnvelopeResult ddoe = rdoe::solve_ddoe(fr, settings);
  json j;
  j["command"] = "fr-trace";
  j["directions"] = directions;
  j["dfr_polygon"] = "dfr_polygon.csv";
  if (ddoe.status == rdoe::conic::Status::optimal)
    j["ddoe_point_kw"] = {ddoe.envelope_kw(0), ddoe.envelope_kw(1)};

  if (args.mode != "det") {
    const rdoe::UncertaintyModel model = model_of(args, ls, fr);
    const rdoe::RcMode mode = rdoe::rc_mode_from_string(args.mode);

    const rdoe::TracedPolygon rfr = rdoe::trace_rfr_2d(fr, model, mode, directions, settings);
    if (!rfr.feasible) {
      std::cerr << "fr-trace: robust sweep failed: " << rfr.diagnostic << "\n";
      return kExitSolver;
    }
    rfr.export_csv((dir / "rfr_polygon.csv").string());
    j["rfr_polygon"] = "rfr_polygon.csv";

    const rdoe::EnvelopeResult rdoe_pt = rdoe::solve_rdoe(fr, model, mode, settings);
    if (rdoe_pt.status == rdoe::conic::Status::optimal)
      j["rdoe_point_kw"] = {rdoe_pt.envelope_kw(0), rdoe_pt.envelope_kw(1)};
  }

  std::ofstream(dir / "result.json") << j.dump(2) << "\n";
  std::cout << "fr-trace: wrote " << (dir / "dfr_polygon.csv").string() << "\n";
  return kExitOk;
}

int run_pf_audit(const CommonArgs& args, const std::string& result_path, int samples) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);

  rdoe::EnvelopeResult env;
  env.customer_ids.resize(net.n_active());
  env.envelope_kw = Eigen::VectorXd::Zero(net.n_active());
  env.q1_kvar = Eigen::VectorXd::Zero(net.n_active());
  env.status = rdoe::conic::Status::optimal;
  if (!result_path.empty()) {
    std::ifstream in(result_path);
    if (!in) {
      std::cerr << "pf-audit: cannot open result file '" << result_path << "'\n";
      return kExitConfig;
    }
    json j;
    in >> j;
    const auto& envs = j.at("envelopes");
    if (int(envs.size()) != net.n_active()) {
      std::cerr << "pf-audit: result file does not match the network's active customers\n";
      return kExitConfig;
    }
    for (int i = 0; i < int(envs.size()); ++i) {
      env.customer_ids[i] = envs.at(i).at("id").get<std::string>();
      env.envelope_kw(i) = envs.at(i).at("envelope_kw").get<double>();
      env.q1_kvar(i) = envs.at(i).at("q1_kvar").get<double>();
    }
  }

  rdoe::AuditResult audit = rdoe::feasibility_audit(net, env);
  int failed_samples = 0;

  /* With --samples and a p2 uncertainty set, audit against sampled passive
   * demand realizations and keep the worst case. */
  if (samples > 0) {
    if (args.uncertainty.empty()) {
      std::cerr << "pf-audit: --samples needs an --uncertainty file with a p2 set\n";
      return kExitConfig;
    }
    const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
    const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);
    const rdoe::UncertaintyModel model = rdoe::load_uncertainty(args.uncertainty, ls, fr);
    if (!model.p2.present()) {
      std::cerr << "pf-audit: the uncertainty file has no p2 set to sample\n";
      return kExitConfig;
    }
    std::mt19937_64 rng(args.seed);
    const double s_base = net.base().s_kva;
    for (int k = 0; k < samples; ++k) {
      rdoe::AuditRealization realization;
      realization.passive_p_kw = rdoe::sample(model, rdoe::UComponent::P2, rng) * s_base;
      const rdoe::AuditResult one = rdoe::feasibility_audit(net, env, {}, realization);
      if (!one.converged) {
        ++failed_samples;
        continue;
      }
      if (one.worst_vm > audit.worst_vm) audit = one;
      audit.min_vm = std::min(audit.min_vm, one.min_vm);
      audit.max_vm = std::max(audit.max_vm, one.max_vm);
    }
  }

  const fs::path dir(args.out);
  fs::create_directories(dir);
  json j;
  j["command"] = "pf-audit";
  j["converged"] = audit.converged;
  j["worst_violation_pu"] = audit.worst_vm;
  j["min_vm_pu"] = audit.min_vm;
  j["max_vm_pu"] = audit.max_vm;
  j["violations"] = audit.violations;
  j["samples"] = samples;
  if (samples > 0) {
    j["seed"] = args.seed;
    j["nonconverged_samples"] = failed_samples;
  }
  std::ofstream(dir / "result.json") << j.dump(2) << "\n";
  std::cout << "pf-audit: worst violation " << audit.worst_vm << " p.u. (" << audit.violations.size()
            << " violating bus/phase pairs)\n";
  return kExitOk;
}

int run_lin_error(const CommonArgs& args, double high_kw, double low_kw) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  const auto rows =
      rdoe::linearization_error_report(net, rdoe::OperatingPoint::flat(net), rdoe::standard_scenarios(net, high_kw, low_kw));
  const fs::path dir(args.out);
  fs::create_directories(dir);
  rdoe::export_error_csv(rows, (dir / "lin_error.csv").string());
  for (const auto& r : rows)
    std::cout << r.status << "/" << r.load << ": avg " << r.avg_vm_error << " p.u., max " << r.max_vm_error
              << " p.u." << (r.converged ? "" : " (acpf did not converge)") << "\n";
  return kExitOk;
}

int run_tsro(const CommonArgs& args, double tol, int max_rounds) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
  const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);

  rdoe::UncertaintyModel model;
  if (!args.uncertainty.empty()) {
    model = rdoe::load_uncertainty(args.uncertainty, ls, fr);
  } else {
    model.e = rdoe::make_impedance_set(ls, {rdoe::EntrySelection{}}, args.radius_e.value_or(args.radius));
  }

  rdoe::TsroOptions options;
  options.settings = settings_of(args);
  options.tol = tol;
  options.max_rounds = max_rounds;
  const auto [res, trace] = rdoe::tsro_solve(ls, fr, model, options);

  const fs::path dir(args.out);
  fs::create_directories(dir);
  trace.export_csv((dir / "tsro_trace.csv").string());
  std::ofstream(dir / "result.json") << result_payload("tsro", args, res).dump(2) << "\n";
  write_timing_csv(dir, "tsro", res.setup_seconds, res.solve_seconds);
  if (res.status == rdoe::conic::Status::optimal && trace.termination == "converged") {
    write_envelope_csv(dir, res);
    std::cout << "tsro: objective " << res.objective_kw << " kW after " << trace.rounds.size() << " rounds\n";
    return kExitOk;
  }
  std::cerr << "tsro: " << trace.termination << (res.message.empty() ? "" : " - " + res.message) << "\n";
  return res.status == rdoe::conic::Status::infeasible ? kExitInfeasible : kExitSolver;
}

int run_bench(const CommonArgs& args, int repeats) {
  const rdoe::NetworkModel net = rdoe::load_network(args.network);
  const rdoe::LinearSystem ls = rdoe::assemble(net, rdoe::OperatingPoint::flat(net));
  const rdoe::FeasibleRegion fr = rdoe::feasible_region(ls, net);
  const rdoe::SolveSettings settings = settings_of(args);

  struct Case {
    std::string name;
    std::function<rdoe::EnvelopeResult()> run;
  };
  std::vector<Case> cases;
  cases.push_back({"det", [&] { return rdoe::solve_ddoe(fr, settings); }});
  const double re = args.radius_e.value_or(args.radius > 0 ? args.radius : 0.05);
  const double rp = args.radius_p2.value_or(0.2);
  rdoe::UncertaintyModel imp;
  imp.e = rdoe::make_impedance_set(ls, {rdoe::EntrySelection{}}, re);
  cases.push_back({"impedance", [&, imp] { return rdoe::solve_rdoe(fr, imp, rdoe::RcMode::impedance_only, settings); }});
  rdoe::UncertaintyModel dem;
  dem.p2 = rdoe::make_demand_set(fr.p2, rdoe::conic::norm_from_string(args.norm), rp);
  cases.push_back({"demand", [&, dem] { return rdoe::solve_rdoe(fr, dem, rdoe::RcMode::demand_only, settings); }});
  rdoe::UncertaintyModel bil;
  bil.e = imp.e;
  bil.p2 = rdoe::make_bilinear_demand_set(fr.p2, Eigen::MatrixXd(fr.p2.asDiagonal()), rp);
  cases.push_back({"bilinear", [&, bil] { return rdoe::solve_rdoe(fr, bil, rdoe::RcMode::bilinear, settings); }});

  const fs::path dir(args.out);
  fs::create_directories(dir);
  std::ofstream out(dir / "bench.csv");
  out << "case,objective_kw,median_setup_seconds,median_solve_seconds\n";
  out.precision(9);
  for (const Case& c : cases) {
    std::vector<double> setup, solve;
    rdoe::EnvelopeResult last;
    for (int r = 0; r < repeats; ++r) {
      last = c.run();
      setup.push_back(last.setup_seconds);
      solve.push_back(last.solve_seconds);
    }
    std::sort(setup.begin(), setup.end());
    std::sort(solve.begin(), solve.end());
    const double med_setup = setup[setup.size() / 2];
    const double med_solve = solve[solve.size() / 2];
    out << c.name << "," << (last.status == rdoe::conic::Status::optimal ? last.objective_kw : std::nan("")) << ","
        << med_setup << "," << med_solve << "\n";
    std::cout << "bench " << c.name << ": median setup " << med_setup << " s, median solve " << med_solve << " s\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust dynamic operating envelopes for unbalanced radial networks"};
  app.require_subcommand(1);

  CommonArgs ddoe_args, rdoe_args, trace_args, audit_args, lin_args, tsro_args, bench_args;
  std::string run_spec;
  int directions = 64;
  std::string result_path;
  int audit_samples = 0;
  double high_kw = 3.0, low_kw = 1.0;
  double tsro_tol = 1e-7;
  int tsro_rounds = 50;
  int repeats = 10;

  CLI::App* cmd_ddoe = app.add_subcommand("ddoe", "deterministic operating envelopes");
  add_common(cmd_ddoe, ddoe_args);
  CLI::App* cmd_rdoe = app.add_subcommand("rdoe", "robust operating envelopes");
  add_common(cmd_rdoe, rdoe_args, /*needs_network=*/false);
  cmd_rdoe->add_option("--spec", run_spec, "run-spec JSON supplying network/uncertainty/mode/radii");
  CLI::App* cmd_trace = app.add_subcommand("fr-trace", "trace the 2-D feasible-region boundary");
  add_common(cmd_trace, trace_args);
  cmd_trace->add_option("--directions", directions, "ray-sweep direction count")->default_val(64);
  CLI::App* cmd_audit = app.add_subcommand("pf-audit", "exact power-flow audit of an envelope");
  add_common(cmd_audit, audit_args);
  cmd_audit->add_option("--result", result_path, "result.json with the envelope to audit");
  cmd_audit->add_option("--samples", audit_samples, "audit against sampled passive demand realizations")
      ->default_val(0);
  CLI::App* cmd_lin = app.add_subcommand("lin-error", "linearization-error table");
  add_common(cmd_lin, lin_args);
  cmd_lin->add_option("--high-kw", high_kw, "high per-customer load")->default_val(3.0);
  cmd_lin->add_option("--low-kw", low_kw, "low per-customer load")->default_val(1.0);
  CLI::App* cmd_tsro = app.add_subcommand("tsro", "cutting-plane robust baseline");
  add_common(cmd_tsro, tsro_args);
  cmd_tsro->add_option("--tsro-tol", tsro_tol, "violation tolerance")->default_val(1e-7);
  cmd_tsro->add_option("--max-rounds", tsro_rounds, "maximum master/subproblem rounds")->default_val(50);
  CLI::App* cmd_bench = app.add_subcommand("bench", "timing harness over the solve modes");
  add_common(cmd_bench, bench_args);
  cmd_bench->add_option("--repeats", repeats, "repetitions per case")->default_val(10);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_ddoe->parsed()) return run_ddoe(ddoe_args);
    if (cmd_rdoe->parsed()) {
      CommonArgs a = rdoe_args;
      if (!run_spec.empty()) a = apply_run_spec(a, run_spec, cmd_rdoe);
      if (a.network.empty()) {
        std::cerr << "rdoe: --network (or a --spec naming one) is required\n";
        return kExitConfig;
      }
      return run_rdoe(a);
    }
    if (cmd_trace->parsed()) return run_fr_trace(trace_args, directions);
    if (cmd_audit->parsed()) return run_pf_audit(audit_args, result_path, audit_samples);
    if (cmd_lin->parsed()) return run_lin_error(lin_args, high_kw, low_kw);
    if (cmd_tsro->parsed()) return run_tsro(tsro_args, tsro_tol, tsro_rounds);
    if (cmd_bench->parsed()) return run_bench(bench_args, repeats);
  } catch (const rdoe::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rdoe::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
