#pragma once

#include <string>

#include "rdoe/conic.hpp"
#include "rdoe/lintopf.hpp"
#include "rdoe/uncertainty.hpp"

namespace rdoe {

enum class RcMode { impedance_only, demand_only, bilinear };

RcMode rc_mode_from_string(const std::string& s);
std::string to_string(RcMode mode);

/// A fully assembled robust counterpart: the conic program plus the
/// metadata needed to read envelopes back out of a solution.
struct RobustProblem {
  RcMode mode = RcMode::impedance_only;
  conic::Program program;
  detail::DecisionVars vars;
  DecisionMeta meta;
  double build_seconds = 0.0;
  int fr_rows = 0;
  int rc_blocks = 0;  // one block per (row) or per (row, vertex sign)
  // Split dual variable indices per block, populated in two-ball modes so
  // tests can audit split optimality at the solution.
  std::vector<std::vector<int>> tau1, tau2;
};

/// Robust counterpart for uncertainty only in the impedance expansion E:
/// per FR row, either the closed single-ball form
///   center'h_i + gamma ||J' h_i||_dual <= t_i
/// or the two-ball split with free dual vectors tau_i1 + tau_i2 = h_i.
/// p2 and q2 stay fixed at the FR's values.
RobustProblem build_rc_impedance(const FeasibleRegion& fr, const UncertaintyModel& model,
                                 const SolveSettings& settings = {});

/// Robust counterpart for uncertainty only in the demand forecasts (p2
/// and/or q2) with E fixed at its nominal value.
RobustProblem build_rc_demand(const FeasibleRegion& fr, const UncertaintyModel& model,
                              const SolveSettings& settings = {});

/// Bilinear (E, p2) counterpart via vertex enumeration of the demand set,
/// which must be the shared-latent LInf/L1 pair with n_t = 1; one
/// impedance-style block per FR row and signed vertex.
RobustProblem build_rc_bilinear(const FeasibleRegion& fr, const UncertaintyModel& model,
                                const SolveSettings& settings = {});

EnvelopeResult solve_rdoe(const RobustProblem& problem, const SolveSettings& settings = {});

/// Convenience: build per mode and solve.
EnvelopeResult solve_rdoe(const FeasibleRegion& fr, const UncertaintyModel& model, RcMode mode,
                          const SolveSettings& settings = {});

/// Boundary of the robust feasible region's 2-D slice: the deterministic
/// sweep with the robust rows in place of the FR rows. Requires exactly
/// two active customers.
TracedPolygon trace_rfr_2d(const FeasibleRegion& fr, const UncertaintyModel& model, RcMode mode,
                           int n_directions, const SolveSettings& settings = {});

}  // namespace rdoe
