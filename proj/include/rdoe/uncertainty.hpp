#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdoe/conic.hpp"
#include "rdoe/lintopf.hpp"

namespace rdoe {

using conic::NormKind;

/// Affine norm ball { center + map * x : ||x||_norm <= radius }.
struct AffineNormBall {
  Eigen::VectorXd center;
  Eigen::MatrixXd map;  // ambient x latent
  double radius = 0.0;
  NormKind norm = NormKind::LInf;

  int latent_dim() const { return int(map.cols()); }
  int ambient_dim() const { return int(center.size()); }
  void validate() const;
};

/// Exact conjugate support function sup { y'v : v in ball }
///  = center'y + radius * ||map'y||_dual(norm).
double support(const AffineNormBall& ball, const Eigen::VectorXd& y);

/// sqrt of the (1 - epsilon) quantile of the chi-square distribution with
/// n degrees of freedom, by numeric quantile inversion.
double chi_square_radius(int n, double epsilon);

/// Intersection of up to two affine norm balls over one component. Ball 1
/// is conventionally the LInf bound; ball 2 may use any supported norm.
/// shared_latent marks that both balls constrain the same latent variable
/// (identical center and map), the form needed for the bilinear mode.
struct ComponentSet {
  std::optional<AffineNormBall> ball1;
  std::optional<AffineNormBall> ball2;
  bool shared_latent = false;

  bool present() const { return ball1.has_value() || ball2.has_value(); }
  int ambient_dim() const;
  const AffineNormBall& any_ball() const;
  void validate() const;
};

enum class UComponent { E, P2, Q2 };

struct UncertaintyModel {
  ComponentSet e;
  ComponentSet p2;
  ComponentSet q2;

  const ComponentSet& component(UComponent c) const;
};

/// True iff value lies in the intersection; each ball is checked in its
/// own latent parameterization via least squares (tolerance 1e-9).
bool membership(const UncertaintyModel& model, UComponent component, const Eigen::VectorXd& value);

/// Uniform latent draw in the norm-ball intersection via rejection from
/// the LInf box; deterministic under a fixed seed. Requires a single ball
/// or a shared-latent pair.
Eigen::VectorXd sample(const UncertaintyModel& model, UComponent component, std::mt19937_64& rng);

/// Extreme points of the latent set {||y||_inf <= rho1} cap {||y||_1 <= n_t rho1}
/// for n_t = 1: the 2n vectors +/- rho1 e_k. Larger n_t is rejected.
std::vector<Eigen::VectorXd> vertices(const ComponentSet& set, int n_t);

/// Demand set in the shared-latent two-ball form used by the bilinear
/// robust counterpart (LInf radius rho1 intersected with L1 radius rho1).
ComponentSet make_bilinear_demand_set(const Eigen::VectorXd& center, const Eigen::MatrixXd& map, double rho1);

/// Designates impedance parameters of one line as uncertain. Each selected
/// (element, part) pair becomes one latent dimension whose map column
/// carries the nominal values at every position of E where the parameter
/// appears, so the latent variable scales the parameter relatively while
/// preserving the real-expansion structure.
struct EntrySelection {
  int line = -1;              // position in oriented_lines(); -1 = all lines
  std::string elements = "mutual";  // mutual | diag | all
  bool real_part = true;
  bool imag_part = true;
};

ComponentSet make_impedance_set(const LinearSystem& ls, const std::vector<EntrySelection>& entries,
                                double gamma1, std::optional<std::pair<NormKind, double>> ball2 = {});

/// Single-ball demand set with nominal center and diag-of-center map
/// (per-unit), mirroring the diag(u) convention.
ComponentSet make_demand_set(const Eigen::VectorXd& nominal_pu, NormKind norm, double rho,
                             bool as_ball1 = false);

/// JSON uncertainty specification (version "utopf-unc/1"), instantiated
/// against an assembled system so that "nominal" centers and
/// "diag-of-center" maps can be materialized.
UncertaintyModel load_uncertainty(const std::string& path, const LinearSystem& ls, const FeasibleRegion& fr);

}  // namespace rdoe
