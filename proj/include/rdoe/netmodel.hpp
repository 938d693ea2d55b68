#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rdoe {

using Complex = std::complex<double>;

/// Thrown when an input file cannot be read or does not match the schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a parsed model violates a structural invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Phase : int { a = 0, b = 1, c = 2 };

Phase phase_from_string(const std::string& s);
std::string to_string(Phase p);

/// Non-empty subset of {a, b, c}.
class PhaseSet {
 public:
  static PhaseSet parse(const std::string& s);
  static PhaseSet abc() { return PhaseSet(0b111); }
  static PhaseSet single(Phase p) { return PhaseSet(uint8_t(1u << int(p))); }

  bool contains(Phase p) const { return mask_ & (1u << int(p)); }
  int count() const;
  std::string str() const;

 private:
  explicit PhaseSet(uint8_t mask);
  uint8_t mask_;
};

struct Bus {
  std::string id;
  double vmin = 0.95;   // p.u.
  double vmax = 1.05;   // p.u.
  bool is_reference = false;
};

struct Line {
  std::string from;
  std::string to;
  Eigen::Matrix3cd z_ohm;  // symmetric phase impedance matrix
};

enum class CustomerKind { active, passive };

struct Customer {
  std::string id;
  std::string bus;
  Phase phase = Phase::a;
  CustomerKind kind = CustomerKind::passive;
  double p_min_kw = -7.0;
  double p_max_kw = 7.0;
  double q_min_kvar = -1.0;
  double q_max_kvar = 1.0;
  double p_forecast_kw = 0.0;   // passive only
  double q_forecast_kvar = 0.0; // passive only

  bool is_active() const { return kind == CustomerKind::active; }
};

/// Per-unit bases. s_kva is the single-phase power base, v_volt the
/// line-to-neutral voltage base.
struct BaseUnits {
  double s_kva = 1.0;
  double v_volt = 230.0;

  double z_base_ohm() const { return v_volt * v_volt / (s_kva * 1e3); }
};

/// A line after orientation away from the reference bus.
struct OrientedLine {
  int parent_bus;        // index into buses()
  int child_bus;         // index into buses()
  int source_line;       // index into the file-order line list
  Eigen::Matrix3cd z_pu; // impedance in per-unit
};

/// Validated unbalanced radial network. Immutable after construction;
/// safe to share across threads read-only.
class NetworkModel {
 public:
  /// Validates all invariants (radial connected topology, unique reference,
  /// impedance symmetry, customer attachment) and orients every line away
  /// from the reference by BFS with children visited in bus-id order, so
  /// the resulting ordering does not depend on file order.
  static NetworkModel validated(BaseUnits base,
                                std::array<std::array<double, 2>, 3> v_ref_polar,
                                std::vector<Bus> buses,
                                std::vector<Line> lines,
                                std::vector<Customer> customers);
  static NetworkModel validated(BaseUnits base,
                                std::array<Complex, 3> v_ref_pu,
                                std::vector<Bus> buses,
                                std::vector<Line> lines,
                                std::vector<Customer> customers);

  const BaseUnits& base() const { return base_; }
  const std::array<Complex, 3>& v_ref() const { return v_ref_; }
  /// (magnitude, angle in degrees) per phase; the serialized form.
  const std::array<std::array<double, 2>, 3>& v_ref_polar() const { return v_ref_polar_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<Customer>& customers() const { return customers_; }

  int reference_index() const { return reference_index_; }
  int bus_index(const std::string& id) const;

  /// Oriented lines in BFS discovery order; line k is the parent edge of
  /// non-reference bus k in nonref_order().
  const std::vector<OrientedLine>& oriented_lines() const { return oriented_; }

  /// Non-reference bus indices in BFS discovery order.
  const std::vector<int>& nonref_order() const { return nonref_order_; }

  int n_active() const;
  int n_passive() const;
  std::vector<int> active_customers() const;   // indices into customers()
  std::vector<int> passive_customers() const;

  PhaseSet bus_phases(int /*bus*/) const { return PhaseSet::abc(); }

 private:
  NetworkModel() = default;

  BaseUnits base_;
  std::array<Complex, 3> v_ref_;
  std::array<std::array<double, 2>, 3> v_ref_polar_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<Customer> customers_;
  int reference_index_ = -1;
  std::vector<OrientedLine> oriented_;
  std::vector<int> nonref_order_;
};

/// Oriented node-line incidence over non-reference buses: entry +1 if the
/// line is the bus's parent edge (towards the reference), -1 if it leaves
/// the bus away from the reference. Square and unimodular for a radial
/// network.
struct IncidenceResult {
  Eigen::MatrixXd node_line;  // rows: nonref_order(), cols: oriented_lines()
  std::vector<int> row_bus;   // bus index per row
};

IncidenceResult incidence(const NetworkModel& network);

/// Reads the canonical JSON network file (version "utopf-net/1").
NetworkModel load_network(const std::string& path);

/// Writes the canonical form; load_network(save_network(m)) == m.
void save_network(const NetworkModel& network, const std::string& path);

}  // namespace rdoe
