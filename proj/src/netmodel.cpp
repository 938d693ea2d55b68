#include "rdoe/netmodel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rdoe {

using nlohmann::json;

Phase phase_from_string(const std::string& s) {
  if (s == "a") return Phase::a;
  if (s == "b") return Phase::b;
  if (s == "c") return Phase::c;
  throw ParseError("unknown phase '" + s + "' (expected a, b or c)");
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::a: return "a";
    case Phase::b: return "b";
    case Phase::c: return "c";
  }
  return "?";
}

PhaseSet::PhaseSet(uint8_t mask) : mask_(mask) {
  if (mask_ == 0 || mask_ > 0b111) throw ValidationError("phase set must be a non-empty subset of {a,b,c}");
}

PhaseSet PhaseSet::parse(const std::string& s) {
  uint8_t mask = 0;
  for (char ch : s) {
    int bit;
    switch (ch) {
      case 'a': bit = 0; break;
      case 'b': bit = 1; break;
      case 'c': bit = 2; break;
      default: throw ParseError(std::string("unknown phase character '") + ch + "'");
    }
    if (mask & (1u << bit)) throw ValidationError("duplicate phase '" + std::string(1, ch) + "' in phase set");
    mask |= uint8_t(1u << bit);
  }
  return PhaseSet(mask);
}

int PhaseSet::count() const {
  int n = 0;
  for (int i = 0; i < 3; ++i) n += (mask_ >> i) & 1;
  return n;
}

std::string PhaseSet::str() const {
  std::string out;
  for (int i = 0; i < 3; ++i)
    if (mask_ & (1u << i)) out += char('a' + i);
  return out;
}

NetworkModel NetworkModel::validated(BaseUnits base,
                                     std::array<Complex, 3> v_ref_pu,
                                     std::vector<Bus> buses,
                                     std::vector<Line> lines,
                                     std::vector<Customer> customers) {
  std::array<std::array<double, 2>, 3> polar;
  for (int p = 0; p < 3; ++p)
    polar[p] = {std::abs(v_ref_pu[p]), std::arg(v_ref_pu[p]) * 180.0 / 3.14159265358979323846};
  return validated(base, polar, std::move(buses), std::move(lines), std::move(customers));
}

NetworkModel NetworkModel::validated(BaseUnits base,
                                     std::array<std::array<double, 2>, 3> v_ref_polar,
                                     std::vector<Bus> buses,
                                     std::vector<Line> lines,
                                     std::vector<Customer> customers) {
  NetworkModel m;
  m.base_ = base;
  m.v_ref_polar_ = v_ref_polar;
  for (int p = 0; p < 3; ++p)
    m.v_ref_[p] = std::polar(v_ref_polar[p][0], v_ref_polar[p][1] * 3.14159265358979323846 / 180.0);
  m.buses_ = std::move(buses);
  m.lines_ = std::move(lines);
  m.customers_ = std::move(customers);

  if (base.s_kva <= 0 || base.v_volt <= 0) throw ValidationError("per-unit base must be positive");
  if (m.buses_.empty()) throw ValidationError("network has no buses");
  if (m.buses_.size() < 2)
    throw ValidationError("no reference-connected tree: network needs at least one non-reference bus");

  std::map<std::string, int> index;
  for (int i = 0; i < int(m.buses_.size()); ++i) {
    const Bus& b = m.buses_[i];
    if (b.id.empty()) throw ValidationError("bus with empty id");
    if (!index.emplace(b.id, i).second) throw ValidationError("duplicate bus id '" + b.id + "'");
    if (!(0 < b.vmin && b.vmin < b.vmax)) throw ValidationError("bus '" + b.id + "': need 0 < vmin < vmax");
    if (b.is_reference) {
      if (m.reference_index_ >= 0) throw ValidationError("more than one reference bus");
      m.reference_index_ = i;
    }
  }
  if (m.reference_index_ < 0) throw ValidationError("no reference bus");

  if (m.lines_.size() != m.buses_.size() - 1)
    throw ValidationError("radial network requires |lines| = |buses| - 1 (got " +
                          std::to_string(m.lines_.size()) + " lines, " +
                          std::to_string(m.buses_.size()) + " buses)");

  // Adjacency with ends resolved; impedance symmetry and positive series
  // resistance checked per line.
  std::vector<std::vector<std::pair<int, int>>> adj(m.buses_.size());  // (neighbor bus, line)
  for (int k = 0; k < int(m.lines_.size()); ++k) {
    const Line& ln = m.lines_[k];
    auto fi = index.find(ln.from);
    auto ti = index.find(ln.to);
    if (fi == index.end()) throw ValidationError("line references unknown bus '" + ln.from + "'");
    if (ti == index.end()) throw ValidationError("line references unknown bus '" + ln.to + "'");
    if (fi->second == ti->second) throw ValidationError("line from bus '" + ln.from + "' to itself");
    if (!ln.z_ohm.isApprox(ln.z_ohm.transpose(), 1e-12))
      throw ValidationError("line " + ln.from + "-" + ln.to + ": impedance matrix must be symmetric");
    for (int p = 0; p < 3; ++p)
      if (ln.z_ohm(p, p).real() <= 0)
        throw ValidationError("line " + ln.from + "-" + ln.to + ": diagonal impedance needs positive resistance");
    adj[fi->second].push_back({ti->second, k});
    adj[ti->second].push_back({fi->second, k});
  }

  // BFS from the reference; children visited in bus-id order so the
  // orientation is independent of file order.
  for (auto& nb : adj)
    std::sort(nb.begin(), nb.end(), [&](const auto& x, const auto& y) {
      return m.buses_[x.first].id < m.buses_[y.first].id;
    });

  const double z_base = base.z_base_ohm();
  std::vector<bool> seen(m.buses_.size(), false);
  seen[m.reference_index_] = true;
  std::queue<int> frontier;
  frontier.push(m.reference_index_);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (auto [v, k] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      m.nonref_order_.push_back(v);
      m.oriented_.push_back({u, v, k, m.lines_[k].z_ohm / z_base});
      frontier.push(v);
    }
  }
  if (int(m.nonref_order_.size()) != int(m.buses_.size()) - 1)
    throw ValidationError("no reference-connected tree: network is disconnected or has a cycle");

  for (const Customer& c : m.customers_) {
    if (c.id.empty()) throw ValidationError("customer with empty id");
    auto bi = index.find(c.bus);
    if (bi == index.end()) throw ValidationError("customer '" + c.id + "' references unknown bus '" + c.bus + "'");
    if (!m.bus_phases(bi->second).contains(c.phase))
      throw ValidationError("customer '" + c.id + "': phase not present at bus '" + c.bus + "'");
    if (!(c.p_min_kw < c.p_max_kw))
      throw ValidationError("customer '" + c.id + "': degenerate active power bounds");
    if (!(c.q_min_kvar < c.q_max_kvar))
      throw ValidationError("customer '" + c.id + "': degenerate reactive power bounds");
  }
  std::set<std::string> cust_ids;
  for (const Customer& c : m.customers_)
    if (!cust_ids.insert(c.id).second) throw ValidationError("duplicate customer id '" + c.id + "'");

  for (auto v : m.v_ref_)
    if (!(std::abs(v) > 0)) throw ValidationError("reference voltage magnitude must be positive");

  return m;
}

int NetworkModel::bus_index(const std::string& id) const {
  for (int i = 0; i < int(buses_.size()); ++i)
    if (buses_[i].id == id) return i;
  throw ValidationError("unknown bus id '" + id + "'");
}

int NetworkModel::n_active() const { return int(active_customers().size()); }
int NetworkModel::n_passive() const { return int(passive_customers().size()); }

std::vector<int> NetworkModel::active_customers() const {
  std::vector<int> out;
  for (int i = 0; i < int(customers_.size()); ++i)
    if (customers_[i].is_active()) out.push_back(i);
  return out;
}

std::vector<int> NetworkModel::passive_customers() const {
  std::vector<int> out;
  for (int i = 0; i < int(customers_.size()); ++i)
    if (!customers_[i].is_active()) out.push_back(i);
  return out;
}

IncidenceResult incidence(const NetworkModel& network) {
  const auto& order = network.nonref_order();
  const auto& lines = network.oriented_lines();
  const int n = int(order.size());

  std::vector<int> row_of_bus(network.buses().size(), -1);
  for (int r = 0; r < n; ++r) row_of_bus[order[r]] = r;

  IncidenceResult res;
  res.node_line = Eigen::MatrixXd::Zero(n, n);
  res.row_bus = order;
  for (int k = 0; k < n; ++k) {
    res.node_line(row_of_bus[lines[k].child_bus], k) = 1.0;
    if (lines[k].parent_bus != network.reference_index())
      res.node_line(row_of_bus[lines[k].parent_bus], k) = -1.0;
  }
  return res;
}

namespace {

constexpr const char* kFormatVersion = "utopf-net/1";

json require(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Eigen::Matrix3cd parse_z(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("impedance must be a 3x3 array of [re_ohm, im_ohm]");
  Eigen::Matrix3cd z;
  for (int r = 0; r < 3; ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || row.size() != 3) throw ParseError("impedance must be a 3x3 array of [re_ohm, im_ohm]");
    for (int c = 0; c < 3; ++c) {
      const json& cell = row.at(c);
      if (!cell.is_array() || cell.size() != 2) throw ParseError("impedance entries must be [re_ohm, im_ohm] pairs");
      z(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return z;
}

json dump_z(const Eigen::Matrix3cd& z) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back({z(r, c).real(), z(r, c).imag()});
    out.push_back(row);
  }
  return out;
}

}  // namespace

NetworkModel load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }

  try {
    if (require(j, "version").get<std::string>() != kFormatVersion)
      throw ParseError("unsupported network file version (expected " + std::string(kFormatVersion) + ")");

    BaseUnits base;
    const json jb = require(j, "base");
    base.s_kva = require(jb, "s_kva").get<double>();
    base.v_volt = require(jb, "v_volt").get<double>();

    const json jv = require(j, "v_ref");
    if (!jv.is_array() || jv.size() != 3) throw ParseError("v_ref must list three phases");
    std::array<std::array<double, 2>, 3> vref;
    for (int p = 0; p < 3; ++p)
      vref[p] = {require(jv.at(p), "mag").get<double>(), require(jv.at(p), "angle_deg").get<double>()};

    std::vector<Bus> buses;
    for (const json& e : require(j, "buses")) {
      Bus b;
      b.id = require(e, "id").get<std::string>();
      if (e.contains("vmin")) b.vmin = e.at("vmin").get<double>();
      if (e.contains("vmax")) b.vmax = e.at("vmax").get<double>();
      if (e.contains("reference")) b.is_reference = e.at("reference").get<bool>();
      buses.push_back(b);
    }

    std::vector<Line> lines;
    for (const json& e : require(j, "lines")) {
      Line ln;
      ln.from = require(e, "from").get<std::string>();
      ln.to = require(e, "to").get<std::string>();
      ln.z_ohm = parse_z(require(e, "z"));
      lines.push_back(ln);
    }

    std::vector<Customer> customers;
    for (const json& e : require(j, "customers")) {
      Customer c;
      c.id = require(e, "id").get<std::string>();
      c.bus = require(e, "bus").get<std::string>();
      c.phase = phase_from_string(require(e, "phase").get<std::string>());
      const std::string kind = require(e, "kind").get<std::string>();
      if (kind == "active")
        c.kind = CustomerKind::active;
      else if (kind == "passive")
        c.kind = CustomerKind::passive;
      else
        throw ParseError("customer '" + c.id + "': kind must be active or passive");
      if (e.contains("p_min_kw")) c.p_min_kw = e.at("p_min_kw").get<double>();
      if (e.contains("p_max_kw")) c.p_max_kw = e.at("p_max_kw").get<double>();
      if (e.contains("q_min_kvar")) c.q_min_kvar = e.at("q_min_kvar").get<double>();
      if (e.contains("q_max_kvar")) c.q_max_kvar = e.at("q_max_kvar").get<double>();
      if (c.kind == CustomerKind::passive) {
        c.p_forecast_kw = require(e, "p_kw").get<double>();
        c.q_forecast_kvar = require(e, "q_kvar").get<double>();
      }
      customers.push_back(c);
    }

    return NetworkModel::validated(base, vref, std::move(buses), std::move(lines), std::move(customers));
  } catch (const json::exception& e) {
    throw ParseError("schema error in '" + path + "': " + e.what());
  }
}

void save_network(const NetworkModel& m, const std::string& path) {
  json j;
  j["version"] = kFormatVersion;
  j["base"] = {{"s_kva", m.base().s_kva}, {"v_volt", m.base().v_volt}};
  json jv = json::array();
  for (int p = 0; p < 3; ++p)
    jv.push_back({{"mag", m.v_ref_polar()[p][0]}, {"angle_deg", m.v_ref_polar()[p][1]}});
  j["v_ref"] = jv;

  json jb = json::array();
  for (const Bus& b : m.buses()) {
    json e = {{"id", b.id}, {"vmin", b.vmin}, {"vmax", b.vmax}};
    if (b.is_reference) e["reference"] = true;
    jb.push_back(e);
  }
  j["buses"] = jb;

  json jl = json::array();
  for (const Line& ln : m.lines())
    jl.push_back({{"from", ln.from}, {"to", ln.to}, {"z", dump_z(ln.z_ohm)}});
  j["lines"] = jl;

  json jc = json::array();
  for (const Customer& c : m.customers()) {
    json e = {{"id", c.id},
              {"bus", c.bus},
              {"phase", to_string(c.phase)},
              {"kind", c.is_active() ? "active" : "passive"},
              {"p_min_kw", c.p_min_kw},
              {"p_max_kw", c.p_max_kw},
              {"q_min_kvar", c.q_min_kvar},
              {"q_max_kvar", c.q_max_kvar}};
    if (!c.is_active()) {
      e["p_kw"] = c.p_forecast_kw;
      e["q_kvar"] = c.q_forecast_kvar;
    }
    jc.push_back(e);
  }
  j["customers"] = jc;

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write network file '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace rdoe
