#include "rdoe/uncertainty.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace rdoe {

using nlohmann::json;

void AffineNormBall::validate() const {
  if (radius < 0) throw ValidationError("norm-ball radius must be nonnegative");
  if (map.rows() != center.size()) throw ValidationError("norm-ball map rows must match the center dimension");
  if (map.cols() < 1) throw ValidationError("norm-ball map needs at least one latent column");
}

double support(const AffineNormBall& ball, const Eigen::VectorXd& y) {
  if (y.size() != ball.center.size())
    throw std::invalid_argument("support: vector dimension does not match the ball's ambient space");
  return ball.center.dot(y) + ball.radius * conic::norm_value(conic::dual_norm(ball.norm), ball.map.transpose() * y);
}

namespace {

/// Regularized lower incomplete gamma P(a, x), series for x < a+1 and
/// continued fraction otherwise.
double gamma_p(double a, double x) {
  if (x <= 0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double chi_square_radius(int n, double epsilon) {
  if (n < 1) throw std::domain_error("chi_square_radius: degrees of freedom must be >= 1");
  if (!(epsilon > 0 && epsilon < 1)) throw std::domain_error("chi_square_radius: epsilon must be in (0, 1)");
  const double target = 1.0 - epsilon;
  const double a = 0.5 * n;
  // Bisection on the CDF P(n/2, x/2).
  double lo = 0.0;
  double hi = 1.0;
  while (gamma_p(a, 0.5 * hi) < target && hi < 1e9) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, 0.5 * mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

int ComponentSet::ambient_dim() const { return any_ball().ambient_dim(); }

const AffineNormBall& ComponentSet::any_ball() const {
  if (ball1) return *ball1;
  if (ball2) return *ball2;
  throw std::logic_error("component has no uncertainty set");
}

void ComponentSet::validate() const {
  if (ball1) ball1->validate();
  if (ball2) ball2->validate();
  if (ball1 && ball2) {
    if (ball1->ambient_dim() != ball2->ambient_dim())
      throw ValidationError("the two balls of one component must share the ambient space");
    if (shared_latent &&
        (ball1->latent_dim() != ball2->latent_dim() || !ball1->center.isApprox(ball2->center, 1e-12) ||
         !ball1->map.isApprox(ball2->map, 1e-12)))
      throw ValidationError("shared_latent requires identical centers and maps");
  }
}

const ComponentSet& UncertaintyModel::component(UComponent c) const {
  switch (c) {
    case UComponent::E: return e;
    case UComponent::P2: return p2;
    case UComponent::Q2: return q2;
  }
  throw std::logic_error("bad component");
}

namespace {

constexpr double kMembershipTol = 1e-9;

bool in_ball(const AffineNormBall& ball, const Eigen::VectorXd& value) {
  const Eigen::VectorXd rhs = value - ball.center;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ball.map);
  const Eigen::VectorXd x = qr.solve(rhs);
  if ((ball.map * x - rhs).lpNorm<Eigen::Infinity>() > kMembershipTol * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
    throw std::domain_error("membership: value outside the affine span of the ball's map");
  return conic::norm_value(ball.norm, x) <= ball.radius + kMembershipTol;
}

}  // namespace

bool membership(const UncertaintyModel& model, UComponent component, const Eigen::VectorXd& value) {
  const ComponentSet& set = model.component(component);
  if (!set.present()) throw std::logic_error("membership: component has no uncertainty set");
  set.validate();
  bool ok = true;
  if (set.ball1) ok = ok && in_ball(*set.ball1, value);
  if (set.ball2) ok = ok && in_ball(*set.ball2, value);
  return ok;
}

Eigen::VectorXd sample(const UncertaintyModel& model, UComponent component, std::mt19937_64& rng) {
  const ComponentSet& set = model.component(component);
  if (!set.present()) throw std::logic_error("sample: component has no uncertainty set");
  set.validate();
  if (set.ball1 && set.ball2 && !set.shared_latent)
    throw std::logic_error("sample: two-ball sets require shared_latent");

  const AffineNormBall& ref = set.any_ball();
  const int n = ref.latent_dim();
  // The LInf circumscribed box of either ball bounds the latent variable.
  double box = std::numeric_limits<double>::infinity();
  if (set.ball1) box = std::min(box, set.ball1->radius);
  if (set.ball2) box = std::min(box, set.ball2->radius);

  std::uniform_real_distribution<double> uni(-box, box);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = uni(rng);
    const bool ok1 = !set.ball1 || conic::norm_value(set.ball1->norm, x) <= set.ball1->radius;
    const bool ok2 = !set.ball2 || conic::norm_value(set.ball2->norm, x) <= set.ball2->radius;
    if (ok1 && ok2) return ref.center + ref.map * x;
  }
  throw std::runtime_error("sample: rejection failed after 1e6 tries (degenerate intersection)");
}

std::vector<Eigen::VectorXd> vertices(const ComponentSet& set, int n_t) {
  set.validate();
  if (!set.ball1 || !set.ball2 || !set.shared_latent)
    throw std::invalid_argument("vertices: need a shared-latent LInf/L1 ball pair");
  if (set.ball1->norm != NormKind::LInf || set.ball2->norm != NormKind::L1)
    throw std::invalid_argument("vertices: ball 1 must be LInf and ball 2 L1");
  const double rho1 = set.ball1->radius;
  const int n = set.ball1->latent_dim();
  if (n_t != 1) {
    throw std::invalid_argument(
        "vertices: only n_t = 1 is supported; general n_t has 2^{n_t} * C(n, n_t) extreme points");
  }
  if (std::abs(set.ball2->radius - n_t * rho1) > 1e-9 * (1.0 + rho1))
    throw std::invalid_argument("vertices: L1 radius must equal n_t * rho1");

  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(k) = rho1;
    out.push_back(v);
    v(k) = -rho1;
    out.push_back(v);
  }
  return out;
}

ComponentSet make_bilinear_demand_set(const Eigen::VectorXd& center, const Eigen::MatrixXd& map, double rho1) {
  ComponentSet set;
  set.ball1 = AffineNormBall{center, map, rho1, NormKind::LInf};
  set.ball2 = AffineNormBall{center, map, rho1, NormKind::L1};
  set.shared_latent = true;
  set.validate();
  return set;
}

namespace {

/// vec(E) positions of one impedance parameter. E carries R at
/// (re,re)/(im,im) block positions and -/+X at (re,im)/(im,re).
struct ParameterPositions {
  std::vector<int> vec_index;
};

int vec_index_of(int row, int col, int n) { return col * n + row; }

void append_parameter_column(const LinearSystem& ls, int line, int ph_a, int ph_b, bool real_part,
                             std::vector<Eigen::VectorXd>& columns) {
  const SystemOrdering& ord = ls.ordering;
  const int n = ord.dim();
  Eigen::VectorXd col = Eigen::VectorXd::Zero(n * n);
  auto put = [&](int r, int c) {
    const int idx = vec_index_of(r, c, n);
    col(idx) = ls.E(r, c);
  };
  std::vector<std::pair<int, int>> element_pairs = {{ph_a, ph_b}};
  if (ph_a != ph_b) element_pairs.push_back({ph_b, ph_a});
  for (auto [pa, pb] : element_pairs) {
    if (real_part) {
      put(ord.re_index(line, pa), ord.re_index(line, pb));
      put(ord.im_index(line, pa), ord.im_index(line, pb));
    } else {
      put(ord.re_index(line, pa), ord.im_index(line, pb));
      put(ord.im_index(line, pa), ord.re_index(line, pb));
    }
  }
  if (col.cwiseAbs().maxCoeff() > 0) columns.push_back(col);
}

}  // namespace

ComponentSet make_impedance_set(const LinearSystem& ls, const std::vector<EntrySelection>& entries, double gamma1,
                                std::optional<std::pair<NormKind, double>> ball2) {
  const int n = ls.ordering.dim();
  const int n_lines = n / 6;
  std::vector<Eigen::VectorXd> columns;
  for (const EntrySelection& sel : entries) {
    std::vector<int> lines;
    if (sel.line < 0)
      for (int l = 0; l < n_lines; ++l) lines.push_back(l);
    else if (sel.line < n_lines)
      lines.push_back(sel.line);
    else
      throw ValidationError("entry selection references line position " + std::to_string(sel.line));

    std::vector<std::pair<int, int>> elems;
    if (sel.elements == "mutual")
      elems = {{0, 1}, {0, 2}, {1, 2}};
    else if (sel.elements == "diag")
      elems = {{0, 0}, {1, 1}, {2, 2}};
    else if (sel.elements == "all")
      elems = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    else
      throw ValidationError("entry selection elements must be mutual, diag or all");

    for (int l : lines)
      for (auto [pa, pb] : elems) {
        if (sel.real_part) append_parameter_column(ls, l, pa, pb, true, columns);
        if (sel.imag_part) append_parameter_column(ls, l, pa, pb, false, columns);
      }
  }
  if (columns.empty()) throw ValidationError("impedance uncertainty selects no nonzero parameter");

  Eigen::VectorXd center(n * n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) center(vec_index_of(r, c, n)) = ls.E(r, c);
  Eigen::MatrixXd map(n * n, columns.size());
  for (int k = 0; k < int(columns.size()); ++k) map.col(k) = columns[k];

  ComponentSet set;
  set.ball1 = AffineNormBall{center, map, gamma1, NormKind::LInf};
  if (ball2) {
    set.ball2 = AffineNormBall{center, map, ball2->second, ball2->first};
    set.shared_latent = true;
  }
  set.validate();
  return set;
}

ComponentSet make_demand_set(const Eigen::VectorXd& nominal_pu, NormKind norm, double rho, bool as_ball1) {
  AffineNormBall ball;
  ball.center = nominal_pu;
  ball.map = Eigen::MatrixXd(nominal_pu.asDiagonal());
  ball.radius = rho;
  ball.norm = norm;
  ComponentSet set;
  if (as_ball1)
    set.ball1 = ball;
  else
    set.ball2 = ball;
  set.validate();
  return set;
}

namespace {

AffineNormBall parse_ball(const json& j, const Eigen::VectorXd& nominal, const std::string& what) {
  AffineNormBall ball;
  ball.radius = j.at("radius").get<double>();
  ball.norm = conic::norm_from_string(j.value("norm", std::string("inf")));

  const json jc = j.value("center", json("nominal"));
  if (jc.is_string() && jc.get<std::string>() == "nominal") {
    ball.center = nominal;
  } else if (jc.is_array()) {
    ball.center.resize(jc.size());
    for (int i = 0; i < int(jc.size()); ++i) ball.center(i) = jc.at(i).get<double>();
  } else {
    throw ParseError(what + ": center must be \"nominal\" or a vector");
  }

  const json jm = j.value("map", json("diag-of-center"));
  if (jm.is_string() && jm.get<std::string>() == "diag-of-center") {
    ball.map = Eigen::MatrixXd(ball.center.asDiagonal());
  } else if (jm.is_array()) {
    const int rows = int(jm.size());
    const int cols = rows > 0 ? int(jm.at(0).size()) : 0;
    ball.map.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) ball.map(r, c) = jm.at(r).at(c).get<double>();
  } else {
    throw ParseError(what + ": map must be \"diag-of-center\" or a matrix");
  }
  ball.validate();
  return ball;
}

std::vector<EntrySelection> parse_entries(const json& j) {
  std::vector<EntrySelection> out;
  for (const json& e : j) {
    EntrySelection sel;
    if (e.contains("line")) sel.line = e.at("line").get<int>();
    sel.elements = e.value("elements", std::string("mutual"));
    if (e.contains("parts")) {
      sel.real_part = false;
      sel.imag_part = false;
      for (const json& p : e.at("parts")) {
        const std::string s = p.get<std::string>();
        if (s == "r")
          sel.real_part = true;
        else if (s == "x")
          sel.imag_part = true;
        else
          throw ParseError("uncertainty entry parts must be \"r\" or \"x\"");
      }
    }
    out.push_back(sel);
  }
  if (out.empty()) out.push_back(EntrySelection{});
  return out;
}

}  // namespace

UncertaintyModel load_uncertainty(const std::string& path, const LinearSystem& ls, const FeasibleRegion& fr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open uncertainty file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
  if (j.value("version", std::string()) != "utopf-unc/1")
    throw ParseError("unsupported uncertainty file version (expected utopf-unc/1)");

  UncertaintyModel model;
  try {
    if (j.contains("e")) {
      const json& je = j.at("e");
      const std::vector<EntrySelection> entries = parse_entries(je.value("entries", json::array()));
      const double gamma1 = je.contains("ball1") ? je.at("ball1").at("radius").get<double>() : 0.0;
      std::optional<std::pair<NormKind, double>> ball2;
      if (je.contains("ball2"))
        ball2 = {conic::norm_from_string(je.at("ball2").value("norm", std::string("2"))),
                 je.at("ball2").at("radius").get<double>()};
      if (!je.contains("ball1") && !je.contains("ball2"))
        throw ParseError("uncertainty component e needs ball1 and/or ball2");
      if (!je.contains("ball1")) {
        // Single ball 2 on designated entries.
        ComponentSet with = make_impedance_set(ls, entries, 0.0, ball2);
        with.ball1.reset();
        with.shared_latent = false;
        model.e = with;
      } else {
        model.e = make_impedance_set(ls, entries, gamma1, ball2);
      }
    }
    if (j.contains("p2")) {
      const json& jp = j.at("p2");
      ComponentSet set;
      if (jp.contains("ball1")) set.ball1 = parse_ball(jp.at("ball1"), fr.p2, "p2 ball1");
      if (jp.contains("ball2")) set.ball2 = parse_ball(jp.at("ball2"), fr.p2, "p2 ball2");
      if (!set.present()) throw ParseError("uncertainty component p2 needs ball1 and/or ball2");
      if (jp.value("shared_latent", false)) set.shared_latent = true;
      set.validate();
      model.p2 = set;
    }
    if (j.contains("q2")) {
      const json& jq = j.at("q2");
      ComponentSet set;
      if (jq.contains("ball1")) set.ball1 = parse_ball(jq.at("ball1"), fr.q2, "q2 ball1");
      if (jq.contains("ball2")) set.ball2 = parse_ball(jq.at("ball2"), fr.q2, "q2 ball2");
      if (!set.present()) throw ParseError("uncertainty component q2 needs ball1 and/or ball2");
      if (jq.value("shared_latent", false)) set.shared_latent = true;
      set.validate();
      model.q2 = set;
    }
  } catch (const json::exception& e) {
    throw ParseError("schema error in '" + path + "': " + e.what());
  }
  return model;
}

}  // namespace rdoe
