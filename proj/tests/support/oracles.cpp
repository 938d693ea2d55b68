#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace oracles {

rdoe::NetworkModel random_radial_network(unsigned seed, int n_buses, int n_active, int n_passive,
                                         double z_scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<rdoe::Bus> buses;
  for (int i = 0; i < n_buses; ++i) {
    rdoe::Bus b;
    b.id = "n" + std::to_string(i);
    b.vmin = 0.95;
    b.vmax = 1.05;
    b.is_reference = (i == 0);
    buses.push_back(b);
  }

  std::vector<rdoe::Line> lines;
  for (int i = 1; i < n_buses; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    const int parent = pick(rng);
    const double len = (0.2 + 0.8 * uni(rng)) * z_scale;  // km
    const double rs = (0.3 + 0.4 * uni(rng)) * len;
    const double xs = (0.2 + 0.3 * uni(rng)) * len;
    const double rm = (0.03 + 0.07 * uni(rng)) * len;
    const double xm = (0.08 + 0.14 * uni(rng)) * len;
    rdoe::Line ln;
    ln.from = buses[parent].id;
    ln.to = buses[i].id;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) ln.z_ohm(a, b) = a == b ? rdoe::Complex(rs, xs) : rdoe::Complex(rm, xm);
    lines.push_back(ln);
  }
  std::shuffle(lines.begin(), lines.end(), rng);

  std::vector<rdoe::Customer> customers;
  std::uniform_int_distribution<int> bus_pick(1, n_buses - 1);
  std::uniform_int_distribution<int> phase_pick(0, 2);
  for (int i = 0; i < n_active; ++i) {
    rdoe::Customer c;
    c.id = "a" + std::to_string(i);
    c.bus = buses[bus_pick(rng)].id;
    c.phase = rdoe::Phase(phase_pick(rng));
    c.kind = rdoe::CustomerKind::active;
    customers.push_back(c);
  }
  for (int i = 0; i < n_passive; ++i) {
    rdoe::Customer c;
    c.id = "p" + std::to_string(i);
    c.bus = buses[bus_pick(rng)].id;
    c.phase = rdoe::Phase(phase_pick(rng));
    c.kind = rdoe::CustomerKind::passive;
    c.p_forecast_kw = 0.5 + 2.5 * uni(rng);
    c.q_forecast_kvar = 0.1 + 0.4 * uni(rng);
    customers.push_back(c);
  }

  rdoe::BaseUnits base{5.0, 230.0};
  std::array<rdoe::Complex, 3> vref = {std::polar(1.0, 0.0), std::polar(1.0, -2.0 * M_PI / 3.0),
                                       std::polar(1.0, 2.0 * M_PI / 3.0)};
  return rdoe::NetworkModel::validated(base, vref, std::move(buses), std::move(lines), std::move(customers));
}

bool is_radial_connected(int n_buses, const std::vector<std::pair<int, int>>& edges) {
  if (int(edges.size()) != n_buses - 1) return false;
  std::vector<int> parent(n_buses);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra == rb) return false;  // cycle
    parent[ra] = rb;
  }
  for (int i = 1; i < n_buses; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

long long integer_determinant(const Eigen::MatrixXd& m) {
  const int n = int(m.rows());
  std::vector<std::vector<long long>> a(n, std::vector<long long>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = llround(m(i, j));

  long long prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      int swap = -1;
      for (int i = k + 1; i < n; ++i)
        if (a[i][k] != 0) {
          swap = i;
          break;
        }
      if (swap < 0) return 0;
      std::swap(a[k], a[swap]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

Eigen::Vector3cd newton_two_bus(const Eigen::Vector3cd& v0, const Eigen::Matrix3cd& z_pu,
                                const Eigen::Vector3cd& s_pu, double tol, int max_iter) {
  auto residual = [&](const Eigen::Vector3cd& v) -> Eigen::Vector3cd {
    Eigen::Vector3cd inj;
    for (int p = 0; p < 3; ++p) inj(p) = std::conj(s_pu(p) / v(p));
    return v - v0 + z_pu * inj;
  };
  auto pack = [](const Eigen::Vector3cd& v) {
    Eigen::VectorXd x(6);
    for (int p = 0; p < 3; ++p) {
      x(2 * p) = v(p).real();
      x(2 * p + 1) = v(p).imag();
    }
    return x;
  };
  auto unpack = [](const Eigen::VectorXd& x) {
    Eigen::Vector3cd v;
    for (int p = 0; p < 3; ++p) v(p) = rdoe::Complex(x(2 * p), x(2 * p + 1));
    return v;
  };

  Eigen::VectorXd x = pack(v0);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::Vector3cd f = residual(unpack(x));
    Eigen::VectorXd fx(6);
    for (int p = 0; p < 3; ++p) {
      fx(2 * p) = f(p).real();
      fx(2 * p + 1) = f(p).imag();
    }
    if (fx.lpNorm<Eigen::Infinity>() < tol) break;
    Eigen::MatrixXd jac(6, 6);
    const double eps = 1e-7;
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += eps;
      xm(j) -= eps;
      const Eigen::Vector3cd fp = residual(unpack(xp));
      const Eigen::Vector3cd fm = residual(unpack(xm));
      for (int p = 0; p < 3; ++p) {
        jac(2 * p, j) = (fp(p).real() - fm(p).real()) / (2 * eps);
        jac(2 * p + 1, j) = (fp(p).imag() - fm(p).imag()) / (2 * eps);
      }
    }
    x -= jac.partialPivLu().solve(fx);
  }
  return unpack(x);
}

Eigen::MatrixXcd newton_pf(const rdoe::NetworkModel& net, const Eigen::VectorXd& p_kw,
                           const Eigen::VectorXd& q_kvar, double tol, int max_iter) {
  const auto& lines = net.oriented_lines();
  const int n_bus = int(net.buses().size());
  const int ref = net.reference_index();
  const auto& order = net.nonref_order();
  const int nn = int(order.size());

  std::vector<int> pos(n_bus, -1);
  for (int i = 0; i < nn; ++i) pos[order[i]] = i;

  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n_bus, 3);
  for (int m = 0; m < int(net.customers().size()); ++m) {
    const auto& c = net.customers()[m];
    s(net.bus_index(c.bus), int(c.phase)) += rdoe::Complex(p_kw(m), q_kvar(m)) / net.base().s_kva;
  }

  std::vector<Eigen::Matrix3cd> zinv;
  for (const auto& ln : lines) zinv.push_back(ln.z_pu.inverse());

  auto unpack = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXcd v(n_bus, 3);
    for (int p = 0; p < 3; ++p) v(ref, p) = net.v_ref()[p];
    for (int i = 0; i < nn; ++i)
      for (int p = 0; p < 3; ++p)
        v(order[i], p) = rdoe::Complex(x(6 * i + 2 * p), x(6 * i + 2 * p + 1));
    return v;
  };
  auto residual = [&](const Eigen::VectorXd& x) {
    const Eigen::MatrixXcd v = unpack(x);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(6 * nn);
    for (int k = 0; k < int(lines.size()); ++k) {
      Eigen::Vector3cd dv;
      for (int p = 0; p < 3; ++p) dv(p) = v(lines[k].parent_bus, p) - v(lines[k].child_bus, p);
      const Eigen::Vector3cd i_line = zinv[k] * dv;
      for (int p = 0; p < 3; ++p) {
        const int child = pos[lines[k].child_bus];
        r(6 * child + 2 * p) += i_line(p).real();
        r(6 * child + 2 * p + 1) += i_line(p).imag();
        if (lines[k].parent_bus != ref) {
          const int parent = pos[lines[k].parent_bus];
          r(6 * parent + 2 * p) -= i_line(p).real();
          r(6 * parent + 2 * p + 1) -= i_line(p).imag();
        }
      }
    }
    for (int i = 0; i < nn; ++i)
      for (int p = 0; p < 3; ++p) {
        const rdoe::Complex load = std::conj(s(order[i], p) / v(order[i], p));
        r(6 * i + 2 * p) -= load.real();
        r(6 * i + 2 * p + 1) -= load.imag();
      }
    return r;
  };

  Eigen::VectorXd x(6 * nn);
  for (int i = 0; i < nn; ++i)
    for (int p = 0; p < 3; ++p) {
      x(6 * i + 2 * p) = net.v_ref()[p].real();
      x(6 * i + 2 * p + 1) = net.v_ref()[p].imag();
    }
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd f = residual(x);
    if (f.lpNorm<Eigen::Infinity>() < tol) break;
    Eigen::MatrixXd jac(6 * nn, 6 * nn);
    const double eps = 1e-7;
    for (int j = 0; j < 6 * nn; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += eps;
      xm(j) -= eps;
      jac.col(j) = (residual(xp) - residual(xm)) / (2 * eps);
    }
    x -= jac.partialPivLu().solve(f);
  }
  return unpack(x);
}

bool vertex_enum_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                    double& best_value, Eigen::VectorXd& best_x) {
  const int m = int(G.rows());
  const int d = int(G.cols());
  bool found = false;
  best_value = -std::numeric_limits<double>::infinity();

  std::vector<int> idx(d);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == d) {
      Eigen::MatrixXd B(d, d);
      Eigen::VectorXd rhs(d);
      for (int i = 0; i < d; ++i) {
        B.row(i) = G.row(idx[i]);
        rhs(i) = h(idx[i]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd x = lu.solve(rhs);
      if (((G * x - h).array() <= 1e-9).all()) {
        const double val = c.dot(x);
        if (!found || val > best_value) {
          found = true;
          best_value = val;
          best_x = x;
        }
      }
      return;
    }
    for (int i = start; i <= m - (d - depth); ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return found;
}

double support_sample_max(const rdoe::AffineNormBall& ball, const Eigen::VectorXd& y, int n_samples,
                          std::mt19937_64& rng) {
  // Linear functionals attain their maximum at extreme points, so the
  // Monte-Carlo maximization draws from the ball's extreme-point set:
  // sign vectors (LInf), signed scaled basis vectors (L1), and uniform
  // sphere directions (L2). The draw never looks at y.
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const int n = ball.latent_dim();
  std::uniform_int_distribution<int> axis(0, n - 1);
  double best = -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd my = ball.map.transpose() * y;  // value = center'y + (map'y)'x
  const double base = ball.center.dot(y);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    switch (ball.norm) {
      case rdoe::conic::NormKind::LInf:
        for (int i = 0; i < n; ++i) x(i) = coin(rng) ? ball.radius : -ball.radius;
        break;
      case rdoe::conic::NormKind::L1:
        x(axis(rng)) = coin(rng) ? ball.radius : -ball.radius;
        break;
      case rdoe::conic::NormKind::L2: {
        for (int i = 0; i < n; ++i) x(i) = gauss(rng);
        const double nv = x.norm();
        if (nv == 0.0) continue;
        x *= ball.radius / nv;
        break;
      }
    }
    best = std::max(best, base + my.dot(x));
  }
  return best;
}

double chi2_quantile_by_integration(int n, double eps) {
  // CDF(x) integrated in t = sqrt(u): densities stay bounded for n >= 1.
  const double a = 0.5 * n;
  const double log_norm = -a * std::log(2.0) - std::lgamma(a);
  auto integrand = [&](double t) {
    if (t <= 0.0) return n == 1 ? 2.0 * std::exp(log_norm) : 0.0;
    // 2 t^{n-1} e^{-t^2/2} / (2^{n/2} Gamma(n/2))
    return 2.0 * std::exp(log_norm + (n - 1) * std::log(t) - 0.5 * t * t);
  };
  auto cdf = [&](double x) {
    const double upper = std::sqrt(x);
    const int steps = 4000;  // Simpson, even count
    const double dt = upper / steps;
    double sum = integrand(0.0) + integrand(upper);
    for (int i = 1; i < steps; ++i) sum += integrand(i * dt) * (i % 2 ? 4.0 : 2.0);
    return sum * dt / 3.0;
  };
  const double target = 1.0 - eps;
  double lo = 0.0, hi = 1.0;
  while (cdf(hi) < target && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double socp_first_order_max(const Eigen::VectorXd& c, const std::vector<Eigen::VectorXd>& centers,
                            const std::vector<double>& radii, double box, int iters) {
  const int d = int(c.size());
  auto project = [&](Eigen::VectorXd x) {
    // Dykstra's alternating projections onto the balls and the box.
    const int sets = int(centers.size()) + 1;
    std::vector<Eigen::VectorXd> corr(sets, Eigen::VectorXd::Zero(d));
    for (int sweep = 0; sweep < 60; ++sweep) {
      for (int k = 0; k < sets; ++k) {
        const Eigen::VectorXd y = x + corr[k];
        Eigen::VectorXd proj;
        if (k < int(centers.size())) {
          const Eigen::VectorXd delta = y - centers[k];
          const double nrm = delta.norm();
          proj = nrm <= radii[k] ? y : Eigen::VectorXd(centers[k] + delta * (radii[k] / nrm));
        } else {
          proj = y.cwiseMax(-box).cwiseMin(box);
        }
        corr[k] = y - proj;
        x = proj;
      }
    }
    return x;
  };

  Eigen::VectorXd x = project(Eigen::VectorXd::Zero(d));
  for (int it = 1; it <= iters; ++it) {
    const double step = 1.0 / std::sqrt(double(it));
    x = project(x + step * c);
  }
  return c.dot(x);
}

}  // namespace oracles
