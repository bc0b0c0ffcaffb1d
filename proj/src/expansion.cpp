#include "rvh/expansion.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace rvh {

namespace {

Series pow_int(const Series& a, int p) {
  Series out = Series::constant(1.0, a.order(), a.m(), a.codim1());
  for (int i = 0; i < p; ++i) out = mul(out, a);
  return out;
}

Series dot(const std::vector<Series>& a, const std::vector<Series>& b) {
  Series out = mul(a[0], b[0]);
  for (size_t j = 1; j < a.size(); ++j) out = add(out, mul(a[j], b[j]));
  return out;
}

Eigen::ArrayXd col(const Eigen::MatrixXd& mat, int j) { return mat.col(j).array(); }

// Graph embedding E(s,x) = gamma(s) + u^i(s,x) N_i(s) and its derivatives.
struct Embedding {
  std::vector<Series> E, Es, Ex;
};

Embedding embed(const std::vector<Series>& u, const BoundaryManifold& b) {
  const int n = b.ambient_dim();
  const Series& u0 = u[0];
  Embedding e;
  for (int j = 0; j < n; ++j) {
    Series Ej(u0.order(), u0.m(), u0.codim1());
    Ej.set_coeff(0, false, Coeff(col(b.points(), j)));
    for (size_t i = 0; i < u.size(); ++i)
      Ej = add(Ej, scale(u[i], Coeff(col(b.normal(int(i)), j))));
    e.Es.push_back(d_s(Ej, b));
    e.Ex.push_back(d_x(Ej));
    e.E.push_back(std::move(Ej));
  }
  return e;
}

struct Metric {
  Series h_ss, h_sx, h_xx, q, hss, hsx, hxx;  // hss etc are the inverse components
};

Metric curve_metric(const Embedding& e) {
  Metric met;
  met.h_ss = dot(e.Es, e.Es);
  met.h_sx = dot(e.Es, e.Ex);
  Series exex = dot(e.Ex, e.Ex);
  met.h_xx = add(Series::constant(1.0, exex.order(), exex.m(), exex.codim1()), exex);
  Series det = sub(mul(met.h_ss, met.h_xx), mul(met.h_sx, met.h_sx));
  Series inv_det = invert(det);
  met.q = sqrt_series(det);
  met.hss = mul(met.h_xx, inv_det);
  met.hxx = mul(met.h_ss, inv_det);
  met.hsx = scale(mul(met.h_sx, inv_det), Coeff(-1.0));
  return met;
}

std::vector<Series> curve_defect(const std::vector<Series>& u, const BoundaryManifold& b, int m) {
  const int n = b.ambient_dim();
  Embedding e = embed(u, b);
  Metric met = curve_metric(e);
  Series inv_q = invert(met.q);

  // Laplace-Beltrami of the spatial embedding components
  std::vector<Series> lap;
  for (int j = 0; j < n; ++j) {
    Series flux_s = mul(met.q, add(mul(met.hss, e.Es[j]), mul(met.hsx, e.Ex[j])));
    Series flux_x = mul(met.q, add(mul(met.hsx, e.Es[j]), mul(met.hxx, e.Ex[j])));
    lap.push_back(mul(inv_q, add(d_s(flux_s, b), d_x(flux_x))));
  }

  std::vector<Series> R;
  for (int i = 0; i < n - 1; ++i) {
    auto frame_dot = [&](const std::vector<Series>& v) {
      Series acc = scale(v[0], Coeff(col(b.normal(i), 0)));
      for (int j = 1; j < n; ++j) acc = add(acc, scale(v[j], Coeff(col(b.normal(i), j))));
      return acc;
    };
    Series tangential = add(mul(met.hsx, frame_dot(e.Es)), mul(met.hxx, frame_dot(e.Ex)));
    Series D = sub(frame_dot(lap).shifted(1), scale(tangential, Coeff(double(m))));
    R.push_back(D.shifted(1));
  }
  return R;
}

struct SphereMetric {
  Series rho, rho_x, h_xx, hxx, q;
};

SphereMetric sphere_metric(const Series& u0, double Rad, int m) {
  SphereMetric met;
  Series Rconst = Series::constant(Rad, u0.order(), u0.m(), u0.codim1());
  met.rho = add(Rconst, u0);
  met.rho_x = d_x(met.rho);
  Series one = Series::constant(1.0, met.rho_x.order(), u0.m(), u0.codim1());
  met.h_xx = add(one, mul(met.rho_x, met.rho_x));
  met.hxx = invert(met.h_xx);
  // volume factor relative to the boundary measure R^{m-1} dtheta
  Series ratio = scale(met.rho, Coeff(1.0 / Rad));
  met.q = mul(sqrt_series(met.h_xx), pow_int(ratio, m - 1));
  return met;
}

std::vector<Series> sphere_defect(const Series& u0, const BoundaryManifold& b, int m) {
  SphereMetric met = sphere_metric(u0, b.radius(), m);
  Series flux = mul(met.q, mul(met.hxx, met.rho_x));
  Series radial_lap = mul(invert(met.q), d_x(flux));
  Series inv_rho = scale(invert(scale(met.rho, Coeff(1.0 / b.radius()))), Coeff(1.0 / b.radius()));
  Series D = sub(sub(radial_lap, scale(inv_rho, Coeff(double(m - 1)))).shifted(1),
                 scale(mul(met.hxx, met.rho_x), Coeff(double(m))));
  return {D.shifted(1)};
}

void check_graphical(const std::vector<Series>& u) {
  for (const auto& ui : u) {
    double scale_u = std::max(ui.max_abs(), 1e-30);
    if (ui.coeff(0, false).max_abs() > 1e-10 * scale_u ||
        ui.coeff(1, false).max_abs() > 1e-10 * scale_u ||
        ui.coeff(0, true).max_abs() > 0.0 || ui.coeff(1, true).max_abs() > 0.0)
      throw std::invalid_argument("graph data must vanish quadratically at the boundary");
  }
}

// Fill metric, area element, normal, and omega from g.u (held at internal
// working order), truncating every stored field to exactly N.
void populate_induced(GraphExpansion& g, int N) {
  const BoundaryManifold& b = g.boundary;
  const bool codim1 = g.codim1();
  const int m = g.m;
  if (b.is_sphere()) {
    SphereMetric met = sphere_metric(g.u[0], b.radius(), m);
    Series ratio = scale(met.rho, Coeff(1.0 / b.radius()));
    g.h_ss = mul(ratio, ratio).truncated(N);
    g.h_sx = Series(N, m, codim1);
    g.h_xx = met.h_xx.truncated(N);
    g.q = met.q.truncated(N);
    g.hss_inv = invert(mul(ratio, ratio)).truncated(N);
    g.hsx_inv = Series(N, m, codim1);
    g.hxx_inv = met.hxx.truncated(N);
    Series icz = invert(sqrt_series(met.h_xx));
    g.cz = icz.truncated(N);
    g.cx = scale(mul(met.rho_x, icz), Coeff(-1.0)).truncated(N);
    g.ca = Series(N, m, codim1);
  } else {
    Embedding e = embed(g.u, b);
    Metric met = curve_metric(e);
    g.h_ss = met.h_ss.truncated(N);
    g.h_sx = met.h_sx.truncated(N);
    g.h_xx = met.h_xx.truncated(N);
    g.q = met.q.truncated(N);
    g.hss_inv = met.hss.truncated(N);
    g.hsx_inv = met.hsx.truncated(N);
    g.hxx_inv = met.hxx.truncated(N);
    if (codim1) {
      // unnormalized normal of the graph (E, x): cross(F_s, F_x) in R^3
      Series nu1 = e.Es[1];
      Series nu2 = scale(e.Es[0], Coeff(-1.0));
      Series nu3 = sub(mul(e.Es[0], e.Ex[1]), mul(e.Es[1], e.Ex[0]));
      Series inv_norm = invert(sqrt_series(
          add(add(mul(nu1, nu1), mul(nu2, nu2)), mul(nu3, nu3))));
      nu1 = mul(nu1, inv_norm);
      nu2 = mul(nu2, inv_norm);
      nu3 = mul(nu3, inv_norm);
      Series cz = add(scale(nu1, Coeff(col(b.normal(0), 0))), scale(nu2, Coeff(col(b.normal(0), 1))));
      Series ca = add(scale(nu1, Coeff(col(b.tangent(), 0))), scale(nu2, Coeff(col(b.tangent(), 1))));
      double lead = cz.coeff(0, false).is_scalar() ? cz.coeff(0, false).scalar()
                                                   : cz.coeff(0, false).grid().mean();
      double sgn = lead >= 0.0 ? 1.0 : -1.0;
      g.cz = scale(cz, Coeff(sgn)).truncated(N);
      g.ca = scale(ca, Coeff(sgn)).truncated(N);
      g.cx = scale(nu3, Coeff(sgn)).truncated(N);
    }
  }
  for (auto& ui : g.u) ui = ui.truncated(N);
  if (codim1) g.omega = special_bdf(g, N);
}

}  // namespace

namespace detail {

std::vector<Series> graph_defect(const std::vector<Series>& u,
                                 const BoundaryManifold& b, int m, int n) {
  if (u.empty()) throw std::invalid_argument("no graph components");
  if (u[0].order() < 3)
    throw std::invalid_argument("graph series order too low to determine the mean curvature");
  if (b.is_sphere()) {
    if (int(u.size()) != 1 || m != n)
      throw std::invalid_argument("RoundSphere mode is the codim-1 symmetric reduction (m = n)");
    return sphere_defect(u[0], b, m);
  }
  if (m != 2) throw std::invalid_argument("curve boundaries bound 2-dimensional graphs");
  if (n != b.ambient_dim() || int(u.size()) != n - 1)
    throw std::invalid_argument("graph components do not match the boundary frame");
  return curve_defect(u, b, m);
}

}  // namespace detail

std::vector<Series> mean_curvature_series(const std::vector<Series>& u,
                                          const BoundaryManifold& b, int m, int n) {
  if (!u.empty()) check_graphical(u);
  return detail::graph_defect(u, b, m, n);
}

Series indicial_apply(const Series& a, int m) {
  Series s1 = sub(x_dx(a), scale(a, Coeff(double(m))));
  return add(x_dx(s1), s1);
}

Series solve_indicial(const Series& source, int m) {
  Series out(source.order(), source.m(), source.codim1());
  for (const auto& [key, c] : source.terms()) {
    auto [K, t] = key;
    double P = double(K + 1) * double(K - m);
    if (t == 0) {
      if (K == m)
        out.add_to_coeff(m, true, c * Coeff(1.0 / (m + 1)));
      else
        out.add_to_coeff(K, false, c * Coeff(1.0 / P));
    } else {
      if (K == m)
        throw std::runtime_error("log source at the resonant order is outside the tracked class");
      // operator on a x^K log x gives P(K) a x^K log x + (2K+1-m) a x^K
      Coeff a = c * Coeff(1.0 / P);
      out.add_to_coeff(K, true, a);
      out.add_to_coeff(K, false, -a * Coeff(double(2 * K + 1 - m) / P));
    }
  }
  return out;
}

GraphExpansion expand_minimal_graph(const BoundaryManifold& b, int m, int n,
                                    const NormalField& neumann, int N) {
  if (m < 2 || m > n) throw std::invalid_argument("need 2 <= m <= n");
  if (N < m + 2) throw std::invalid_argument("truncation order must reach m+2");
  if (N > 40) throw std::invalid_argument("order budget exceeded");
  if (b.is_sphere() && m != n)
    throw std::invalid_argument("RoundSphere boundaries support the codim-1 case m = n only");
  if (!b.is_sphere() && m != 2)
    throw std::invalid_argument("curve boundaries bound 2-dimensional graphs");

  const bool codim1 = (m == n);
  const int comps = b.is_sphere() ? 1 : n - 1;
  NormalField nu = neumann;
  if (nu.empty()) nu.assign(size_t(comps), Coeff(0.0));
  if (int(nu.size()) != comps)
    throw std::invalid_argument("Neumann data does not match the normal bundle rank");

  const int W = N + 2;
  GraphExpansion g;
  g.n = n;
  g.m = m;
  g.order = N;
  g.boundary = b;
  g.neumann = nu;
  g.u.assign(size_t(comps), Series(W, m, codim1));

  double defect_scale = 1.0;
  auto defect = [&]() { return mean_curvature_series(g.u, b, m, n); };

  std::vector<Series> R = defect();
  for (int i = 0; i < comps; ++i) defect_scale = std::max(defect_scale, R[i].max_abs());
  const double tol = 1e-8 * defect_scale;

  for (int K = 2; K <= N; ++K) {
    // log slot first: it feeds back into the plain slot response
    bool log_touched = false;
    for (int i = 0; i < comps; ++i) {
      Coeff r = R[size_t(i)].coeff(K, true);
      if (r.max_abs() <= tol) continue;
      if (K == m + 1)
        throw std::runtime_error("internal consistency failure: log source at the resonant order");
      g.u[size_t(i)].add_to_coeff(K, true, r * Coeff(-1.0 / (double(K) * double(K - 1 - m))));
      log_touched = true;
    }
    if (log_touched) R = defect();

    for (int i = 0; i < comps; ++i) {
      Coeff r = R[size_t(i)].coeff(K, false);
      if (K == m + 1) {
        if (m % 2 == 0) {
          if (r.max_abs() > 10.0 * tol)
            throw std::runtime_error(
                "internal consistency failure: even-dimension kernel order has a nonzero source");
          g.u[size_t(i)].set_coeff(m + 1, false, nu[size_t(i)]);
        } else {
          Coeff U = r * Coeff(-1.0 / double(m + 1));
          g.log_coeff.push_back(U);
          g.u[size_t(i)].set_coeff(m + 1, true, U);
          g.u[size_t(i)].set_coeff(m + 1, false, nu[size_t(i)]);
        }
      } else if (r.max_abs() > 0.0) {
        g.u[size_t(i)].add_to_coeff(K, false, r * Coeff(-1.0 / (double(K) * double(K - 1 - m))));
      }
    }
    R = defect();
    for (int i = 0; i < comps; ++i)
      if (R[size_t(i)].coeff(K, false).max_abs() > 10.0 * tol ||
          R[size_t(i)].coeff(K, true).max_abs() > 10.0 * tol)
        throw std::runtime_error("internal consistency failure: residual survives its correction at order " +
                                 std::to_string(K));
  }

  // final residual certificate through order N
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < comps; ++i)
      if (R[size_t(i)].coeff(k, false).max_abs() > 10.0 * tol ||
          R[size_t(i)].coeff(k, true).max_abs() > 10.0 * tol)
        throw std::runtime_error("internal consistency failure: minimality residual at order " +
                                 std::to_string(k));

  // populate the induced series at full internal order, then truncate
  populate_induced(g, N);
  return g;
}

GraphExpansion graph_from_data(const BoundaryManifold& b, int m, int n,
                               const std::vector<Series>& u) {
  if (m < 2 || m > n) throw std::invalid_argument("need 2 <= m <= n");
  if (b.is_sphere() && m != n)
    throw std::invalid_argument("RoundSphere boundaries support the codim-1 case m = n only");
  if (!b.is_sphere() && m != 2)
    throw std::invalid_argument("curve boundaries bound 2-dimensional graphs");
  const int comps = b.is_sphere() ? 1 : n - 1;
  if (int(u.size()) != comps)
    throw std::invalid_argument("graph components do not match the normal bundle rank");
  if (u[0].order() < 4)
    throw std::invalid_argument("graph series order too low to induce the metric");
  check_graphical(u);

  GraphExpansion g;
  g.n = n;
  g.m = m;
  g.order = u[0].order() - 2;
  g.boundary = b;
  g.neumann.assign(size_t(comps), Coeff(0.0));
  g.u = u;
  populate_induced(g, g.order);
  return g;
}

NormalSeries normal_series(const GraphExpansion& g) {
  if (!g.codim1()) throw std::invalid_argument("normal expansion requires codimension 1");
  return {g.cz, g.cx, g.ca};
}

Series special_bdf(const GraphExpansion& g, int N) {
  if (N > g.order) throw std::invalid_argument("order budget: expansion tracked below the requested order");
  const bool scalar = g.boundary.is_sphere();
  Series omega(N, g.m, g.codim1());
  Series one = Series::constant(1.0, N, g.m, g.codim1());

  auto residual = [&]() {
    // |d log(x e^omega)|^2 - 1 along the graph, compactified
    Series one_p = add(one, x_dx(omega));
    Series E = mul(g.hxx_inv.truncated(N), mul(one_p, one_p));
    if (!scalar) {
      Series xos = d_s(omega, g.boundary).shifted(1).truncated(N);
      E = add(E, scale(mul(g.hsx_inv.truncated(N), mul(one_p, xos)), Coeff(2.0)));
      E = add(E, mul(g.hss_inv.truncated(N), mul(xos, xos)));
    }
    return sub(E, one);
  };

  Series E = residual();
  for (int k = 1; k <= N; ++k) {
    Coeff rlog = E.coeff(k, true);
    if (rlog.max_abs() > 0.0) {
      omega.add_to_coeff(k, true, rlog * Coeff(-1.0 / (2.0 * k)));
      E = residual();
    }
    Coeff r = E.coeff(k, false);
    if (r.max_abs() > 0.0) {
      omega.add_to_coeff(k, false, r * Coeff(-1.0 / (2.0 * k)));
      E = residual();
    }
  }
  double scale_h = std::max(1.0, g.hxx_inv.max_abs());
  for (int k = 0; k <= N; ++k)
    if (E.coeff(k, false).max_abs() > 1e-8 * scale_h || E.coeff(k, true).max_abs() > 1e-8 * scale_h)
      throw std::runtime_error("special bdf residual failed to vanish at order " + std::to_string(k));
  return omega;
}

Series laplacian_x(const GraphExpansion& g) {
  Series fx = mul(g.q, g.hxx_inv);
  if (g.boundary.is_sphere()) return mul(invert(g.q), d_x(fx));
  Series fs = mul(g.q, g.hsx_inv);
  return mul(invert(g.q), add(d_s(fs, g.boundary), d_x(fx)));
}

Coeff hxx_plus_q_coefficient(const GraphExpansion& g) {
  if (!g.codim1()) throw std::invalid_argument("requires codimension 1");
  if (g.order < g.n + 1) throw std::invalid_argument("series order below n+1");
  return g.hxx_inv.coeff(g.n + 1) + g.q.coeff(g.n + 1);
}

HxxQReport hxx_plus_q_report(const GraphExpansion& g) {
  HxxQReport rep;
  rep.series_value = hxx_plus_q_coefficient(g);
  Coeff u2 = g.u[0].coeff(2), un1 = g.u[0].coeff(g.n + 1);
  rep.closed_form = Coeff(-4.0 * g.n) * u2 * un1;
  rep.paper_form = Coeff(double((g.n - 1) * (g.n - 2))) + Coeff(-8.0 * (g.n - 1)) * u2 * un1;
  return rep;
}

std::string expansion_to_json(const GraphExpansion& g) {
  nlohmann::ordered_json j;
  j["n"] = g.n;
  j["m"] = g.m;
  j["order"] = g.order;
  j["mode"] = g.boundary.is_sphere() ? "round_sphere" : "curve";
  auto put = [](const Series& s) { return nlohmann::ordered_json::parse(to_json(s)); };
  j["u"] = nlohmann::ordered_json::array();
  for (const auto& ui : g.u) j["u"].push_back(put(ui));
  j["h_ss"] = put(g.h_ss);
  j["h_sx"] = put(g.h_sx);
  j["h_xx"] = put(g.h_xx);
  j["q"] = put(g.q);
  j["hxx_inv"] = put(g.hxx_inv);
  if (g.codim1()) {
    j["cz"] = put(g.cz);
    j["cx"] = put(g.cx);
    j["ca"] = put(g.ca);
    j["omega"] = put(g.omega);
  }
  return j.dump(2);
}

}  // namespace rvh
