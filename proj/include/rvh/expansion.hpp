#pragma once

#include "rvh/boundary.hpp"
#include "rvh/phg.hpp"

#include <string>
#include <vector>

namespace rvh {

struct NormalSeries {
  Series cz, cx, ca;  // components along the boundary normal, the vertical, the tangent
};

/* Order-by-order solution of the minimal graph over the boundary cylinder
 * in the half-space model, together with every induced series downstream
 * consumers need. All stored series are valid through `order`.
 *
 * Curve boundaries carry grid coefficients; RoundSphere boundaries reduce
 * to scalar coefficients of the radial profile rho(x) = R + u(x).
 */
struct GraphExpansion {
  int n = 2;      // ambient H^{n+1}, flat boundary R^n
  int m = 2;      // submanifold dimension
  int order = 0;  // truncation order N of u
  BoundaryManifold boundary;
  std::vector<Series> u;      // one series per normal direction
  NormalField neumann;        // injected free data at order m+1
  NormalField log_coeff;      // derived log coefficient at m+1 (m odd)
  Series h_ss, h_sx, h_xx;    // compactified induced metric
  Series q;                   // sqrt(det h), normalized to 1 at x = 0
  Series hss_inv, hsx_inv, hxx_inv;
  Series cz, cx, ca;          // unit-normal expansion (codim 1)
  Series omega;               // special boundary defining function exponent

  bool codim1() const { return m == n; }
};

/* Hyperbolic mean curvature of the graph x -> u(s,x), as x * D_i where
 * D_i = <x H_euc + m (e_x)^perp, N_i>. Vanishing of the returned series
 * through order k certifies minimality of the truncated graph through
 * x^{k-2} corrections. Components follow the boundary frame.
 */
std::vector<Series> mean_curvature_series(const std::vector<Series>& u,
                                          const BoundaryManifold& b, int m, int n);

namespace detail {
/* Same defect as mean_curvature_series but without the quadratic-vanishing
 * guard on u. The chart formulas stay valid for graph data with order-0
 * and order-1 terms (the graph simply does not pass through the boundary
 * curve), which is exactly what linearizing around a solution against
 * boundary-moving Jacobi data requires.
 */
std::vector<Series> graph_defect(const std::vector<Series>& u,
                                 const BoundaryManifold& b, int m, int n);
}  // namespace detail

// (x d/dx + 1)(x d/dx - m) applied termwise.
Series indicial_apply(const Series& a, int m);

/* Inverse of the indicial operator at the u/x level: a term a x^K maps to
 * a x^K / ((K+1)(K-m)) away from resonance, and to a/(m+1) x^m log x at
 * K = m. A log source at the resonant order is rejected.
 */
Series solve_indicial(const Series& source, int m);

GraphExpansion expand_minimal_graph(const BoundaryManifold& b, int m, int n,
                                    const NormalField& neumann, int N);

/* Populate a GraphExpansion from prescribed graph data without solving:
 * metric, area element, normal, and omega are derived from u as given.
 * Useful for probing non-minimal graphs (u = 0, perturbed profiles).
 * The stored order is u's order minus two, leaving headroom for the
 * derivative losses in the induced quantities.
 */
GraphExpansion graph_from_data(const BoundaryManifold& b, int m, int n,
                               const std::vector<Series>& u);

// Unit normal of a codim-1 graph in the compactified metric.
NormalSeries normal_series(const GraphExpansion& g);

/* Exponent omega of the special boundary defining function x_Y = x e^omega,
 * solved so that |d log x_Y|^2 = 1 through x^N along the graph.
 */
Series special_bdf(const GraphExpansion& g, int N);

// (1/q) [d_s(q h^{sx}) + d_x(q h^{xx})]: the compactified-Laplacian core of x.
Series laplacian_x(const GraphExpansion& g);

struct HxxQReport {
  Coeff series_value;  // [h^{xx}]_{n+1} + [q]_{n+1} straight from the series
  Coeff closed_form;   // -4 n u_2 u_{n+1}
  Coeff paper_form;    // (n-1)(n-2) - 8(n-1) u_2 u_{n+1}, reported for comparison
};

Coeff hxx_plus_q_coefficient(const GraphExpansion& g);
HxxQReport hxx_plus_q_report(const GraphExpansion& g);

std::string expansion_to_json(const GraphExpansion& g);

}  // namespace rvh
