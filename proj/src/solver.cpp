#include "rvh/solver.hpp"

#include <json.hpp>

#include <boost/numeric/odeint.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rvh {

namespace {

namespace ode = boost::numeric::odeint;

using Arc = std::array<double, 3>;     // r, x, alpha; arclength parameter
using ArcA = std::array<double, 4>;    // + running area integral
using Chart = std::array<double, 2>;   // r, alpha; x is the parameter
using ChartA = std::array<double, 3>;  // + running area integral

double unit_sphere_volume(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (dim + 1)) /
         std::tgamma(0.5 * (dim + 1));
}

/* Profile curvature balance: the curve turns so that the weighted length
 * r^{m-1} x^{-m} ds is stationary. */
double turning(int m, double r, double x, double alpha) {
  return -(m - 1) * std::sin(alpha) / r - m * std::cos(alpha) / x;
}

struct ArcRhs {
  int m;
  void operator()(const Arc& s, Arc& d, double) const {
    d[0] = std::cos(s[2]);
    d[1] = std::sin(s[2]);
    d[2] = turning(m, s[0], s[1], s[2]);
  }
};

struct ArcAreaRhs {
  int m;
  double z;
  void operator()(const ArcA& s, ArcA& d, double) const {
    d[0] = std::cos(s[2]);
    d[1] = std::sin(s[2]);
    d[2] = turning(m, s[0], s[1], s[2]);
    d[3] = std::pow(s[0], double(m - 1)) * std::pow(s[1], z - double(m));
  }
};

struct ChartRhs {
  int m;
  void operator()(const Chart& s, Chart& d, double x) const {
    double sa = std::sin(s[1]);
    d[0] = std::cos(s[1]) / sa;
    d[1] = turning(m, s[0], x, s[1]) / sa;
  }
};

struct ChartAreaRhs {
  int m;
  double z;
  void operator()(const ChartA& s, ChartA& d, double x) const {
    double sa = std::sin(s[1]);
    d[0] = std::cos(s[1]) / sa;
    d[1] = turning(m, s[0], x, s[1]) / sa;
    d[2] = std::pow(s[0], double(m - 1)) * std::pow(x, z - double(m)) / std::abs(sa);
  }
};

std::vector<double> geometric_nodes(double from, double to, int per_decade) {
  int count = std::max(2, int(std::ceil(per_decade * std::abs(std::log10(from / to)))) + 1);
  std::vector<double> nodes(static_cast<size_t>(count));
  double ratio = std::pow(to / from, 1.0 / double(count - 1));
  double v = from;
  for (int i = 0; i < count; ++i, v *= ratio) nodes[size_t(i)] = v;
  nodes.back() = to;
  return nodes;
}

struct ChartLeg {
  bool ok = false;
  std::vector<double> x, r;
  Chart final_state{};
};

/* March the graph chart through the graded nodes. Fails cleanly when the
 * profile crests (alpha -> 0) before reaching the far node, where the graph
 * parametrization degenerates. */
ChartLeg chart_leg(Chart s, double x_from, double x_to, int m, const MeshConfig& mesh) {
  ChartLeg leg;
  auto nodes = geometric_nodes(x_from, x_to, mesh.samples_per_decade);
  auto st = ode::make_dense_output(mesh.abs_tol, mesh.rel_tol,
                                   ode::runge_kutta_dopri5<Chart>());
  const double dir = (x_to > x_from ? 1.0 : -1.0);
  st.initialize(s, x_from, dir * 0.05 * std::abs(x_from));
  leg.x.push_back(x_from);
  leg.r.push_back(s[0]);
  size_t next = 1;
  Chart tmp;
  for (long iter = 0; next < nodes.size(); ++iter) {
    if (iter > 400000 || std::abs(std::sin(st.current_state()[1])) < 1e-2 ||
        std::abs(st.current_time_step()) < 1e-15 * std::abs(x_from))
      return leg;  // crested or stalled: not a graph out to x_to
    st.do_step(ChartRhs{m});
    double t1 = st.current_time();
    while (next < nodes.size() && dir * nodes[next] <= dir * t1) {
      st.calc_state(nodes[next], tmp);
      leg.x.push_back(nodes[next]);
      leg.r.push_back(tmp[0]);
      ++next;
    }
  }
  st.calc_state(nodes.back(), tmp);
  leg.final_state = tmp;
  leg.ok = true;
  return leg;
}

Chart chart_advance(Chart s, double x_from, double x_to, int m, const MeshConfig& mesh) {
  auto stepper = ode::make_controlled(mesh.abs_tol, mesh.rel_tol,
                                      ode::runge_kutta_dopri5<Chart>());
  double dt = (x_to > x_from ? 1.0 : -1.0) * 0.05 * std::abs(x_from);
  ode::integrate_adaptive(stepper, ChartRhs{m}, s, x_from, x_to, dt);
  return s;
}

double chart_area(Chart s, double x_from, double x_to, int m, double z,
                  const MeshConfig& mesh) {
  ChartA a{s[0], s[1], 0.0};
  auto stepper = ode::make_controlled(mesh.abs_tol, mesh.rel_tol,
                                      ode::runge_kutta_dopri5<ChartA>());
  double dt = (x_to > x_from ? 1.0 : -1.0) * 0.05 * std::abs(x_from);
  ode::integrate_adaptive(stepper, ChartAreaRhs{m, z}, a, x_from, x_to, dt);
  // the slab density is positive, so descending runs only flip the sign
  return std::abs(a[2]);
}

struct ArcSweep {
  bool returned = false;
  std::string status = "no_return";
  Arc exit_state{};
  double sigma_exit = 0.0;
  double x_max = 0.0;
  std::vector<double> sigma, r, x, alpha;
};

/* Integrate the arclength chart until the profile descends through x_exit.
 * When `record` is set the solution is resampled on the uniform sigma grid
 * for the collocation audit. */
ArcSweep arc_sweep(Arc s, double sigma0, int m, double x_exit, double scale,
                   const MeshConfig& mesh, bool record) {
  ArcSweep out;
  out.x_max = s[1];
  ArcRhs rhs{m};
  auto st = ode::make_dense_output(mesh.abs_tol, mesh.rel_tol,
                                   ode::runge_kutta_dopri5<Arc>());
  st.initialize(s, sigma0, std::min(mesh.sigma_cap, 1e-4));
  const double h = mesh.sigma_step;
  long next = lround(std::ceil(sigma0 / h));
  Arc tmp;
  while (true) {
    if (st.current_time_step() > mesh.sigma_cap)
      st.initialize(st.current_state(), st.current_time(), mesh.sigma_cap);
    double t0 = st.current_time();
    Arc s0 = st.current_state();
    st.do_step(rhs);
    double t1 = st.current_time();
    Arc s1 = st.current_state();
    if (record) {
      while (double(next) * h <= t1) {
        double tn = double(next) * h;
        if (tn >= t0) {
          st.calc_state(tn, tmp);
          out.sigma.push_back(tn);
          out.r.push_back(tmp[0]);
          out.x.push_back(tmp[1]);
          out.alpha.push_back(tmp[2]);
        }
        ++next;
      }
    }
    out.x_max = std::max(out.x_max, s1[1]);
    if (s0[1] >= x_exit && s1[1] < x_exit) {
      double lo = t0, hi = t1;
      for (int i = 0; i < 90; ++i) {
        double mid = 0.5 * (lo + hi);
        st.calc_state(mid, tmp);
        (tmp[1] >= x_exit ? lo : hi) = mid;
      }
      st.calc_state(hi, tmp);
      out.exit_state = tmp;
      out.sigma_exit = hi;
      out.returned = true;
      out.status = "ok";
      return out;
    }
    if (s1[0] < 0.05 * scale && std::cos(s1[2]) < 0.0) {
      out.status = "pinched";
      return out;
    }
    if (s1[1] > 30.0 * scale || s1[0] > 30.0 * scale) {
      out.status = "escaped";
      return out;
    }
    if (t1 - sigma0 > mesh.sigma_max) return out;  // no_return
  }
}

/* Area integral along the arclength chart with the running-area state,
 * stopped at the first descent through x_exit (area counted throughout,
 * so callers must ensure x >= delta holds on the whole leg). */
std::pair<double, Arc> arc_area_to(Arc s, double sigma0, int m, double z,
                                   double x_exit, const MeshConfig& mesh) {
  ArcAreaRhs rhs{m, z};
  ArcA a{s[0], s[1], s[2], 0.0};
  auto st = ode::make_dense_output(mesh.abs_tol, mesh.rel_tol,
                                   ode::runge_kutta_dopri5<ArcA>());
  st.initialize(a, sigma0, std::min(mesh.sigma_cap, 1e-4));
  ArcA tmp;
  while (true) {
    double t0 = st.current_time();
    ArcA s0 = st.current_state();
    st.do_step(rhs);
    double t1 = st.current_time();
    const ArcA& s1 = st.current_state();
    if (s0[1] >= x_exit && s1[1] < x_exit) {
      double lo = t0, hi = t1;
      for (int i = 0; i < 90; ++i) {
        double mid = 0.5 * (lo + hi);
        st.calc_state(mid, tmp);
        (tmp[1] >= x_exit ? lo : hi) = mid;
      }
      st.calc_state(hi, tmp);
      return {tmp[3], Arc{tmp[0], tmp[1], tmp[2]}};
    }
    if (t1 - sigma0 > mesh.sigma_max)
      throw std::runtime_error("area sweep did not return to the boundary");
  }
}

/* Crossing times and states of x = level along the arclength chart, in
 * order, together with the exit state at x_exit. */
struct Crossings {
  std::vector<Arc> states;
  std::vector<double> sigmas;
  Arc exit_state{};
};

Crossings arc_crossings(Arc s, double sigma0, int m, double level, double x_exit,
                        const MeshConfig& mesh) {
  Crossings out;
  ArcRhs rhs{m};
  auto st = ode::make_dense_output(mesh.abs_tol, mesh.rel_tol,
                                   ode::runge_kutta_dopri5<Arc>());
  st.initialize(s, sigma0, std::min(mesh.sigma_cap, 1e-4));
  Arc tmp;
  auto bisect = [&](double lo, double hi, double target) {
    for (int i = 0; i < 90; ++i) {
      double mid = 0.5 * (lo + hi);
      st.calc_state(mid, tmp);
      bool above = tmp[1] >= target;
      st.calc_state(lo, tmp);
      bool lo_above = tmp[1] >= target;
      (above == lo_above ? lo : hi) = mid;
    }
    st.calc_state(hi, tmp);
    return hi;
  };
  while (true) {
    double t0 = st.current_time();
    Arc s0 = st.current_state();
    st.do_step(rhs);
    double t1 = st.current_time();
    Arc s1 = st.current_state();
    if ((s0[1] - level) * (s1[1] - level) < 0.0) {
      double tc = bisect(t0, t1, level);
      out.sigmas.push_back(tc);
      out.states.push_back(Arc{tmp[0], tmp[1], tmp[2]});
    }
    if (s0[1] >= x_exit && s1[1] < x_exit) {
      double tc = bisect(t0, t1, x_exit);
      (void)tc;
      out.exit_state = Arc{tmp[0], tmp[1], tmp[2]};
      return out;
    }
    if (t1 - sigma0 > mesh.sigma_max)
      throw std::runtime_error("crossing sweep did not return to the boundary");
  }
}

Arc apex_seed(double R) {
  double ss = 1e-6 * R;
  return Arc{ss, R - ss * ss / (2.0 * R), -ss / R};
}

Chart catenoid_seed(double R1, double t, double x0) {
  double u2 = -0.5 / R1;
  double u4 = -0.125 / (R1 * R1 * R1);
  double r0 = R1 + u2 * x0 * x0 + t * x0 * x0 * x0 + u4 * x0 * x0 * x0 * x0;
  double up = 2.0 * u2 * x0 + 3.0 * t * x0 * x0 + 4.0 * u4 * x0 * x0 * x0;
  return Chart{r0, std::atan2(1.0, up)};
}

/* Sixth-order centered differences of the uniform arclength samples against
 * the right-hand side: the collocation residual of the stored profile. */
double fd_residual(const ArcSweep& sw, int m, double h) {
  const auto& r = sw.r;
  const auto& x = sw.x;
  const auto& al = sw.alpha;
  long n = long(r.size());
  if (n < 9) return 0.0;
  static const double w[7] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0,
                              3.0 / 4,   -3.0 / 20, 1.0 / 60};
  double worst = 0.0;
  for (long i = 3; i + 3 < n; ++i) {
    double dr = 0, dx = 0, da = 0;
    for (int k = -3; k <= 3; ++k) {
      dr += w[k + 3] * r[size_t(i + k)];
      dx += w[k + 3] * x[size_t(i + k)];
      da += w[k + 3] * al[size_t(i + k)];
    }
    dr /= h;
    dx /= h;
    da /= h;
    double er = std::abs(dr - std::cos(al[size_t(i)]));
    double ex = std::abs(dx - std::sin(al[size_t(i)]));
    double ea = std::abs(da - turning(m, r[size_t(i)], x[size_t(i)], al[size_t(i)]));
    worst = std::max({worst, er, ex, ea});
  }
  return worst;
}

/* Mean and spread of the scaling-symmetry momentum over the arclength
 * samples.  Conservation of r x^{-2} (r cos a + x sin a) follows from the
 * dilation invariance of the weighted length r^{m-1} x^{-m} ds at m = 2. */
std::pair<double, double> scale_momentum(const std::vector<double>& r,
                                         const std::vector<double>& x,
                                         const std::vector<double>& alpha) {
  double mean = 0.0;
  for (size_t i = 0; i < r.size(); ++i)
    mean += r[i] / (x[i] * x[i]) * (r[i] * std::cos(alpha[i]) + x[i] * std::sin(alpha[i]));
  mean /= double(r.size());
  double spread = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    double j = r[i] / (x[i] * x[i]) * (r[i] * std::cos(alpha[i]) + x[i] * std::sin(alpha[i]));
    spread = std::max(spread, std::abs(j - mean));
  }
  return {mean, spread};
}

std::vector<int> fit_powers(int m) {
  std::vector<int> powers;
  for (int k = 2; k < m + 1; k += 2) powers.push_back(k);
  powers.push_back(m + 1);
  return powers;
}

CoefficientFit fit_samples(const std::vector<double>& xs, const std::vector<double>& rs,
                           int m, const MeshConfig& mesh) {
  std::vector<double> wx, wr;
  for (size_t i = 0; i < xs.size(); ++i)
    if (xs[i] >= mesh.fit_lo && xs[i] <= mesh.fit_hi) {
      wx.push_back(xs[i]);
      wr.push_back(rs[i]);
    }
  std::vector<int> powers = fit_powers(m);
  const bool odd = (m % 2 == 1);
  // Two guard powers past the reported range keep the truncated asymptotic
  // tail from biasing the Neumann coefficient.
  std::vector<int> cols = powers;
  cols.push_back(m + 2);
  cols.push_back(m + 3);
  const int nc = int(cols.size()) + 1 + (odd ? 1 : 0);
  if (int(wx.size()) < nc + 4)
    throw std::runtime_error("too few profile samples inside the fit window");
  // Plain least squares: the sample error is uniform in absolute terms, so
  // weighting would only amplify the noisiest small-x rows.
  Eigen::MatrixXd A(long(wx.size()), nc);
  Eigen::VectorXd y(long(wx.size()));
  for (long i = 0; i < long(wx.size()); ++i) {
    double xv = wx[size_t(i)];
    long c = 0;
    A(i, c++) = 1.0;  // boundary radius column
    for (int k : cols) A(i, c++) = std::pow(xv, double(k));
    if (odd) A(i, c++) = std::pow(xv, double(m + 1)) * std::log(xv);
    y(i) = wr[size_t(i)];
  }
  Eigen::VectorXd colscale(nc);
  for (int k = 0; k < nc; ++k) {
    colscale(k) = A.col(k).cwiseAbs().maxCoeff();
    if (colscale(k) == 0.0) colscale(k) = 1.0;
    A.col(k) /= colscale(k);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smin = svd.singularValues()(nc - 1);
  double smax = svd.singularValues()(0);
  if (!(smin > 0.0) || smax / smin > 1e10)
    throw std::runtime_error("coefficient fit is ill-conditioned");
  Eigen::VectorXd sol = svd.solve(y);
  CoefficientFit fit;
  fit.condition = smax / smin;
  double n_rows = double(wx.size());
  fit.residual = std::sqrt((A * sol - y).squaredNorm() / n_rows);
  if (fit.residual > 1e-4)
    throw std::runtime_error("profile does not match its boundary expansion in the fit window");
  // Covariance diagonal through the SVD factors, then undo the column scaling.
  double s2 = (A * sol - y).squaredNorm() / std::max(1.0, n_rows - double(nc));
  Eigen::VectorXd var(nc);
  for (int k = 0; k < nc; ++k) {
    double acc = 0.0;
    for (int j = 0; j < nc; ++j) {
      double f = svd.matrixV()(k, j) / svd.singularValues()(j);
      acc += f * f;
    }
    var(k) = s2 * acc / (colscale(k) * colscale(k));
  }
  sol = sol.cwiseQuotient(colscale);
  fit.radius = sol(0);
  fit.radius_stderr = std::sqrt(var(0));
  fit.powers = powers;
  for (size_t k = 0; k < powers.size(); ++k) {
    fit.values.push_back(sol(long(k) + 1));
    fit.std_errors.push_back(std::sqrt(var(long(k) + 1)));
  }
  fit.has_log = odd;
  if (odd) {
    fit.log_coeff = sol(nc - 1);
    fit.log_stderr = std::sqrt(var(nc - 1));
  }
  // Quadratic boundary approach: |r - radius| <= C x^2 on the window.
  double c_bound = 0.0;
  for (size_t i = 0; i < wx.size(); ++i)
    c_bound = std::max(c_bound, std::abs(wr[i] - fit.radius) / (wx[i] * wx[i]));
  if (c_bound > 100.0 * (1.0 + std::abs(fit.values[0])))
    throw std::runtime_error("profile does not approach the boundary quadratically");
  return fit;
}

struct Shot {
  bool ok = false;
  std::string status;
  ChartLeg inner, outer;
  ArcSweep sweep;
  double sigma_offset = 0.0;
};

Shot catenoid_shot(double R1, double t, const MeshConfig& mesh, double scale,
                   bool record) {
  Shot sh;
  Chart seed = catenoid_seed(R1, t, mesh.x_floor);
  sh.inner = chart_leg(seed, mesh.x_floor, mesh.x_chart, 2, mesh);
  if (!sh.inner.ok) {
    sh.status = "crested below the chart scale";
    return sh;
  }
  Arc a{sh.inner.final_state[0], mesh.x_chart, sh.inner.final_state[1]};
  sh.sweep = arc_sweep(a, 0.0, 2, mesh.x_chart, scale, mesh, record);
  sh.status = sh.sweep.status;
  if (!sh.sweep.returned) return sh;
  Chart c{sh.sweep.exit_state[0], sh.sweep.exit_state[2]};
  sh.outer = chart_leg(c, sh.sweep.exit_state[1], mesh.x_floor, 2, mesh);
  if (!sh.outer.ok) {
    sh.status = "outer descent left the graph chart";
    return sh;
  }
  sh.ok = true;
  return sh;
}

/* Quick outer-radius estimate for the shooting iteration. */
double outer_radius(const Shot& sh, const MeshConfig& mesh) {
  return fit_samples(sh.outer.x, sh.outer.r, 2, mesh).radius;
}

void finalize_catenoid(ProfileSolution& p, const Shot& sh) {
  p.sigma = sh.sweep.sigma;
  p.r = sh.sweep.r;
  p.x = sh.sweep.x;
  p.alpha = sh.sweep.alpha;
  p.x_max = sh.sweep.x_max;
  p.residual = fd_residual(sh.sweep, p.m, p.mesh.sigma_step);
  BoundaryEnd inner, outer;
  inner.x = sh.inner.x;
  inner.r = sh.inner.r;
  outer.x = sh.outer.x;
  outer.r = sh.outer.r;
  std::reverse(outer.x.begin(), outer.x.end());
  std::reverse(outer.r.begin(), outer.r.end());
  p.ends = {inner, outer};
  p.converged = true;
  extract_coefficients(p, p.m);
  p.R1 = p.ends[0].radius;
  p.R2 = p.ends[1].radius;
  p.separation = std::log(p.R2 / p.R1);
  auto [J, drift] = scale_momentum(p.r, p.x, p.alpha);
  p.scale_invariant = J;
  p.scale_invariant_drift = drift;
  // The conserved momentum equals 3 R^2 u3 at each end (opposite signs), a
  // much sharper handle on the cubic coefficients than the window fit.
  p.ends[0].neumann_fit = p.ends[0].fit.values[1];
  p.ends[1].neumann_fit = p.ends[1].fit.values[1];
  p.ends[0].fit.values[1] = J / (3.0 * p.R1 * p.R1);
  p.ends[1].fit.values[1] = -J / (3.0 * p.R2 * p.R2);
}

ProfileSolution solve_hemisphere(double R, int m, const MeshConfig& mesh) {
  ProfileSolution p;
  p.family = "hemisphere";
  p.m = m;
  p.R = R;
  p.mesh = mesh;
  ArcSweep sw = arc_sweep(apex_seed(R), 1e-6 * R, m, mesh.x_chart, R, mesh, true);
  if (!sw.returned) {
    p.message = "hemisphere sweep failed: " + sw.status;
    return p;
  }
  p.sigma = sw.sigma;
  p.r = sw.r;
  p.x = sw.x;
  p.alpha = sw.alpha;
  p.x_max = sw.x_max;
  p.residual = fd_residual(sw, m, mesh.sigma_step);
  if (m == 2) {
    auto [J, drift] = scale_momentum(p.r, p.x, p.alpha);
    p.scale_invariant = J;
    p.scale_invariant_drift = drift;
  }
  Chart c{sw.exit_state[0], sw.exit_state[2]};
  ChartLeg leg = chart_leg(c, sw.exit_state[1], mesh.x_floor, m, mesh);
  if (!leg.ok) throw std::runtime_error("hemisphere descent left the graph chart");
  BoundaryEnd end;
  end.x = leg.x;
  end.r = leg.r;
  std::reverse(end.x.begin(), end.x.end());
  std::reverse(end.r.begin(), end.r.end());
  p.ends = {end};
  p.converged = true;
  extract_coefficients(p, m);
  return p;
}

ProfileSolution solve_catenoid(const FamilyParams& params, const MeshConfig& mesh) {
  ProfileSolution p;
  p.family = "catenoid";
  p.m = 2;
  p.R = params.R;
  p.mesh = mesh;
  const double R1 = params.R * std::exp(-0.5 * params.separation);
  const double R2 = params.R * std::exp(0.5 * params.separation);
  p.R1 = R1;
  p.R2 = R2;
  p.separation = params.separation;

  if (!std::isnan(params.neumann)) {
    Shot sh = catenoid_shot(R1, params.neumann, mesh, params.R, true);
    p.neumann_start = params.neumann;
    if (!sh.ok) {
      p.message = "catenoid shot " + sh.status;
      return p;
    }
    finalize_catenoid(p, sh);
    return p;
  }

  // Shoot on the inner Neumann coefficient until the outer radius matches.
  // Several Neumann values can reach the same outer circle; the last bracket
  // on the ladder picks the boundary-hugging branch, which stays selectable
  // across a whole separation family.
  const double base = 1.0 / (R1 * R1);
  const std::vector<double> ladder = {
      0.01, 0.02, 0.05, 0.1,  0.2,  0.35, 0.5,   0.75,  1.0,   1.5,   2.5,  4.0,
      7.0,  12.0, 20.0, 35.0, 60.0, 100.0, 180.0, 320.0, 560.0, 1000.0, 1800.0,
      3200.0};
  double prev_t = 0.0, prev_f = 0.0;
  bool have_prev = false, bracketed = false;
  double lo = 0.0, hi = 0.0, flo = 0.0;
  for (double factor : ladder) {
    double t = base * factor;
    Shot sh = catenoid_shot(R1, t, mesh, params.R, false);
    if (!sh.ok) {
      have_prev = false;
      continue;
    }
    double f = outer_radius(sh, mesh) - R2;
    if (have_prev && prev_f * f < 0.0) {
      lo = prev_t;
      hi = t;
      flo = prev_f;
      bracketed = true;
    }
    prev_t = t;
    prev_f = f;
    have_prev = true;
  }
  if (!bracketed) {
    p.message =
        "no rotational catenoid found at this separation: the shooting map "
        "never reaches the outer radius (existence threshold)";
    return p;
  }
  for (int it = 0; it < 64; ++it) {
    double mid = 0.5 * (lo + hi);
    Shot sh = catenoid_shot(R1, mid, mesh, params.R, false);
    if (!sh.ok) throw std::runtime_error("catenoid shooting lost the bracket");
    double f = outer_radius(sh, mesh) - R2;
    if ((f < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = f;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14 * std::max(1.0, hi)) break;
  }
  p.neumann_start = 0.5 * (lo + hi);
  Shot sh = catenoid_shot(R1, p.neumann_start, mesh, params.R, true);
  if (!sh.ok) {
    p.message = "catenoid shot " + sh.status;
    return p;
  }
  finalize_catenoid(p, sh);
  return p;
}

}  // namespace

ProfileSolution solve_rotational(const std::string& family,
                                 const FamilyParams& params,
                                 const MeshConfig& mesh) {
  if (!(params.R > 0.0)) throw std::invalid_argument("need a positive radius scale");
  if (family == "hemisphere" || family == "cap") {
    if (params.n < 2) throw std::invalid_argument("need ambient dimension n >= 2");
    return solve_hemisphere(params.R, params.n, mesh);
  }
  if (family == "catenoid") {
    if (std::isnan(params.neumann) && !(params.separation > 0.0))
      throw std::invalid_argument("catenoid needs a positive separation");
    return solve_catenoid(params, mesh);
  }
  throw std::invalid_argument("unknown family: " + family);
}

std::vector<CoefficientFit> extract_coefficients(ProfileSolution& p, int m) {
  if (m != p.m) throw std::invalid_argument("dimension does not match the solution");
  if (p.ends.empty()) throw std::invalid_argument("no boundary ends to fit");
  std::vector<CoefficientFit> fits;
  for (auto& end : p.ends) {
    end.fit = fit_samples(end.x, end.r, m, p.mesh);
    end.radius = end.fit.radius;
    fits.push_back(end.fit);
  }
  return fits;
}

double tail_volume(const ProfileSolution& p, double delta, double z) {
  if (!p.converged) throw std::invalid_argument("profile is not solved");
  if (!(delta >= p.mesh.x_floor) || !(delta < p.x_max))
    throw std::invalid_argument("cutoff is outside the mesh range");
  const MeshConfig& mesh = p.mesh;
  const int m = p.m;
  double area = 0.0;
  if (p.family == "hemisphere") {
    double xe = std::max(delta, mesh.x_chart);
    auto [arc_part, exit_state] = arc_area_to(apex_seed(p.R), 1e-6 * p.R, m, z, xe, mesh);
    area += arc_part;
    if (delta < mesh.x_chart)
      area += chart_area(Chart{exit_state[0], exit_state[2]}, exit_state[1], delta, m, z, mesh);
  } else {
    Chart seed = catenoid_seed(p.R1, p.neumann_start, mesh.x_floor);
    Chart at_chart;
    if (delta < mesh.x_chart) {
      Chart at_delta = chart_advance(seed, mesh.x_floor, delta, m, mesh);
      area += chart_area(at_delta, delta, mesh.x_chart, m, z, mesh);
      at_chart = chart_advance(at_delta, delta, mesh.x_chart, m, mesh);
    } else {
      at_chart = chart_advance(seed, mesh.x_floor, mesh.x_chart, m, mesh);
    }
    Arc a{at_chart[0], mesh.x_chart, at_chart[1]};
    Arc exit_state;
    if (delta <= mesh.x_chart) {
      auto [mid, ex] = arc_area_to(a, 0.0, m, z, mesh.x_chart, mesh);
      area += mid;
      exit_state = ex;
    } else {
      Crossings cr = arc_crossings(a, 0.0, m, delta, mesh.x_chart, mesh);
      if (cr.states.size() % 2 != 0)
        throw std::runtime_error("unpaired cutoff crossings in the interior sweep");
      for (size_t i = 0; i + 1 < cr.states.size(); i += 2) {
        ArcA seg{cr.states[i][0], cr.states[i][1], cr.states[i][2], 0.0};
        auto stepper = ode::make_controlled(mesh.abs_tol, mesh.rel_tol,
                                            ode::runge_kutta_dopri5<ArcA>());
        ode::integrate_adaptive(stepper, ArcAreaRhs{m, z}, seg, cr.sigmas[i],
                                cr.sigmas[i + 1], 1e-4);
        area += seg[3];
      }
      exit_state = cr.exit_state;
    }
    if (delta < mesh.x_chart)
      area += chart_area(Chart{exit_state[0], exit_state[2]}, exit_state[1], delta, m, z, mesh);
  }
  return unit_sphere_volume(m - 1) * area;
}

TailProvider solver_tail(const ProfileSolution& p, double z) {
  TailProvider t;
  t.tail = [&p, z](double d) { return tail_volume(p, d, z); };
  t.tail_abs_err = 1e-9;
  return t;
}

double catenoid_rv(const ProfileSolution& p, double delta, int order) {
  if (p.family != "catenoid") throw std::invalid_argument("need a catenoid solution");
  if (!p.converged) throw std::invalid_argument("profile is not solved");
  TailProvider none;
  none.tail = [](double) { return 0.0; };
  double total = tail_volume(p, delta, 0.0);
  for (const auto& end : p.ends) {
    double u3 = end.fit.values.size() > 1 ? end.fit.values[1] : 0.0;
    GraphExpansion g = expand_minimal_graph(
        BoundaryManifold::round_sphere(end.radius, 2), 2, 2, {Coeff(u3)}, order);
    Series one = Series::constant(Coeff(1.0), g.q.order(), 2, true);
    total += finite_part(g.boundary, one, g.q, 2, 0, 0, &none, delta).value;
  }
  return total;
}

std::vector<std::pair<double, double>> hemisphere_order_study(
    double R, int m, const std::vector<double>& steps) {
  MeshConfig mesh;
  ArcRhs rhs{m};
  auto rk4 = [&rhs](Arc s, double h) {
    Arc k1, k2, k3, k4, t;
    rhs(s, k1, 0.0);
    for (int i = 0; i < 3; ++i) t[size_t(i)] = s[size_t(i)] + 0.5 * h * k1[size_t(i)];
    rhs(t, k2, 0.0);
    for (int i = 0; i < 3; ++i) t[size_t(i)] = s[size_t(i)] + 0.5 * h * k2[size_t(i)];
    rhs(t, k3, 0.0);
    for (int i = 0; i < 3; ++i) t[size_t(i)] = s[size_t(i)] + h * k3[size_t(i)];
    rhs(t, k4, 0.0);
    for (int i = 0; i < 3; ++i)
      s[size_t(i)] += h / 6.0 * (k1[size_t(i)] + 2.0 * k2[size_t(i)] +
                                 2.0 * k3[size_t(i)] + k4[size_t(i)]);
    return s;
  };
  std::vector<std::pair<double, double>> out;
  for (double h : steps) {
    Arc s = apex_seed(R);
    Arc prev = s;
    int guard = 0;
    while (s[1] >= mesh.x_chart) {
      prev = s;
      s = rk4(s, h);
      if (++guard > 2000000) throw std::runtime_error("order study did not return");
    }
    double lo = 0.0, hi = h;
    for (int i = 0; i < 70; ++i) {
      double mid = 0.5 * (lo + hi);
      (rk4(prev, mid)[1] >= mesh.x_chart ? lo : hi) = mid;
    }
    s = rk4(prev, hi);
    ChartLeg leg = chart_leg(Chart{s[0], s[2]}, s[1], mesh.x_floor, m, mesh);
    if (!leg.ok) throw std::runtime_error("order study descent left the graph chart");
    CoefficientFit fit = fit_samples(leg.x, leg.r, m, mesh);
    out.push_back({h, std::abs(fit.values[0] + 0.5 / R)});
  }
  return out;
}

std::string profile_to_json(const ProfileSolution& p) {
  nlohmann::ordered_json j;
  j["family"] = p.family;
  j["m"] = p.m;
  j["R"] = p.R;
  if (p.family == "catenoid") {
    j["R1"] = p.R1;
    j["R2"] = p.R2;
    j["separation"] = p.separation;
    j["neumann_start"] = p.neumann_start;
  }
  j["converged"] = p.converged;
  if (!p.message.empty()) j["message"] = p.message;
  j["residual"] = p.residual;
  j["x_max"] = p.x_max;
  if (p.m == 2 && p.converged) {
    j["scale_invariant"] = p.scale_invariant;
    j["scale_invariant_drift"] = p.scale_invariant_drift;
  }
  j["mesh"] = {{"x_floor", p.mesh.x_floor},
               {"x_chart", p.mesh.x_chart},
               {"fit_lo", p.mesh.fit_lo},
               {"fit_hi", p.mesh.fit_hi},
               {"samples_per_decade", p.mesh.samples_per_decade},
               {"abs_tol", p.mesh.abs_tol},
               {"rel_tol", p.mesh.rel_tol},
               {"sigma_step", p.mesh.sigma_step}};
  j["ends"] = nlohmann::ordered_json::array();
  for (const auto& end : p.ends) {
    nlohmann::ordered_json e;
    e["radius"] = end.radius;
    e["radius_stderr"] = end.fit.radius_stderr;
    e["powers"] = end.fit.powers;
    e["coefficients"] = end.fit.values;
    e["std_errors"] = end.fit.std_errors;
    if (end.fit.has_log) {
      e["log_coefficient"] = end.fit.log_coeff;
      e["log_stderr"] = end.fit.log_stderr;
    }
    if (p.family == "catenoid") e["neumann_window_fit"] = end.neumann_fit;
    e["condition"] = end.fit.condition;
    e["fit_residual"] = end.fit.residual;
    j["ends"].push_back(e);
  }
  // Downsampled profile for plotting; the CSV export carries everything.
  nlohmann::ordered_json prof = nlohmann::ordered_json::array();
  size_t stride = std::max<size_t>(1, p.x.size() / 400);
  for (size_t i = 0; i < p.x.size(); i += stride)
    prof.push_back({p.x[i], p.r[i]});
  j["profile"] = prof;
  return j.dump(2);
}

std::string profile_to_csv(const ProfileSolution& p) {
  std::ostringstream os;
  os.precision(17);
  os << "x,r\n";
  if (!p.ends.empty())
    for (size_t i = 0; i < p.ends[0].x.size(); ++i)
      os << p.ends[0].x[i] << "," << p.ends[0].r[i] << "\n";
  for (size_t i = 0; i < p.x.size(); ++i) os << p.x[i] << "," << p.r[i] << "\n";
  if (p.ends.size() > 1)
    for (size_t i = 0; i < p.ends[1].x.size(); ++i)
      os << p.ends[1].x[i] << "," << p.ends[1].r[i] << "\n";
  return os.str();
}

}  // namespace rvh
