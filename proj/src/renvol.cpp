#include "rvh/renvol.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rvh {

namespace {

double simpson_step(const std::function<double(double)>& f, double a,
                    double fa, double b, double fb, double fm, double whole,
                    double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol)
    return left + right + err / 15.0;
  return simpson_step(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, fm, whole, abs_tol, max_depth);
}

FinitePartResult finite_part(const BoundaryManifold& boundary, const Series& b,
                             const Series& q, int m, int j, int p,
                             const TailProvider* tail, double delta) {
  if (m < 2) throw std::invalid_argument("need m >= 2");
  if (j < 0 || j > 2) throw std::invalid_argument("weight j must be 0, 1, or 2");
  if (p < 0) throw std::invalid_argument("pole order p must be nonnegative");
  if (b.order() < m + 2 || q.order() < m + 2)
    throw std::invalid_argument("finite part needs series valid to order m+2");
  for (int k = 0; k < m; ++k)
    if (b.coeff(k, true).max_abs() > 0.0 || q.coeff(k, true).max_abs() > 0.0)
      throw std::invalid_argument("log terms below order m are not integrable here");

  // Only the head through order m+2 enters the assembly; truncating first
  // also keeps log-squared cross terms safely beyond the tracked range.
  Series prod = mul(b.truncated(m + 2), q.truncated(m + 2));

  FinitePartResult r;
  r.m = m;
  r.j = j;
  r.p = p;
  r.method = "riesz";
  r.c.resize(size_t(m + 3), 0.0);
  for (int k = 0; k <= m + 2; ++k) r.c[size_t(k)] = boundary.integrate(prod.coeff(k, false));
  for (int k = m; k <= m + 2; ++k) r.cstar[size_t(k - m)] = boundary.integrate(prod.coeff(k, true));

  const int pole = m + j - 1;
  if (p >= 3) return r;
  if (p == 1) {
    r.value = r.c[size_t(pole)];
    return r;
  }
  if (p == 2) {
    r.value = pole >= m ? -r.cstar[size_t(pole - m)] : 0.0;
    return r;
  }

  // p = 0: stitch the continued series integral on [0, delta] to the tail.
  if (tail == nullptr || !tail->tail)
    throw std::invalid_argument("p = 0 requires a tail provider");
  if (!(delta > 0.0)) throw std::invalid_argument("cutoff delta must be positive");
  r.delta = delta;

  const double ld = std::log(delta);
  double head = r.c[size_t(pole)] * ld;
  if (pole >= m) head += 0.5 * r.cstar[size_t(pole - m)] * ld * ld;
  for (int k = 0; k <= m + 2; ++k) {
    if (k == pole) continue;
    double e = double(k - m - j + 1);
    double de = std::pow(delta, e);
    head += r.c[size_t(k)] * de / e;
    if (k >= m) {
      double cs = r.cstar[size_t(k - m)];
      if (cs != 0.0) head += cs * de * (ld / e - 1.0 / (e * e));
    }
  }

  r.tail_value = tail->tail(delta);
  r.tail_error = tail->tail_abs_err;

  if (tail->density) {
    auto head_profile = [&](double x) {
      double lx = std::log(x);
      double s = 0.0;
      for (int k = 0; k <= m + 2; ++k) {
        double ck = r.c[size_t(k)];
        if (k >= m) ck += r.cstar[size_t(k - m)] * lx;
        s += ck * std::pow(x, double(k - m - j));
      }
      return s;
    };
    auto rem = [&](double x) {
      return x <= 0.0 ? 0.0 : tail->density(x) - head_profile(x);
    };
    r.remainder = adaptive_simpson(rem, 0.0, delta, 1e-10);
  }

  r.value = r.remainder + head + r.tail_value;
  return r;
}

FinitePartResult riesz_rv(const GraphExpansion& g, const TailProvider& tail,
                          double delta) {
  Series one = Series::constant(Coeff(1.0), g.q.order(), g.m, g.codim1());
  FinitePartResult r = finite_part(g.boundary, one, g.q, g.m, 0, 0, &tail, delta);
  r.method = "riesz";
  return r;
}

FinitePartResult hadamard_rv(const std::function<double(double)>& area, int m,
                             const HadamardOptions& opt) {
  if (m < 2) throw std::invalid_argument("need m >= 2");
  if (!area) throw std::invalid_argument("hadamard fit needs a volume sampler");
  if (!(opt.eps_lo > 0.0) || !(opt.eps_hi > opt.eps_lo))
    throw std::invalid_argument("cutoff ladder must satisfy 0 < eps_lo < eps_hi");

  struct Column {
    std::string name;
    std::function<double(double)> f;
  };
  const bool odd = (m % 2 == 1);
  std::vector<Column> cols;
  for (int e = 1 - m; e <= -1; e += 2)
    cols.push_back({"eps^" + std::to_string(e),
                    [e](double x) { return std::pow(x, double(e)); }});
  if (odd) cols.push_back({"log(1/eps)", [](double x) { return -std::log(x); }});
  cols.push_back({"1", [](double) { return 1.0; }});
  // Convergent guard columns soak up the next orders of the true expansion
  // so the constant term is not biased by them.
  cols.push_back({"eps", [](double x) { return x; }});
  cols.push_back({"eps^2", [](double x) { return x * x; }});
  cols.push_back({"eps^3", [](double x) { return x * x * x; }});
  cols.push_back({"eps^4", [](double x) { return x * x * x * x; }});
  if (odd) {
    cols.push_back({"eps*log(1/eps)", [](double x) { return -x * std::log(x); }});
    cols.push_back({"eps^2*log(1/eps)", [](double x) { return -x * x * std::log(x); }});
  }

  const int rows = opt.points;
  const int ncol = int(cols.size());
  if (rows < ncol + 4) throw std::invalid_argument("cutoff ladder too short for the fit");

  Eigen::MatrixXd A(rows, ncol);
  Eigen::VectorXd y(rows);
  const double ratio = std::pow(opt.eps_lo / opt.eps_hi, 1.0 / double(rows - 1));
  for (int i = 0; i < rows; ++i) {
    double eps = opt.eps_hi * std::pow(ratio, double(i));
    y(i) = area(eps);
    for (int k = 0; k < ncol; ++k) A(i, k) = cols[size_t(k)].f(eps);
  }

  // Weight rows to the scale of the sampled volumes: the divergent rows
  // otherwise drown the constant term in absolute-residual noise.
  for (int i = 0; i < rows; ++i) {
    double w = 1.0 / std::max(1.0, std::abs(y(i)));
    A.row(i) *= w;
    y(i) *= w;
  }

  Eigen::VectorXd colscale(ncol);
  for (int k = 0; k < ncol; ++k) {
    colscale(k) = A.col(k).cwiseAbs().maxCoeff();
    if (colscale(k) == 0.0) colscale(k) = 1.0;
    A.col(k) /= colscale(k);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smin = svd.singularValues()(ncol - 1);
  double smax = svd.singularValues()(0);
  if (!(smin > 0.0) || smax / smin > 1e12)
    throw std::runtime_error("cutoff ladder fit is ill-conditioned");
  Eigen::VectorXd coef = svd.solve(y).cwiseQuotient(colscale);

  FinitePartResult r;
  r.m = m;
  r.method = "hadamard";
  for (int k = 0; k < ncol; ++k) {
    r.basis.push_back(cols[size_t(k)].name);
    r.fit.push_back(coef(k));
    if (cols[size_t(k)].name == "1") r.value = coef(k);
  }
  return r;
}

namespace {

/* Invert x e^{omega(x)} = delta for a scalar-mode omega series. */
double invert_special_bdf(const Series& omega, double delta) {
  double x = delta;
  Series domega = d_x(omega);
  for (int it = 0; it < 60; ++it) {
    double w = omega.evaluate(x).scalar();
    double f = x * std::exp(w) - delta;
    double fp = std::exp(w) * (1.0 + x * domega.evaluate(x).scalar());
    double step = f / fp;
    x -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) return x;
  }
  throw std::runtime_error("special bdf inversion did not converge");
}

}  // namespace

EquivalenceReport check_equivalence(const GraphExpansion& g,
                                    const TailProvider& tail, double tol) {
  if (!g.codim1())
    throw std::invalid_argument("equivalence audit needs the special bdf, so codimension one");
  EquivalenceReport rep;
  rep.m = g.m;
  rep.even = (g.m % 2 == 0);

  FinitePartResult base = riesz_rv(g, tail, 0.1);
  rep.riesz = rep.fp_x = base.value;
  for (double d : {0.05, 0.2}) {
    double v = riesz_rv(g, tail, d).value;
    rep.delta_drift = std::max(rep.delta_drift, std::abs(v - base.value));
  }

  FinitePartResult had = hadamard_rv(tail.tail, g.m);
  rep.hadamard = had.value;
  HadamardOptions alt;
  alt.eps_hi = 0.05;
  rep.ladder_drift = std::abs(hadamard_rv(tail.tail, g.m, alt).value - had.value);

  // Changing the bdf from x to x_Y = x e^omega multiplies the integrand by
  // e^{z omega}; expanding in z localizes the difference of finite parts to
  // the weight-1 and weight-2 ledgers of omega q and omega^2 q / 2.
  FinitePartResult lin = finite_part(g.boundary, g.omega, g.q, g.m, 0, 1, nullptr, 0.0);
  // Square only the head of omega: the product then carries its log-squared
  // terms beyond the tracked range, and the ledger never reads past m+2.
  Series omega_head = g.omega.truncated(g.m + 2);
  Series omega2_half = scale(mul(omega_head, omega_head), Coeff(0.5));
  FinitePartResult quad = finite_part(g.boundary, omega2_half, g.q, g.m, 0, 2, nullptr, 0.0);
  rep.defect_localized = lin.value + quad.value;
  rep.fp_xy = rep.fp_x + rep.defect_localized;

  if (g.boundary.is_sphere()) {
    auto sampler_xy = [&](double d) { return tail.tail(invert_special_bdf(g.omega, d)); };
    rep.defect_sampled = hadamard_rv(sampler_xy, g.m).value - rep.hadamard;
  } else {
    rep.defect_sampled = std::numeric_limits<double>::quiet_NaN();
  }

  std::string failure;
  if (rep.even) {
    if (std::abs(rep.hadamard - rep.riesz) >= tol)
      failure = "hadamard and riesz values disagree";
    else if (std::abs(rep.defect_localized) >= tol)
      failure = "bdf defect does not vanish for even m";
    else if (!std::isnan(rep.defect_sampled) && std::abs(rep.defect_sampled) >= 100.0 * tol)
      failure = "sampled bdf defect does not vanish for even m";
  } else {
    if (rep.delta_drift >= 1e-4)
      failure = "riesz value is not stable in delta";
    else if (rep.ladder_drift >= 1e-4)
      failure = "hadamard value is not stable in the ladder";
    else if (!std::isnan(rep.defect_sampled) &&
             std::abs(rep.defect_sampled - rep.defect_localized) >= 1e-4)
      failure = "sampled and localized bdf defects disagree";
  }
  rep.pass = failure.empty();
  if (!rep.pass) throw std::runtime_error("equivalence check failed: " + failure);
  return rep;
}

std::string finite_part_to_json(const FinitePartResult& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["value"] = r.value;
  j["m"] = r.m;
  if (r.method == "riesz") {
    j["j"] = r.j;
    j["p"] = r.p;
    j["delta"] = r.delta;
    j["pole_ledger"] = r.c;
    j["log_ledger"] = std::vector<double>(r.cstar.begin(), r.cstar.end());
    j["tail_value"] = r.tail_value;
    j["tail_error"] = r.tail_error;
    j["remainder"] = r.remainder;
  } else {
    j["basis"] = r.basis;
    j["fit"] = r.fit;
  }
  return j.dump(2);
}

std::string equivalence_to_json(const EquivalenceReport& r) {
  nlohmann::ordered_json j;
  j["m"] = r.m;
  j["even"] = r.even;
  j["riesz"] = r.riesz;
  j["hadamard"] = r.hadamard;
  j["fp_x"] = r.fp_x;
  j["fp_xy"] = r.fp_xy;
  j["defect_localized"] = r.defect_localized;
  if (std::isnan(r.defect_sampled))
    j["defect_sampled"] = nullptr;
  else
    j["defect_sampled"] = r.defect_sampled;
  j["delta_drift"] = r.delta_drift;
  j["ladder_drift"] = r.ladder_drift;
  j["pass"] = r.pass;
  return j.dump(2);
}

}  // namespace rvh
