#include "rvh/boundary.hpp"

#include <json.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace rvh {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Trigonometric interpolant through M points assumed uniform in a periodic
// parameter t in [0,1). Evaluation is exact on the input samples and
// spectrally accurate for analytic curves.
class TrigCurve {
public:
  explicit TrigCurve(const Eigen::MatrixXd& pts) : M_(int(pts.rows())), n_(int(pts.cols())) {
    coef_.resize(n_, Eigen::VectorXcd(M_));
    for (int d = 0; d < n_; ++d) {
      for (int k = 0; k < M_; ++k) {
        // compensated summation and integer phase reduction keep the
        // coefficient noise near one ulp, so the roundoff floor below can
        // sit close to machine precision
        std::complex<double> acc(0.0, 0.0), carry(0.0, 0.0);
        for (int j = 0; j < M_; ++j) {
          int r = int((long long)(j) * k % M_);
          std::complex<double> term =
              pts(j, d) * std::exp(std::complex<double>(0.0, -2.0 * kPi * r / M_)) - carry;
          std::complex<double> next = acc + term;
          carry = (next - acc) - term;
          acc = next;
        }
        coef_[d][k] = acc / double(M_);
      }
    }
    // drop modes at the roundoff floor: they are noise of analytic data and
    // the derivative factors omega^2 would amplify them into the curvature
    double cmax = 0.0;
    for (int d = 0; d < n_; ++d) cmax = std::max(cmax, coef_[d].cwiseAbs().maxCoeff());
    for (int d = 0; d < n_; ++d)
      for (int k = 0; k < M_; ++k)
        if (std::abs(coef_[d][k]) < 1e-15 * cmax) coef_[d][k] = 0.0;
  }

  Eigen::VectorXd eval(double t) const { return sum(t, 0); }
  Eigen::VectorXd deriv(double t) const { return sum(t, 1); }
  Eigen::VectorXd second(double t) const { return sum(t, 2); }
  double speed(double t) const { return deriv(t).norm(); }

private:
  Eigen::VectorXd sum(double t, int deriv_order) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int d = 0; d < n_; ++d) {
      std::complex<double> acc(0.0, 0.0);
      for (int k = 0; k < M_; ++k) {
        // map to the symmetric frequency band; split the Nyquist mode as cosine
        double freq = (k <= M_ / 2) ? k : k - M_;
        std::complex<double> c = coef_[d][k];
        double w = 2.0 * kPi * freq;
        if (M_ % 2 == 0 && k == M_ / 2) {
          double basis = std::cos(w * t);
          if (deriv_order == 1) basis = -w * std::sin(w * t);
          if (deriv_order == 2) basis = -w * w * std::cos(w * t);
          acc += c * basis;
          continue;
        }
        std::complex<double> phase = std::exp(std::complex<double>(0.0, w * t));
        for (int r = 0; r < deriv_order; ++r) phase *= std::complex<double>(0.0, w);
        acc += c * phase;
      }
      out[d] = acc.real();
    }
    return out;
  }

  int M_, n_;
  std::vector<Eigen::VectorXcd> coef_;
};

// One Simpson panel of the curve speed.
double panel(const TrigCurve& c, double a, double b) {
  return (b - a) / 6.0 * (c.speed(a) + 4.0 * c.speed(0.5 * (a + b)) + c.speed(b));
}

int wrap(int i, int P) { return ((i % P) + P) % P; }

int orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  double v = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  double scale = (b - a).norm() * ((c - a).norm() + (c - b).norm()) + 1e-300;
  if (std::abs(v) < 1e-12 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  double tol = 1e-12 * ((b - a).norm() + 1.0);
  return p.x() >= std::min(a.x(), b.x()) - tol && p.x() <= std::max(a.x(), b.x()) + tol &&
         p.y() >= std::min(a.y(), b.y()) - tol && p.y() <= std::max(a.y(), b.y()) + tol;
}

bool segments_cross_2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  // touching counts: a simple closed curve may not revisit a point
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double surface_area_unit_sphere(int n) {
  // |S^{n-1}| for the unit sphere in R^n
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace

BoundaryManifold BoundaryManifold::curve(const Eigen::MatrixXd& samples, int P,
                                         DerivStencil stencil) {
  const int M = int(samples.rows());
  const int n = int(samples.cols());
  if (M < 16) throw std::invalid_argument("need at least 16 curve samples");
  if (n < 2 || n > 3) throw std::invalid_argument("curve boundaries are supported in R^2 and R^3");

  double poly_len = 0.0;
  for (int i = 0; i < M; ++i) poly_len += (samples.row(wrap(i + 1, M)) - samples.row(i)).norm();
  if (poly_len < 1e-12) throw std::invalid_argument("degenerate curve: zero length");

  // resampling by arclength widens the coordinate spectrum, so the working
  // grid is denser than the input samples or the aliasing tail leaks into
  // the tangential derivative matrix
  if (P <= 0) P = std::max(256, M + (M % 2));
  if (P % 2 == 1) ++P;

  TrigCurve curve(samples);

  // cumulative arclength on a fine parameter grid, one Simpson panel per cell
  const int K = std::max(4096, 32 * M);
  Eigen::VectorXd cum(K + 1);
  cum[0] = 0.0;
  for (int i = 0; i < K; ++i)
    cum[i + 1] = cum[i] + panel(curve, double(i) / K, double(i + 1) / K);
  const double L = cum[K];

  // invert arclength at the uniform targets, anchored at the first sample
  BoundaryManifold b;
  b.mode_ = BoundaryMode::Curve;
  b.n_ = n;
  b.P_ = P;
  b.length_ = L;
  b.pts_.resize(P, n);
  b.tan_.resize(P, n);
  Eigen::MatrixXd dT(P, n);
  for (int j = 0; j < P; ++j) {
    double target = L * j / P;
    int lo = int(std::upper_bound(cum.data(), cum.data() + K + 1, target) - cum.data()) - 1;
    lo = std::clamp(lo, 0, K - 1);
    double t = (double(lo) + (target - cum[lo]) / std::max(cum[lo + 1] - cum[lo], 1e-300)) / K;
    for (int it = 0; it < 8; ++it) {
      double s_here = cum[lo] + panel(curve, double(lo) / K, t);
      t -= (s_here - target) / curve.speed(t);
    }
    if (j == 0) t = 0.0;
    b.pts_.row(j) = curve.eval(t).transpose();
    // frame data straight from the interpolant: T = c'/|c'| and
    // dT/ds = (c''/|c'| - c' (c'.c'')/|c'|^3) / |c'|, avoiding the noise of
    // differentiating the resampled points a second time
    Eigen::VectorXd d1 = curve.deriv(t), d2 = curve.second(t);
    double sp = d1.norm();
    Eigen::VectorXd T = d1 / sp;
    b.tan_.row(j) = T.transpose();
    dT.row(j) = ((d2 - T * T.dot(d2)) / (sp * sp)).transpose();
  }

  // tangential derivative on the uniform arclength grid. The spectral
  // stencil is kept in factored form (analysis, band weights, synthesis):
  // applying it can then drop modes at the roundoff floor, which would
  // otherwise be re-amplified by the order-by-order expansion solves.
  b.spectral_ = (stencil == DerivStencil::Spectral);
  if (b.spectral_) {
    b.dft_.resize(P, P);
    b.dsyn_.resize(P, P);
    for (int k = 0; k < P; ++k) {
      double freq = (k <= P / 2) ? k : k - P;
      if (P % 2 == 0 && k == P / 2) freq = 0.0;  // Nyquist drops out of the derivative
      std::complex<double> iw(0.0, 2.0 * kPi * freq / L);
      for (int j = 0; j < P; ++j) {
        int r = int((long long)(j) * k % P);
        double ang = 2.0 * kPi * r / P;
        b.dft_(k, j) = std::complex<double>(std::cos(ang), -std::sin(ang)) / double(P);
        b.dsyn_(j, k) = iw * std::complex<double>(std::cos(ang), std::sin(ang));
      }
    }
  } else {
    b.dmat_ = Eigen::MatrixXd::Zero(P, P);
    const double h = L / P;
    const double w[2] = {2.0 / 3.0, -1.0 / 12.0};
    for (int i = 0; i < P; ++i)
      for (int o = 1; o <= 2; ++o) {
        b.dmat_(i, wrap(i + o, P)) += w[o - 1] / h;
        b.dmat_(i, wrap(i - o, P)) -= w[o - 1] / h;
      }
  }

  // outward frame
  b.frame_.clear();
  if (n == 2) {
    double area2 = 0.0;
    for (int i = 0; i < P; ++i) {
      const auto& p = b.pts_.row(i);
      const auto& q = b.pts_.row(wrap(i + 1, P));
      area2 += p[0] * q[1] - q[0] * p[1];
    }
    double sgn = area2 > 0 ? 1.0 : -1.0;  // counterclockwise: outward = (T_y, -T_x)
    Eigen::MatrixXd N(P, 2);
    for (int i = 0; i < P; ++i) {
      N(i, 0) = sgn * b.tan_(i, 1);
      N(i, 1) = -sgn * b.tan_(i, 0);
    }
    b.frame_.push_back(std::move(N));
  } else {
    // rotation-minimizing transport by double reflection, then a uniform
    // twist about T so the frame closes after one loop. The first frame
    // vector is seeded against the curvature at sample 0, which points it
    // outward on convex curves; a planar circle then reports (-1/R, 0).
    Eigen::MatrixXd N1(P, 3), N2(P, 3);
    Eigen::Vector3d T0 = b.tan_.row(0);
    Eigen::Vector3d seed = -(Eigen::Vector3d(dT.row(0)) - dT.row(0).dot(T0) * T0);
    if (seed.norm() < 1e-12) {
      int least = 0;
      for (int d = 1; d < 3; ++d)
        if (std::abs(T0[d]) < std::abs(T0[least])) least = d;
      seed = Eigen::Vector3d::Unit(least);
    }
    Eigen::Vector3d cur = (seed - seed.dot(T0) * T0).normalized();
    N1.row(0) = cur;
    Eigen::Vector3d closed = cur;
    for (int i = 0; i < P; ++i) {
      int j = wrap(i + 1, P);
      Eigen::Vector3d xi = b.pts_.row(i), xj = b.pts_.row(j);
      Eigen::Vector3d Ti = b.tan_.row(i), Tj = b.tan_.row(j);
      Eigen::Vector3d v1 = xj - xi;
      double c1 = v1.squaredNorm();
      Eigen::Vector3d nL = closed - (2.0 / c1) * v1.dot(closed) * v1;
      Eigen::Vector3d tL = Ti - (2.0 / c1) * v1.dot(Ti) * v1;
      Eigen::Vector3d v2 = Tj - tL;
      double c2 = v2.squaredNorm();
      closed = (c2 < 1e-28) ? nL : Eigen::Vector3d(nL - (2.0 / c2) * v2.dot(nL) * v2);
      closed = (closed - closed.dot(Tj) * Tj).normalized();
      if (j != 0) N1.row(j) = closed;
    }
    double twist = std::atan2(closed.dot(T0.cross(Eigen::Vector3d(N1.row(0)))),
                              closed.dot(Eigen::Vector3d(N1.row(0))));
    for (int i = 0; i < P; ++i) {
      Eigen::Vector3d Ti = b.tan_.row(i);
      Eigen::Vector3d v = N1.row(i);
      double a = -twist * i / P;  // unwind the holonomy gradually
      Eigen::Vector3d w = std::cos(a) * v + std::sin(a) * Ti.cross(v);
      N1.row(i) = (w - w.dot(Ti) * Ti).normalized();
      N2.row(i) = Ti.cross(Eigen::Vector3d(N1.row(i)));
    }
    b.frame_.push_back(std::move(N1));
    b.frame_.push_back(std::move(N2));
  }

  // curvature components in the frame
  b.kappa_.resize(P, n - 1);
  for (int i = 0; i < P; ++i)
    for (int f = 0; f < n - 1; ++f)
      b.kappa_(i, f) = dT.row(i).dot(b.frame_[size_t(f)].row(i));

  // self-intersection scan over non-adjacent segment pairs
  if (n == 2) {
    for (int i = 0; i < P; ++i)
      for (int j = i + 2; j < P; ++j) {
        if (i == 0 && j == P - 1) continue;
        Eigen::Vector2d a = b.pts_.row(i), bb = b.pts_.row(wrap(i + 1, P));
        Eigen::Vector2d c = b.pts_.row(j), d = b.pts_.row(wrap(j + 1, P));
        double lo_x = std::min(a.x(), bb.x()), hi_x = std::max(a.x(), bb.x());
        double lo_y = std::min(a.y(), bb.y()), hi_y = std::max(a.y(), bb.y());
        if (std::max(c.x(), d.x()) < lo_x || std::min(c.x(), d.x()) > hi_x ||
            std::max(c.y(), d.y()) < lo_y || std::min(c.y(), d.y()) > hi_y)
          continue;
        if (segments_cross_2d(a, bb, c, d))
          throw std::invalid_argument("curve self-intersects");
      }
  }

  return b;
}

BoundaryManifold BoundaryManifold::round_sphere(double R, int n) {
  if (R <= 0.0) throw std::invalid_argument("sphere radius must be positive");
  if (n < 2) throw std::invalid_argument("round sphere needs ambient boundary dimension >= 2");
  BoundaryManifold b;
  b.mode_ = BoundaryMode::RoundSphere;
  b.n_ = n;
  b.R_ = R;
  b.P_ = 1;
  b.length_ = surface_area_unit_sphere(n) * std::pow(R, n - 1);
  return b;
}

double BoundaryManifold::length() const { return length_; }

double BoundaryManifold::radius() const {
  if (!is_sphere()) throw std::runtime_error("radius is defined in RoundSphere mode only");
  return R_;
}

double BoundaryManifold::integrate(const Coeff& f) const {
  if (is_sphere()) return f.scalar() * length_;
  if (f.is_scalar()) return f.scalar() * length_;
  if (f.grid().size() != P_) throw std::runtime_error("integrand sampled on the wrong grid");
  return f.grid().sum() * (length_ / P_);
}

double BoundaryManifold::l2_inner(const Coeff& f, const Coeff& g) const {
  return integrate(f * g);
}

Eigen::ArrayXd BoundaryManifold::d_s(const Eigen::ArrayXd& f) const {
  if (is_sphere()) throw std::runtime_error("tangential derivative is trivial in RoundSphere mode");
  if (f.size() != P_) throw std::runtime_error("function sampled on the wrong grid");
  if (!spectral_) return (dmat_ * f.matrix()).array();
  Eigen::VectorXcd c = dft_ * f.matrix().cast<std::complex<double>>();
  double floor = 1e-14 * c.cwiseAbs().maxCoeff();
  for (int k = 0; k < P_; ++k)
    if (std::abs(c[k]) < floor) c[k] = 0.0;
  return (dsyn_ * c).real().array();
}

Coeff BoundaryManifold::d_s(const Coeff& f) const {
  if (f.is_scalar() || is_sphere()) return Coeff(0.0);
  return Coeff(d_s(f.grid()));
}

NormalField BoundaryManifold::mean_curvature() const {
  NormalField H;
  if (is_sphere()) {
    H.push_back(Coeff(-double(n_ - 1) / R_));
    return H;
  }
  for (int f = 0; f < n_ - 1; ++f) H.push_back(Coeff(Eigen::ArrayXd(kappa_.col(f).array())));
  return H;
}

const Eigen::MatrixXd& BoundaryManifold::points() const {
  if (is_sphere()) throw std::runtime_error("no sample points in RoundSphere mode");
  return pts_;
}

const Eigen::MatrixXd& BoundaryManifold::tangent() const {
  if (is_sphere()) throw std::runtime_error("no tangent field in RoundSphere mode");
  return tan_;
}

const Eigen::MatrixXd& BoundaryManifold::normal(int i) const {
  if (is_sphere()) throw std::runtime_error("no sampled frame in RoundSphere mode");
  return frame_.at(size_t(i));
}

Eigen::ArrayXd BoundaryManifold::curvature_component(int i) const {
  if (is_sphere()) throw std::runtime_error("no sampled curvature in RoundSphere mode");
  return kappa_.col(i).array();
}

std::string BoundaryManifold::report_json() const {
  nlohmann::ordered_json j;
  if (is_sphere()) {
    j["mode"] = "round_sphere";
    j["n"] = n_;
    j["R"] = R_;
    j["volume"] = length_;
    j["mean_curvature"] = -double(n_ - 1) / R_;
  } else {
    j["mode"] = "curve";
    j["n"] = n_;
    j["samples"] = P_;
    j["length"] = length_;
    j["curvature_min"] = kappa_.col(0).minCoeff();
    j["curvature_max"] = kappa_.col(0).maxCoeff();
  }
  return j.dump(2);
}

Series d_s(const Series& a, const BoundaryManifold& b) {
  return map_coeffs(a, [&b](const Coeff& c) { return b.d_s(c); });
}

}  // namespace rvh
