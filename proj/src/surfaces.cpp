#include "rvh/surfaces.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rvh {

namespace {

double sphere_volume(double R, int dim) {
  // Volume of the round dim-sphere of radius R.
  double v = 2.0 * std::pow(std::numbers::pi, 0.5 * (dim + 1)) /
             std::tgamma(0.5 * (dim + 1));
  return v * std::pow(R, double(dim));
}

/* J_k(W) = integral of w^{k-1} / sqrt(1 + w^2) on [0, W], by the
 * integration-by-parts recurrence (k-1) J_k = W^{k-2} sqrt(1+W^2)
 * - (k-2) J_{k-2}. */
double sqrt_moment(int k, double W) {
  double root = std::sqrt(1.0 + W * W);
  if (k == 1) return std::asinh(W);
  if (k == 2) return root - 1.0;
  return (std::pow(W, double(k - 2)) * root - double(k - 2) * sqrt_moment(k - 2, W)) /
         double(k - 1);
}

}  // namespace

TailProvider hemisphere_tail(double R, int m) {
  if (!(R > 0.0)) throw std::invalid_argument("hemisphere needs a positive radius");
  if (m < 2) throw std::invalid_argument("need m >= 2");
  const double vol = sphere_volume(R, m - 1);
  const double unit = sphere_volume(1.0, m - 1);
  TailProvider t;
  t.density = [vol, R, m](double x) {
    return vol * std::pow(1.0 - (x * x) / (R * R), 0.5 * (m - 2)) / std::pow(x, double(m));
  };
  // Substituting w = sqrt(R^2 - x^2)/x turns the truncated volume into the
  // moment J_m, so the tail is exact for every m.
  t.tail = [unit, R, m](double d) {
    if (!(d < R)) return 0.0;
    return unit * sqrt_moment(m, std::sqrt(R * R - d * d) / d);
  };
  return t;
}

TailProvider cylinder_tail(double boundary_volume, int m) {
  if (m < 2) throw std::invalid_argument("need m >= 2");
  TailProvider t;
  t.density = [boundary_volume, m](double x) {
    return boundary_volume / std::pow(x, double(m));
  };
  t.tail = [boundary_volume, m](double d) {
    return boundary_volume * std::pow(d, double(1 - m)) / double(m - 1);
  };
  return t;
}

}  // namespace rvh
