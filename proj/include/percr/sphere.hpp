#pragma once

// Round-sphere geometry in two stereographic charts.
//
// The sphere is covered by charts Z and W with transition w = 1/z, so the
// point z = 0 of chart Z is the antipode of w = 0 ("infinity").  All metric
// data comes from the area form
//
//     omega = dx dy / (x^2 + y^2 + 1)^2
//
// whose total mass is pi, and the inner product
//
//     <v1, v2> = Re(conj(v1) v2) / (|z|^2 + 1)^2
//
// at the base point z.  Both expressions look the same in either chart, and
// tangent values transform by vhat -> -vhat / z^2 under the transition.
//
// phi_map is the antilinear identification of a tangent vector X with the
// complex-linear one-form  Y -> omega(X, Y) - i omega(X, J Y).  On this
// Kaehler model it collapses to multiplication:  -i g0(p) conj(X) Y  with
// g0 = 1/(1+|p|^2)^2, which is what phi_coefficient returns.

#include <complex>
#include <cmath>
#include <stdexcept>

namespace percr {

using cpx = std::complex<double>;

enum class Chart { Z, W };

// Points with |coord| beyond this radius are re-expressed in the other chart.
inline constexpr double kChartSwitchRadius = 2.0;

struct SpherePoint {
  cpx coord{0.0, 0.0};
  Chart chart = Chart::Z;
};

struct TangentVector {
  SpherePoint base;
  cpx value{0.0, 0.0};
};

// Hook for a position-dependent almost complex structure.  The laboratory
// only ever uses the integrable J (multiplication by i in both charts), but
// every consumer goes through this handle.
struct ComplexStructure {
  cpx apply(const SpherePoint&, cpx v) const { return cpx(0.0, 1.0) * v; }
};

inline const ComplexStructure& standard_j() {
  static const ComplexStructure j{};
  return j;
}

// Conformal factor of the round metric at p: 1/(1+|p|^2)^2.
inline double conformal_g0(const SpherePoint& p) {
  const double r2 = std::norm(p.coord);
  const double d = 1.0 + r2;
  return 1.0 / (d * d);
}

inline SpherePoint chart_switch(const SpherePoint& p) {
  if (p.coord == cpx(0.0, 0.0))
    throw std::domain_error("chart_switch: point is the origin of its chart");
  return {1.0 / p.coord, p.chart == Chart::Z ? Chart::W : Chart::Z};
}

// vhat -> -vhat / z^2 (derivative of the transition w = 1/z).
inline TangentVector chart_switch(const TangentVector& t) {
  const SpherePoint q = chart_switch(t.base);
  return {q, -t.value / (t.base.coord * t.base.coord)};
}

// Re-express p in the other chart when its coordinate leaves the disk of
// radius `radius`; identity otherwise.
inline SpherePoint normalize_chart(const SpherePoint& p,
                                   double radius = kChartSwitchRadius) {
  if (std::abs(p.coord) > radius) return chart_switch(p);
  return p;
}

// omega(du_ds, du_dt) at p: signed area density of a map with the given
// partial derivatives.
inline double fs_area_density(const SpherePoint& p, cpx du_ds, cpx du_dt) {
  return std::imag(std::conj(du_ds) * du_dt) * conformal_g0(p);
}

inline double fs_inner(const SpherePoint& p, cpx v, cpx w) {
  return std::real(std::conj(v) * w) * conformal_g0(p);
}

inline double fs_norm(const SpherePoint& p, cpx v) {
  return std::abs(v) / (1.0 + std::norm(p.coord));
}

// omega(X, Y) - i omega(X, J Y); antilinear in X, linear in Y.
inline cpx phi_map(const SpherePoint& p, cpx x, cpx y,
                   const ComplexStructure& j = standard_j()) {
  const double g0 = conformal_g0(p);
  const double a = std::imag(std::conj(x) * y) * g0;
  const double b = std::imag(std::conj(x) * j.apply(p, y)) * g0;
  return cpx(a, -b);
}

// dz-coefficient of phi_map(p, x, .): phi_map(p, x, y) == phi_coefficient * y.
inline cpx phi_coefficient(const SpherePoint& p, cpx x) {
  return cpx(0.0, -1.0) * conformal_g0(p) * std::conj(x);
}

// Inverse of the identification: the X with phi_coefficient(p, X) == a.
inline cpx phi_inverse(const SpherePoint& p, cpx a) {
  return cpx(0.0, -1.0) * std::conj(a) / conformal_g0(p);
}

// theta(v, v) = -(i/2) <dbar(v), dbar(v)> for a (0,1)-derivative value
// dbar(v) at p.  Purely imaginary; invariant under v -> jv because the
// (0,1) part is antilinear and the metric is J-invariant.
inline cpx theta_diagonal(const SpherePoint& p, cpx dbar_v) {
  return cpx(0.0, -0.5) * fs_inner(p, dbar_v, dbar_v);
}

struct EmbeddingPoint {
  double x1, x2, x3;
};

// Unit-sphere position in R^3.  Chart Z maps z = 0 to the south pole
// (0,0,-1); the transition w = 1/z flips the x2 and x3 axes, which is what
// makes the formula chart-consistent.  Handy for building globally smooth
// scalar test functions.
inline EmbeddingPoint sphere_embedding(const SpherePoint& p) {
  const double r2 = std::norm(p.coord);
  const double d = 1.0 + r2;
  const double sgn = p.chart == Chart::Z ? 1.0 : -1.0;
  return {2.0 * p.coord.real() / d, sgn * 2.0 * p.coord.imag() / d,
          sgn * (r2 - 1.0) / d};
}

}  // namespace percr
