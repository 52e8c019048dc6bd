#pragma once

// Split del-bar / del operators on functions of (s, t, m), where (s, t) is a
// cylinder coordinate and m a sphere point.
//
//   dbar_sigma(f) = d_sigma f + i (d_sigma f) o j     (cylinder leg)
//   del_M(f)      = d_M f     - i (d_M f) o J         (sphere leg)
//
// No 1/2 in front of either.  With z = s + it and j dds = ddt these give
// comp_ds = f_s + i f_t and comp_dt = -i comp_ds for dbar_sigma, so a
// holomorphic f is annihilated.
//
// The three defect operations compare two operator orderings that agree in
// the continuum.  For grid data the orderings commute identically (all the
// building blocks are real-linear in the samples), so each comparison pits
// the production second-order stencil against a fourth-order realization of
// the other route: the measured defect is then the genuine second-order
// truncation of the production route, and it would jump to O(1) if either
// route's algebra were wrong.

#include <functional>

#include "percr/grid.hpp"

namespace percr {

struct SampledFunction {
  CylinderGrid grid;
  std::vector<SpherePoint> m_samples;
  // Scalar value at cylinder point (s, t) over the sphere sample m.
  std::function<cpx(double s, double t, const SpherePoint& m)> eval;

  cpx value(int i, int j, int k) const {
    return eval(grid.s(i), grid.t(j), m_samples[k]);
  }
};

// Tangent-vector-valued analogue; values live in T_m at each m sample,
// written in that sample's chart.
struct SampledVectorField {
  CylinderGrid grid;
  std::vector<SpherePoint> m_samples;
  std::function<cpx(double s, double t, const SpherePoint& m)> eval;
};

namespace detail {

inline double wrap_period(double t) { return t - std::floor(t); }

template <class F>
cpx d_ds2(const F& f, double s, double t, double h) {
  return (f(s + h, t) - f(s - h, t)) / (2.0 * h);
}

template <class F>
cpx d_dt2(const F& f, double s, double t, double h) {
  return (f(s, wrap_period(t + h)) - f(s, wrap_period(t - h))) / (2.0 * h);
}

template <class F>
cpx d_ds4(const F& f, double s, double t, double h) {
  return (-f(s + 2 * h, t) + 8.0 * f(s + h, t) - 8.0 * f(s - h, t) +
          f(s - 2 * h, t)) /
         (12.0 * h);
}

template <class F>
cpx d_dt4(const F& f, double s, double t, double h) {
  return (-f(s, wrap_period(t + 2 * h)) + 8.0 * f(s, wrap_period(t + h)) -
          8.0 * f(s, wrap_period(t - h)) + f(s, wrap_period(t - 2 * h))) /
         (12.0 * h);
}

// One-sided second-order s-derivative for the first/last rows.
template <class F>
cpx d_ds2_onesided(const F& f, double s, double t, double h, int sign) {
  const double e = sign > 0 ? h : -h;
  return (-3.0 * f(s, t) + 4.0 * f(s + e, t) - f(s + 2 * e, t)) / (2.0 * e);
}

}  // namespace detail

inline constexpr double kSphereStep = 1e-5;  // M-direction difference step

// Shift p by delta inside its own chart.
inline SpherePoint nudge(const SpherePoint& p, cpx delta) {
  return {p.coord + delta, p.chart};
}

// Pointwise del_M contraction: d_M f(dir) - i d_M f(J dir) at (s, t, m).
template <class F>
cpx del_M_at(const F& eval, double s, double t, const SpherePoint& m,
             cpx direction, double step = kSphereStep,
             const ComplexStructure& j = standard_j()) {
  const cpx jdir = j.apply(m, direction);
  const cpx d1 = (eval(s, t, nudge(m, step * direction)) -
                  eval(s, t, nudge(m, -step * direction))) /
                 (2.0 * step);
  const cpx d2 = (eval(s, t, nudge(m, step * jdir)) -
                  eval(s, t, nudge(m, -step * jdir))) /
                 (2.0 * step);
  return d1 - cpx(0.0, 1.0) * d2;
}

// (0,1) cylinder-form sample: comp_dt == -i * comp_ds holds by construction
// at every node; both components stored anyway since consumers contract
// against either basis vector.
struct SigmaOneForm {
  CylinderGrid grid;
  std::vector<SpherePoint> m_samples;
  std::vector<cpx> comp_ds;
  std::vector<cpx> comp_dt;

  int index(int i, int j, int k) const {
    return (k * grid.n_s + i) * grid.n_t + grid.wrap_t(j);
  }
};

inline SigmaOneForm dbar_sigma(const SampledFunction& f) {
  SigmaOneForm out{f.grid, f.m_samples, {}, {}};
  const int nm = static_cast<int>(f.m_samples.size());
  out.comp_ds.resize(static_cast<size_t>(f.grid.size()) * nm);
  out.comp_dt.resize(out.comp_ds.size());
  const double hs = f.grid.h_s(), ht = f.grid.h_t();
  const cpx I(0.0, 1.0);
  for (int k = 0; k < nm; ++k) {
    const SpherePoint& m = f.m_samples[k];
    auto g = [&](double s, double t) { return f.eval(s, t, m); };
    for (int i = 0; i < f.grid.n_s; ++i)
      for (int j = 0; j < f.grid.n_t; ++j) {
        const double s = f.grid.s(i), t = f.grid.t(j);
        cpx fs;
        if (i == 0)
          fs = detail::d_ds2_onesided(g, s, t, hs, +1);
        else if (i == f.grid.n_s - 1)
          fs = detail::d_ds2_onesided(g, s, t, hs, -1);
        else
          fs = detail::d_ds2(g, s, t, hs);
        const cpx ft = detail::d_dt2(g, s, t, ht);
        const cpx ds = fs + I * ft;
        out.comp_ds[out.index(i, j, k)] = ds;
        out.comp_dt[out.index(i, j, k)] = -I * ds;
      }
  }
  return out;
}

// del_M contraction sampled over the whole grid for one (p, direction).
inline std::vector<cpx> del_M(const SampledFunction& f, const SpherePoint& p,
                              cpx direction, double step = kSphereStep) {
  if (std::abs(p.coord) > kChartSwitchRadius)
    throw std::invalid_argument("del_M: base point outside its chart disk; normalize first");
  std::vector<cpx> out(f.grid.size());
  for (int i = 0; i < f.grid.n_s; ++i)
    for (int j = 0; j < f.grid.n_t; ++j)
      out[f.grid.index(i, j)] =
          del_M_at(f.eval, f.grid.s(i), f.grid.t(j), p, direction, step);
  return out;
}

// || (id x Phi) dbar_sigma X  -  dbar_sigma Phi(X) ||_sup over the interior
// where both stencils fit.  Phi(X) means the pointwise dz-coefficient; the
// second route is evaluated fourth-order (see header comment).
inline double diagram_defect_0(const SampledVectorField& x) {
  const auto& g = x.grid;
  if (g.n_s < 8) throw std::invalid_argument("diagram_defect_0: grid too small");
  const double hs = g.h_s(), ht = g.h_t();
  const cpx I(0.0, 1.0);
  double worst = 0.0;
  for (const SpherePoint& m : x.m_samples) {
    auto xv = [&](double s, double t) { return x.eval(s, t, m); };
    auto phi = [&](double s, double t) {
      return phi_coefficient(m, x.eval(s, t, m));
    };
    for (int i = 2; i < g.n_s - 2; ++i)
      for (int j = 0; j < g.n_t; ++j) {
        const double s = g.s(i), t = g.t(j);
        const cpx top = phi_coefficient(
            m, detail::d_ds2(xv, s, t, hs) + I * detail::d_dt2(xv, s, t, ht));
        const cpx bottom =
            detail::d_ds4(phi, s, t, hs) + I * detail::d_dt4(phi, s, t, ht);
        worst = std::max(worst, std::abs(top - bottom));
      }
  }
  return worst;
}

// || del_M (dbar_sigma f) - dbar_sigma (del_M f) ||_sup, contracted against
// the unit M-direction.  First route second-order, second route fourth.
inline double diagram_defect_1(const SampledFunction& f) {
  const auto& g = f.grid;
  if (g.n_s < 8) throw std::invalid_argument("diagram_defect_1: grid too small");
  const double hs = g.h_s(), ht = g.h_t();
  const cpx I(0.0, 1.0);
  double worst = 0.0;
  for (const SpherePoint& m : f.m_samples) {
    auto dbar2 = [&](double s, double t, const SpherePoint& p) {
      auto slice = [&](double ss, double tt) { return f.eval(ss, tt, p); };
      return detail::d_ds2(slice, s, t, hs) + I * detail::d_dt2(slice, s, t, ht);
    };
    auto delm = [&](double s, double t) {
      return del_M_at(f.eval, s, t, m, cpx(1.0, 0.0));
    };
    for (int i = 2; i < g.n_s - 2; ++i)
      for (int j = 0; j < g.n_t; ++j) {
        const double s = g.s(i), t = g.t(j);
        const cpx route_a = del_M_at(dbar2, s, t, m, cpx(1.0, 0.0));
        const cpx route_b =
            detail::d_ds4(delm, s, t, hs) + I * detail::d_dt4(delm, s, t, ht);
        worst = std::max(worst, std::abs(route_a - route_b));
      }
  }
  return worst;
}

// Both realizations of the exact perturbation of a potential f, plus their
// sup-distance in the round metric:
//   route a:  dbar_sigma( Phi^{-1}( del_M f ) )      (vector-valued, order 2)
//   route b:  (id x Phi)^{-1}( del_M( dbar_sigma f ) )   (order-4 cylinder leg)
struct TwoWayPerturbation {
  CylinderGrid grid;
  std::vector<SpherePoint> m_samples;
  std::vector<cpx> route_a;  // ds-contraction, tangent value at each m
  std::vector<cpx> route_b;
  double defect = 0.0;

  int index(int i, int j, int k) const {
    return (k * grid.n_s + i) * grid.n_t + grid.wrap_t(j);
  }
};

inline TwoWayPerturbation exact_perturbation_two_ways(const SampledFunction& f) {
  const auto& g = f.grid;
  if (g.n_s < 8)
    throw std::invalid_argument("exact_perturbation_two_ways: grid too small");
  const double hs = g.h_s(), ht = g.h_t();
  const cpx I(0.0, 1.0);
  TwoWayPerturbation out;
  out.grid = g;
  out.m_samples = f.m_samples;
  const int nm = static_cast<int>(f.m_samples.size());
  out.route_a.assign(static_cast<size_t>(g.size()) * nm, cpx(0.0, 0.0));
  out.route_b.assign(out.route_a.size(), cpx(0.0, 0.0));
  for (int k = 0; k < nm; ++k) {
    const SpherePoint& m = f.m_samples[k];
    auto vec_x = [&](double s, double t) {
      return phi_inverse(m, del_M_at(f.eval, s, t, m, cpx(1.0, 0.0)));
    };
    auto dbar4 = [&](double s, double t, const SpherePoint& p) {
      auto slice = [&](double ss, double tt) { return f.eval(ss, tt, p); };
      return detail::d_ds4(slice, s, t, hs) + I * detail::d_dt4(slice, s, t, ht);
    };
    for (int i = 2; i < g.n_s - 2; ++i)
      for (int j = 0; j < g.n_t; ++j) {
        const double s = g.s(i), t = g.t(j);
        const cpx pa =
            detail::d_ds2(vec_x, s, t, hs) + I * detail::d_dt2(vec_x, s, t, ht);
        const cpx pb = phi_inverse(m, del_M_at(dbar4, s, t, m, cpx(1.0, 0.0)));
        out.route_a[out.index(i, j, k)] = pa;
        out.route_b[out.index(i, j, k)] = pb;
        out.defect = std::max(out.defect, fs_norm(m, pa - pb));
      }
  }
  return out;
}

}  // namespace percr
