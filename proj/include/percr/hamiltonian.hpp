#pragma once

// Time-dependent Hamiltonian data driving the perturbation.
//
// The profile psi(s) modulates the Hamiltonian
//
//     H(s, z) = lambda psi(s) (|z|^2 - 1) / (|z|^2 + 1)      (chart Z)
//             = lambda psi(s) (1 - |w|^2) / (1 + |w|^2)      (chart W)
//
// whose round-metric gradient is 4 lambda psi(s) z in chart Z and
// -4 lambda psi(s) w in chart W.  The perturbation one-form is
// P = grad(H) ds - J grad(H) dt.  For compactly supported psi the form is
// exact: P = dbar_sigma(i g) with g(s, p) = -int_s^inf H(r, p) dr.

#include <algorithm>
#include <utility>

#include "percr/cr_ops.hpp"

namespace percr {

namespace detail {

// Adaptive Simpson, plain recursive version; good enough for the smooth
// one-dimensional profiles handled here.
inline double simpson_step(double a, double b, double fa, double fm,
                           double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_step(a, m, fa, flm, fm);
  const double right = simpson_step(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson_step(a, b, fa, fm, fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

// Profile of the s-dependence: constant tau, a mass-normalized bump on a
// compact interval, or tabulated samples interpolated by Hermite cubics.
class PsiProfile {
 public:
  enum class Kind { Constant, Bump, Tabulated };

  static PsiProfile constant(double tau) {
    PsiProfile p;
    p.kind_ = Kind::Constant;
    p.tau_ = tau;
    return p;
  }

  // c * exp(-1/(1-x^2)) rescaled to [a, b]; c fixed by quadrature so the
  // integral equals `mass`.
  static PsiProfile bump(double a, double b, double mass) {
    if (!(a < b)) throw std::invalid_argument("PsiProfile::bump: need a < b");
    PsiProfile p;
    p.kind_ = Kind::Bump;
    p.a_ = a;
    p.b_ = b;
    p.mass_ = mass;
    const double kernel_mass =
        detail::integrate([](double x) { return bump_kernel(x); }, -1.0, 1.0, 1e-13);
    p.scale_ = 2.0 * mass / ((b - a) * kernel_mass);
    p.build_cumulative();
    return p;
  }

  // Samples (s_i, psi_i), strictly increasing s.  Values outside the sample
  // range are zero; the profile is compactly supported when the endpoint
  // values vanish.
  static PsiProfile tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 4)
      throw std::invalid_argument("PsiProfile::tabulated: need at least 4 samples");
    for (size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i - 1].first < samples[i].first))
        throw std::invalid_argument("PsiProfile::tabulated: abscissae must increase");
    PsiProfile p;
    p.kind_ = Kind::Tabulated;
    p.samples_ = std::move(samples);
    p.a_ = p.samples_.front().first;
    p.b_ = p.samples_.back().first;
    p.mass_ = detail::integrate([&p](double s) { return p(s); }, p.a_, p.b_, 1e-12);
    p.build_cumulative();
    return p;
  }

  Kind kind() const { return kind_; }

  double operator()(double s) const {
    switch (kind_) {
      case Kind::Constant:
        return tau_;
      case Kind::Bump: {
        const double x = (2.0 * s - a_ - b_) / (b_ - a_);
        return scale_ * bump_kernel(x);
      }
      case Kind::Tabulated:
        return eval_table(s);
    }
    return 0.0;
  }

  bool compact_support() const {
    if (kind_ == Kind::Constant) return tau_ == 0.0;
    if (kind_ == Kind::Bump) return true;
    return samples_.front().second == 0.0 && samples_.back().second == 0.0;
  }

  // Support interval for compactly supported kinds.
  std::pair<double, double> support() const {
    require_compact("support");
    return {a_, b_};
  }

  double mass() const {
    require_compact("mass");
    return mass_;
  }

  // int_{-inf}^s psi, from the cached cumulative table (Hermite cubic between
  // table nodes, consistent with the profile's own values as derivatives).
  double cumulative(double s) const {
    require_compact("cumulative");
    if (kind_ == Kind::Constant) return 0.0;  // only the zero profile gets here
    if (s <= a_) return 0.0;
    if (s >= b_) return mass_;
    const double x = (s - a_) / table_h_;
    int cell = std::min(static_cast<int>(x), table_n_ - 1);
    const double u = x - cell;
    const double s0 = a_ + cell * table_h_;
    const double y0 = cum_[cell], y1 = cum_[cell + 1];
    const double d0 = (*this)(s0) * table_h_, d1 = (*this)(s0 + table_h_) * table_h_;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * d0 +
           (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * d1;
  }

  double tail(double s) const { return mass() - cumulative(s); }

  double constant_value() const {
    if (kind_ != Kind::Constant)
      throw std::domain_error("PsiProfile: not a constant profile");
    return tau_;
  }

  const std::vector<std::pair<double, double>>& samples() const { return samples_; }
  std::pair<double, double> bump_interval() const { return {a_, b_}; }
  double requested_mass() const { return mass_; }

 private:
  static double bump_kernel(double x) {
    const double d = 1.0 - x * x;
    return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
  }

  void require_compact(const char* op) const {
    if (!compact_support())
      throw std::domain_error(std::string("PsiProfile::") + op +
                              ": profile is not compactly supported");
  }

  double eval_table(double s) const {
    if (s <= a_ || s >= b_) {
      // Endpoint samples still count; strictly outside is zero.
      if (s == a_) return samples_.front().second;
      if (s == b_) return samples_.back().second;
      return 0.0;
    }
    size_t hi = 1;
    while (hi < samples_.size() - 1 && samples_[hi].first < s) ++hi;
    const size_t lo = hi - 1;
    const double sl = samples_[lo].first, sr = samples_[hi].first;
    const double dl = sr - sl;
    const double u = (s - sl) / dl;
    auto slope = [&](size_t idx) {
      if (idx == 0)
        return (samples_[1].second - samples_[0].second) /
               (samples_[1].first - samples_[0].first);
      if (idx == samples_.size() - 1)
        return (samples_[idx].second - samples_[idx - 1].second) /
               (samples_[idx].first - samples_[idx - 1].first);
      return (samples_[idx + 1].second - samples_[idx - 1].second) /
             (samples_[idx + 1].first - samples_[idx - 1].first);
    };
    const double y0 = samples_[lo].second, y1 = samples_[hi].second;
    const double d0 = slope(lo) * dl, d1 = slope(hi) * dl;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * d0 +
           (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * d1;
  }

  void build_cumulative() {
    table_n_ = 4096;
    table_h_ = (b_ - a_) / table_n_;
    cum_.assign(table_n_ + 1, 0.0);
    for (int n = 0; n < table_n_; ++n) {
      const double lo = a_ + n * table_h_;
      const double hi = lo + table_h_;
      const double mid = 0.5 * (lo + hi);
      // Per-cell Simpson; cells are narrow enough that this sits far below
      // the 1e-10 interpolation budget.
      cum_[n + 1] = cum_[n] + (hi - lo) / 6.0 *
                                  ((*this)(lo) + 4.0 * (*this)(mid) + (*this)(hi));
    }
    // For bumps the requested mass stays authoritative; the table agrees with
    // it to quadrature accuracy.  Tabulated profiles take their mass from it.
    if (kind_ == Kind::Tabulated) mass_ = cum_.back();
  }

  Kind kind_ = Kind::Constant;
  double tau_ = 0.0;
  double a_ = 0.0, b_ = 1.0;
  double mass_ = 0.0;
  double scale_ = 0.0;
  std::vector<std::pair<double, double>> samples_;
  std::vector<double> cum_;
  int table_n_ = 0;
  double table_h_ = 1.0;
};

struct PerturbationSpec {
  PsiProfile psi;
  double lambda = 0.0;

  PerturbationSpec(PsiProfile p, double lam) : psi(std::move(p)), lambda(lam) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("PerturbationSpec: lambda must lie in [0, 1]");
  }

  bool properly_exact() const { return psi.compact_support(); }
};

// (|z|^2 - 1)/(|z|^2 + 1), the height function this Hamiltonian is built on;
// same point evaluated in chart W flips the sign of the expression.
inline double sphere_height(const SpherePoint& p) {
  const double r2 = std::norm(p.coord);
  const double h = (r2 - 1.0) / (r2 + 1.0);
  return p.chart == Chart::Z ? h : -h;
}

inline double hamiltonian(const PerturbationSpec& spec, double s,
                          const SpherePoint& p) {
  return spec.lambda * spec.psi(s) * sphere_height(p);
}

// Round-metric gradient of H at (s, p), in p's chart.
inline cpx grad_hamiltonian(const PerturbationSpec& spec, double s,
                            const SpherePoint& p) {
  const double c = 4.0 * spec.lambda * spec.psi(s);
  return p.chart == Chart::Z ? c * p.coord : -c * p.coord;
}

// Contractions of P = grad(H) ds - J grad(H) dt with d/ds and d/dt.
struct PerturbationValue {
  cpx comp_ds;
  cpx comp_dt;
};

inline PerturbationValue perturbation_form(const PerturbationSpec& spec, double s,
                                           const SpherePoint& p,
                                           const ComplexStructure& j = standard_j()) {
  const cpx grad = grad_hamiltonian(spec, s, p);
  return {grad, -j.apply(p, grad)};
}

// Potential of the properly exact case: g(s, p) = -int_s^inf H.  Demands a
// compactly supported profile.
inline double exact_potential(const PerturbationSpec& spec, double s,
                              const SpherePoint& p) {
  if (!spec.properly_exact())
    throw std::domain_error("exact_potential: profile is not compactly supported");
  return -spec.lambda * spec.psi.tail(s) * sphere_height(p);
}

// Checks dbar_sigma(i g) = i H ds + H dt on the given grid and sphere
// samples: returns the sup over nodes of |comp_ds - i H| (the dt component
// is tied to comp_ds exactly).  Second-order in the grid spacing.
inline double verify_proper_exactness(const PerturbationSpec& spec,
                                      const CylinderGrid& grid,
                                      const std::vector<SpherePoint>& m_samples) {
  SampledFunction f{grid, m_samples, [&spec](double s, double, const SpherePoint& m) {
                      return cpx(0.0, 1.0) * exact_potential(spec, s, m);
                    }};
  const SigmaOneForm form = dbar_sigma(f);
  double worst = 0.0;
  for (int k = 0; k < static_cast<int>(m_samples.size()); ++k)
    for (int i = 0; i < grid.n_s; ++i)
      for (int j = 0; j < grid.n_t; ++j) {
        const cpx target = cpx(0.0, 1.0) * hamiltonian(spec, grid.s(i), m_samples[k]);
        worst = std::max(worst,
                         std::abs(form.comp_ds[form.index(i, j, k)] - target));
      }
  return worst;
}

}  // namespace percr
