#pragma once

// Closed-form solution families of the perturbed equation
//
//     u_s + i u_t + 4 lambda psi(s) u = 0        (chart Z)
//     w_s + i w_t - 4 lambda psi(s) w = 0        (chart W)
//
// Two families:
//   properly perturbed   u(s,t) = exp(-4 lambda int_{-inf}^s psi) exp(2 pi k (s + i t))
//   constant-profile     u(s,t) = exp(4 tau s) exp(2 pi k (s + i t)),
//                        admissible iff pi k + 2 tau > 0.
//
// Evaluation works in log-space and lands in whichever chart keeps the
// coordinate inside the unit disk, so arbitrarily long cylinders stay finite.

#include "percr/hamiltonian.hpp"

namespace percr {

inline constexpr double kPi = 3.14159265358979323846;

// Weight of the second-difference damping folded into the discrete residual.
// Centred first differences cannot see odd-even wiggles (the s-checkerboard
// and the constant and Nyquist t-modes), so the plain scheme carries a family
// of spurious near-null modes that grows with the grid and wrecks Newton
// steps.  Adding eps * (second difference) in both directions costs O(h^2)
// accuracy, the same order as the scheme, while giving those wiggle modes an
// O(1) diagonal.
inline constexpr double kGridDamping = 0.5;

struct SolutionFamily {
  enum class Kind { ProperlyPerturbed, ConstantProfile };

  Kind kind = Kind::ProperlyPerturbed;
  int k = 1;          // t-winding
  PsiProfile psi;     // compactly supported profile (properly perturbed kind)
  double lambda = 0.0;
  double tau = 0.0;   // constant-profile strength

  static SolutionFamily properly_perturbed(int k, PsiProfile psi, double lambda) {
    if (!psi.compact_support())
      throw std::invalid_argument(
          "SolutionFamily: properly perturbed family needs compact support");
    SolutionFamily f;
    f.kind = Kind::ProperlyPerturbed;
    f.k = k;
    f.psi = std::move(psi);
    f.lambda = lambda;
    return f;
  }

  static SolutionFamily constant_profile(int k, double tau) {
    SolutionFamily f;
    f.kind = Kind::ConstantProfile;
    f.k = k;
    f.tau = tau;
    f.lambda = 1.0;
    return f;
  }

  // Equation data the family solves.  Note the sign for the constant-profile
  // kind: exp(4 tau s) exp(2 pi k (s+it)) satisfies u_s + i u_t - 4 tau u = 0,
  // so its constant coefficient is -tau while the admissibility predicate and
  // the area value pi k are quoted in terms of +tau.
  PerturbationSpec perturbation() const {
    if (kind == Kind::ProperlyPerturbed) return PerturbationSpec(psi, lambda);
    return PerturbationSpec(PsiProfile::constant(-tau), 1.0);
  }

  // The constant-profile family only defines a finite-area sphere map when
  // pi k + 2 tau > 0; the properly perturbed one always does.
  bool valid() const {
    if (kind == Kind::ProperlyPerturbed) return true;
    return kPi * k + 2.0 * tau > 0.0;
  }

  // log |u| and arg u at (s, t).
  std::pair<double, double> log_polar(double s, double t) const {
    double log_r;
    if (kind == Kind::ProperlyPerturbed)
      log_r = -4.0 * lambda * psi.cumulative(s) + 2.0 * kPi * k * s;
    else
      log_r = (4.0 * tau + 2.0 * kPi * k) * s;
    return {log_r, 2.0 * kPi * k * t};
  }

  SpherePoint evaluate(double s, double t) const {
    const auto [log_r, theta] = log_polar(s, t);
    // Switch charts at |u| = 1: both representations then stay inside the
    // closed unit disk, well within the switch radius.
    if (log_r <= 0.0)
      return {std::exp(log_r) * cpx(std::cos(theta), std::sin(theta)), Chart::Z};
    return {std::exp(-log_r) * cpx(std::cos(theta), -std::sin(theta)), Chart::W};
  }

  // Degree datum recorded on sampled maps: |k| for the properly perturbed
  // family (orientation of the covering flips with the sign of k), the raw
  // winding k for the constant-profile one.
  int degree() const {
    return kind == Kind::ProperlyPerturbed ? std::abs(k) : k;
  }
};

inline MapSample sample_family(const SolutionFamily& fam, const CylinderGrid& grid) {
  MapSample u(grid, fam.degree());
  for (int i = 0; i < grid.n_s; ++i)
    for (int j = 0; j < grid.n_t; ++j)
      u.at(i, j) = fam.evaluate(grid.s(i), grid.t(j));
  return u;
}

// Discrete residual of the perturbed equation at the interior nodes of a
// chart-tagged sample, in each node's own chart.  Boundary rows are Dirichlet
// data and carry no residual.  The kGridDamping second differences keep the
// parasitic wiggle modes of the centred scheme out of the solver's way; they
// vanish on constants and add only O(h^2) on smooth samples.
inline std::vector<cpx> cr_residual_field(const MapSample& u,
                                          const PerturbationSpec& spec) {
  const auto& g = u.grid;
  std::vector<cpx> res(g.size(), cpx(0.0, 0.0));
  const cpx I(0.0, 1.0);
  for (int i = 1; i < g.n_s - 1; ++i) {
    const double coeff = 4.0 * spec.lambda * spec.psi(g.s(i));
    for (int j = 0; j < g.n_t; ++j) {
      const SpherePoint& c = u.at(i, j);
      const cpx sp = pull_to_chart(c, u.at(i + 1, j));
      const cpx sm = pull_to_chart(c, u.at(i - 1, j));
      const cpx tp = pull_to_chart(c, u.at(i, j + 1));
      const cpx tm = pull_to_chart(c, u.at(i, j - 1));
      const double sign = c.chart == Chart::Z ? 1.0 : -1.0;
      res[g.index(i, j)] = (sp - sm) / (2.0 * g.h_s()) +
                           I * (tp - tm) / (2.0 * g.h_t()) +
                           sign * coeff * c.coord +
                           kGridDamping * (sp + sm + tp + tm - 4.0 * c.coord);
    }
  }
  return res;
}

// Sup of the residual field in the round metric (chart-independent scale).
inline double residual_sup_norm(const MapSample& u, const std::vector<cpx>& res) {
  double worst = 0.0;
  const auto& g = u.grid;
  for (int i = 1; i < g.n_s - 1; ++i)
    for (int j = 0; j < g.n_t; ++j)
      worst = std::max(worst, fs_norm(u.at(i, j), res[g.index(i, j)]));
  return worst;
}

// Sample the family on the grid and measure how well the difference scheme
// annihilates it; second order in the spacing.
inline double residual_of_family(const SolutionFamily& fam,
                                 const CylinderGrid& grid) {
  if (!fam.valid())
    throw std::domain_error("residual_of_family: family parameters inadmissible");
  const MapSample u = sample_family(fam, grid);
  const PerturbationSpec spec = fam.perturbation();
  return residual_sup_norm(u, cr_residual_field(u, spec));
}

}  // namespace percr
