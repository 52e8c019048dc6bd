#pragma once

// Newton-Krylov solver for the discrete perturbed Cauchy-Riemann system
//
//   D_s u + i D_t u + 4 lambda psi(s) u = 0   (chart Z, sign flipped in W)
//
// with Dirichlet rows at both s-ends.  The Jacobian is applied matrix-free;
// chart seams contribute the transition factor -1/z^2 on pulled neighbors,
// and the kGridDamping stencil of the residual is carried along everywhere.
// The Krylov method is BiCGSTAB.  Two preconditioners are available: the
// plain diagonal of the operator, and a structured solve that FFTs along t
// (the coefficients depend on s only) and factors one real tridiagonal
// system per t-frequency with partial pivoting.  The solver starts with the
// configured choice and falls back to the structured solve if the Krylov
// iteration stalls.

#include "percr/functionals.hpp"

namespace percr {

// Per-node complex increments in each node's active chart.  Boundary rows
// are carried but treated as fixed by the solver.
using TangentField = std::vector<cpx>;

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // sup fs-norm, includes the start
  bool converged = false;
  double final_residual = 0.0;
  std::vector<int> krylov_iterations;    // per Newton step
  std::string preconditioner_used;
  std::string failure;                   // empty when none
};

enum class PrecondKind { Diagonal, Structured };

struct SolverOptions {
  double krylov_tol_factor = 0.01;  // Krylov l2 target = factor * tol
  int krylov_max_iter = 0;          // 0: choose from the grid size
  PrecondKind preconditioner = PrecondKind::Diagonal;
  bool allow_fallback = true;       // retry a stalled step with Structured
  int line_search_halvings = 5;
};

inline std::vector<cpx> residual(const MapSample& u, const PerturbationSpec& spec) {
  return cr_residual_field(u, spec);
}

// Derivative of `residual` at u along `direction`.  Boundary rows are zero,
// matching the residual convention.
inline std::vector<cpx> linearization_apply(const MapSample& u,
                                            const PerturbationSpec& spec,
                                            const TangentField& direction) {
  const auto& g = u.grid;
  if (direction.size() != static_cast<size_t>(g.size()))
    throw std::invalid_argument("linearization_apply: direction size mismatch");
  std::vector<cpx> out(g.size(), cpx(0.0, 0.0));
  // Pulled neighbor increment: identity if the neighbor shares the center
  // chart, else the derivative of z -> 1/z.
  auto pulled = [&](const SpherePoint& center, int i, int j) {
    const SpherePoint& q = u.at(i, j);
    const cpx d = direction[g.index(i, j)];
    if (q.chart == center.chart) return d;
    if (q.coord == cpx(0.0, 0.0))
      throw ChartTearing("linearization hit a chart origin");
    return -d / (q.coord * q.coord);
  };
  for (int i = 1; i + 1 < g.n_s; ++i) {
    const double coeff = 4.0 * spec.lambda * spec.psi(g.s(i));
    for (int j = 0; j < g.n_t; ++j) {
      const SpherePoint& p = u.at(i, j);
      const cpx sp = pulled(p, i + 1, j);
      const cpx sm = pulled(p, i - 1, j);
      const cpx tp = pulled(p, i, j + 1);
      const cpx tm = pulled(p, i, j - 1);
      const cpx here = direction[g.index(i, j)];
      const double sign = (p.chart == Chart::Z) ? 1.0 : -1.0;
      out[g.index(i, j)] = (sp - sm) / (2.0 * g.h_s()) +
                           cpx(0.0, 1.0) * (tp - tm) / (2.0 * g.h_t()) +
                           sign * coeff * here +
                           kGridDamping * (sp + sm + tp + tm - 4.0 * here);
    }
  }
  return out;
}

namespace detail {

// Radix-2 FFT, in place; falls back to a direct transform for other sizes.
inline void fft(std::vector<cpx>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) {
    std::vector<cpx> out(n, cpx(0.0, 0.0));
    const double sgn = inverse ? 1.0 : -1.0;
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j)
        out[m] += a[j] * std::polar(1.0, sgn * 2.0 * kPi * m * j / n);
    a = std::move(out);
  } else {
    for (int i = 1, rev = 0; i < n; ++i) {
      int bit = n >> 1;
      for (; rev & bit; bit >>= 1) rev ^= bit;
      rev ^= bit;
      if (i < rev) std::swap(a[i], a[rev]);
    }
    for (int len = 2; len <= n; len <<= 1) {
      const double ang = (inverse ? 2.0 : -2.0) * kPi / len;
      const cpx wl = std::polar(1.0, ang);
      for (int i = 0; i < n; i += len) {
        cpx w(1.0, 0.0);
        for (int k = 0; k < len / 2; ++k) {
          const cpx even = a[i + k], odd = a[i + k + len / 2] * w;
          a[i + k] = even + odd;
          a[i + k + len / 2] = even - odd;
          w *= wl;
        }
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

// Real tridiagonal LU with partial pivoting (the LAPACK gttrf layout: an
// extra second superdiagonal absorbs pivoting fill-in).
struct TridiagLU {
  std::vector<double> dl, d, du, du2;
  std::vector<int> pivot_next;  // 1 when rows i, i+1 were swapped
  bool singular = false;

  void factor(std::vector<double> sub, std::vector<double> diag,
              std::vector<double> super) {
    const int n = static_cast<int>(diag.size());
    dl = std::move(sub);
    d = std::move(diag);
    du = std::move(super);
    du2.assign(std::max(n - 2, 0), 0.0);
    pivot_next.assign(std::max(n - 1, 0), 0);
    singular = false;
    for (int i = 0; i + 1 < n; ++i) {
      const bool last = (i + 2 == n);
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] != 0.0) {
          const double fact = dl[i] / d[i];
          dl[i] = fact;
          d[i + 1] -= fact * du[i];
        } else if (dl[i] == 0.0) {
          singular = true;
        }
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = d[i + 1];
        d[i + 1] = du[i] - fact * temp;
        du[i] = temp;
        if (!last) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        pivot_next[i] = 1;
      }
    }
    if (n > 0 && d[n - 1] == 0.0) singular = true;
  }

  void solve(std::vector<cpx>& b) const {
    const int n = static_cast<int>(d.size());
    for (int i = 0; i + 1 < n; ++i) {
      if (pivot_next[i]) std::swap(b[i], b[i + 1]);
      b[i + 1] -= dl[i] * b[i];
    }
    if (n == 0) return;
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (int i = n - 3; i >= 0; --i)
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  }
};

// Structured approximate inverse: exact for a map confined to one chart,
// and a strong approximation across seams.  Each s-row uses the majority
// chart sign of its nodes so rows stay coherent.
class StructuredPrecond {
 public:
  StructuredPrecond(const MapSample& u, const PerturbationSpec& spec) : grid_(u.grid) {
    const auto& g = u.grid;
    const int ni = g.n_s - 2;
    std::vector<double> sign(g.n_s, 1.0);
    for (int i = 0; i < g.n_s; ++i) {
      int z_count = 0;
      for (int j = 0; j < g.n_t; ++j)
        if (u.at(i, j).chart == Chart::Z) ++z_count;
      sign[i] = (2 * z_count >= g.n_t) ? 1.0 : -1.0;
    }
    lu_.resize(g.n_t);
    const double off = 1.0 / (2.0 * g.h_s());
    for (int m = 0; m < g.n_t; ++m) {
      // The i d/dt term lands on the real axis per mode, and so do both
      // pieces of the damping (s-stencil and the mode symbol of the
      // t-stencil), so the factors stay real.
      const double angle = kPi * m / g.n_t;
      const double shift = -std::sin(2.0 * angle) / g.h_t();
      const double damp_t = -4.0 * kGridDamping * std::sin(angle) * std::sin(angle);
      std::vector<double> sub(ni - 1, -off + kGridDamping);
      std::vector<double> super(ni - 1, off + kGridDamping);
      std::vector<double> diag(ni);
      for (int r = 0; r < ni; ++r)
        diag[r] = shift + damp_t - 2.0 * kGridDamping +
                  sign[r + 1] * 4.0 * spec.lambda * spec.psi(g.s(r + 1));
      lu_[m].factor(sub, diag, super);
      if (lu_[m].singular) {
        // Only reachable for degenerate grids; nudge the diagonal so the
        // preconditioner stays usable (accuracy is the Krylov loop's job).
        for (auto& v : diag) v += 1e-8 + std::abs(shift) * 1e-12;
        lu_[m].factor(sub, diag, super);
      }
    }
  }

  void apply(const std::vector<cpx>& r, std::vector<cpx>& z) const {
    const auto& g = grid_;
    z = r;
    const int ni = g.n_s - 2;
    std::vector<std::vector<cpx>> modes(g.n_t, std::vector<cpx>(ni));
    std::vector<cpx> row(g.n_t);
    for (int i = 1; i + 1 < g.n_s; ++i) {
      for (int j = 0; j < g.n_t; ++j) row[j] = r[g.index(i, j)];
      fft(row, false);
      for (int m = 0; m < g.n_t; ++m) modes[m][i - 1] = row[m];
    }
    for (int m = 0; m < g.n_t; ++m) lu_[m].solve(modes[m]);
    for (int i = 1; i + 1 < g.n_s; ++i) {
      for (int m = 0; m < g.n_t; ++m) row[m] = modes[m][i - 1];
      fft(row, true);
      for (int j = 0; j < g.n_t; ++j) z[g.index(i, j)] = row[j];
    }
  }

 private:
  CylinderGrid grid_;
  std::vector<TridiagLU> lu_;
};

inline double l2(const std::vector<cpx>& v) {
  double acc = 0.0;
  for (const cpx& x : v) acc += std::norm(x);
  return std::sqrt(acc);
}

inline cpx dot(const std::vector<cpx>& a, const std::vector<cpx>& b) {
  cpx acc(0.0, 0.0);
  for (size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

struct KrylovResult {
  bool converged = false;
  int iterations = 0;
  std::string failure;
};

template <class Apply, class Precond>
KrylovResult bicgstab(const Apply& apply, const Precond& precond,
                      const std::vector<cpx>& b, std::vector<cpx>& x,
                      double tol_abs, int max_iter) {
  const size_t n = b.size();
  x.assign(n, cpx(0.0, 0.0));
  std::vector<cpx> r = b, rhat = b, p(n, cpx(0, 0)), v(n, cpx(0, 0));
  std::vector<cpx> phat(n), s(n), shat(n), t(n);
  cpx rho(1.0, 0.0), alpha(1.0, 0.0), omega(1.0, 0.0);
  KrylovResult res;
  if (l2(r) <= tol_abs) {
    res.converged = true;
    return res;
  }
  for (int it = 1; it <= max_iter; ++it) {
    const cpx rho_new = dot(rhat, r);
    if (std::abs(rho_new) == 0.0) {
      res.failure = "bicgstab breakdown (rho = 0)";
      res.iterations = it;
      return res;
    }
    const cpx beta = (rho_new / rho) * (alpha / omega);
    for (size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    precond(p, phat);
    v = apply(phat);
    const cpx denom = dot(rhat, v);
    if (std::abs(denom) == 0.0) {
      res.failure = "bicgstab breakdown (rhat orthogonal to v)";
      res.iterations = it;
      return res;
    }
    alpha = rho_new / denom;
    for (size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
    if (l2(s) <= tol_abs) {
      for (size_t k = 0; k < n; ++k) x[k] += alpha * phat[k];
      res.converged = true;
      res.iterations = it;
      return res;
    }
    precond(s, shat);
    t = apply(shat);
    const double tt = std::real(dot(t, t));
    if (tt == 0.0) {
      res.failure = "bicgstab breakdown (t = 0)";
      res.iterations = it;
      return res;
    }
    omega = dot(t, s) / tt;
    for (size_t k = 0; k < n; ++k) x[k] += alpha * phat[k] + omega * shat[k];
    for (size_t k = 0; k < n; ++k) r[k] = s[k] - omega * t[k];
    if (l2(r) <= tol_abs) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    if (std::abs(omega) == 0.0) {
      res.failure = "bicgstab breakdown (omega = 0)";
      res.iterations = it;
      return res;
    }
    rho = rho_new;
  }
  res.failure = "bicgstab iteration cap reached";
  res.iterations = max_iter;
  return res;
}

}  // namespace detail

// One Krylov solve of  J delta = -residual  in the fixed chart layout of u.
// Returns false on stall so the caller can switch preconditioners.
inline bool solve_newton_step(const MapSample& u, const PerturbationSpec& spec,
                              const std::vector<cpx>& res_field,
                              PrecondKind kind, double tol_abs, int max_iter,
                              TangentField& delta, int& used_iters,
                              std::string& failure) {
  const auto& g = u.grid;
  auto apply = [&](const std::vector<cpx>& xv) {
    std::vector<cpx> out = linearization_apply(u, spec, xv);
    for (int j = 0; j < g.n_t; ++j) {
      out[g.index(0, j)] = xv[g.index(0, j)];
      out[g.index(g.n_s - 1, j)] = xv[g.index(g.n_s - 1, j)];
    }
    return out;
  };
  std::vector<cpx> b(g.size(), cpx(0.0, 0.0));
  for (int i = 1; i + 1 < g.n_s; ++i)
    for (int j = 0; j < g.n_t; ++j) b[g.index(i, j)] = -res_field[g.index(i, j)];

  detail::KrylovResult kr;
  if (kind == PrecondKind::Structured) {
    detail::StructuredPrecond sp(u, spec);
    auto pre = [&](const std::vector<cpx>& r, std::vector<cpx>& z) { sp.apply(r, z); };
    kr = detail::bicgstab(apply, pre, b, delta, tol_abs, max_iter);
  } else {
    std::vector<double> diag(g.size(), 1.0);
    for (int i = 1; i + 1 < g.n_s; ++i) {
      const double c = 4.0 * spec.lambda * spec.psi(g.s(i));
      for (int j = 0; j < g.n_t; ++j) {
        const double sign = (u.at(i, j).chart == Chart::Z) ? 1.0 : -1.0;
        const double d = sign * c;
        diag[g.index(i, j)] = (std::abs(d) > 1e-12) ? d : 1.0;
      }
    }
    auto pre = [&](const std::vector<cpx>& r, std::vector<cpx>& z) {
      z.resize(r.size());
      for (size_t k = 0; k < r.size(); ++k) z[k] = r[k] / diag[k];
    };
    kr = detail::bicgstab(apply, pre, b, delta, tol_abs, max_iter);
  }
  used_iters = kr.iterations;
  failure = kr.failure;
  return kr.converged;
}

inline std::pair<MapSample, SolveReport> newton_solve(const MapSample& u0,
                                                      const PerturbationSpec& spec,
                                                      double tol, int max_iter,
                                                      SolverOptions options = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("newton_solve: tol must be positive");
  check_no_tearing(u0);
  MapSample u = u0;
  SolveReport report;
  report.preconditioner_used =
      options.preconditioner == PrecondKind::Structured ? "structured" : "diagonal";
  const auto& g = u.grid;
  const int krylov_cap = options.krylov_max_iter > 0
                             ? options.krylov_max_iter
                             : std::max(400, 4 * (g.n_s + g.n_t));

  std::vector<cpx> res_field = residual(u, spec);
  double res_norm = residual_sup_norm(u, res_field);
  report.residual_history.push_back(res_norm);
  report.final_residual = res_norm;
  if (res_norm <= tol) {
    report.converged = true;
    return {u, report};
  }

  PrecondKind kind = options.preconditioner;
  for (int step = 0; step < max_iter; ++step) {
    const double krylov_tol = options.krylov_tol_factor * tol;
    TangentField delta;
    int kr_iters = 0;
    std::string kr_failure;
    bool ok = solve_newton_step(u, spec, res_field, kind, krylov_tol, krylov_cap,
                                delta, kr_iters, kr_failure);
    if (!ok && options.allow_fallback && kind == PrecondKind::Diagonal) {
      kind = PrecondKind::Structured;
      report.preconditioner_used = "diagonal, then structured fallback";
      ok = solve_newton_step(u, spec, res_field, kind, krylov_tol, krylov_cap,
                             delta, kr_iters, kr_failure);
    }
    report.krylov_iterations.push_back(kr_iters);
    if (!ok) {
      report.failure = "linear solve failed: " + kr_failure;
      return {u, report};
    }

    // Step with halving: the model equation is linear, so the full step
    // normally lands at once; the guard protects perturbed variants.
    double scale = 1.0;
    MapSample trial = u;
    double trial_norm = res_norm;
    std::vector<cpx> trial_field;
    for (int h = 0; h <= options.line_search_halvings; ++h) {
      trial = u;
      for (int i = 1; i + 1 < g.n_s; ++i)
        for (int j = 0; j < g.n_t; ++j)
          trial.values[g.index(i, j)].coord += scale * delta[g.index(i, j)];
      trial_field = residual(trial, spec);
      trial_norm = residual_sup_norm(trial, trial_field);
      if (trial_norm < res_norm) break;
      scale *= 0.5;
    }
    if (trial_norm >= res_norm) {
      report.failure = "line search found no descent";
      return {u, report};
    }
    u = std::move(trial);
    res_field = std::move(trial_field);
    res_norm = trial_norm;
    ++report.iterations;
    report.residual_history.push_back(res_norm);
    report.final_residual = res_norm;
    if (res_norm <= tol) {
      report.converged = true;
      return {u, report};
    }
  }
  report.failure = "max_iter exceeded";
  return {u, report};
}

struct HomotopyStage {
  double lambda = 0.0;
  MapSample u;
  double area = 0.0;
  SolveReport report;
};

struct HomotopyResult {
  std::vector<HomotopyStage> stages;
  bool completed = false;
  int failure_index = -1;  // schedule index of the first failed stage
};

// Walk the lambda schedule, Newton-solving each stage from the previous
// solution.  Boundary rows are reset to the analytic family's trace at the
// stage's lambda, so the boundary data follows the same homotopy.
inline HomotopyResult homotopy_continue(int k, const PsiProfile& psi,
                                        const CylinderGrid& grid,
                                        const std::vector<double>& schedule,
                                        double tol, int max_iter = 8,
                                        SolverOptions options = {}) {
  if (schedule.empty())
    throw std::invalid_argument("homotopy_continue: empty schedule");
  int direction = 0;
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 0.0 || schedule[i] > 1.0)
      throw std::invalid_argument("homotopy_continue: lambda outside [0,1]");
    if (i == 0 || schedule[i] == schedule[i - 1]) continue;
    const int step_dir = schedule[i] > schedule[i - 1] ? 1 : -1;
    if (direction == 0) direction = step_dir;
    if (step_dir != direction)
      throw std::invalid_argument("homotopy_continue: schedule not monotone");
  }

  HomotopyResult result;
  MapSample current =
      sample_family(SolutionFamily::properly_perturbed(k, psi, schedule[0]), grid);
  for (size_t idx = 0; idx < schedule.size(); ++idx) {
    const double lam = schedule[idx];
    const SolutionFamily fam = SolutionFamily::properly_perturbed(k, psi, lam);
    MapSample start = (idx == 0) ? sample_family(fam, grid) : current;
    const MapSample trace = sample_family(fam, grid);
    for (int j = 0; j < grid.n_t; ++j) {
      start.values[grid.index(0, j)] = trace.at(0, j);
      start.values[grid.index(grid.n_s - 1, j)] = trace.at(grid.n_s - 1, j);
    }
    const PerturbationSpec spec = fam.perturbation();
    auto [solved, rep] = newton_solve(start, spec, tol, max_iter, options);
    HomotopyStage stage;
    stage.lambda = lam;
    stage.area = symplectic_area(solved).area;
    stage.u = solved;
    stage.report = rep;
    const bool ok = rep.converged;
    result.stages.push_back(std::move(stage));
    if (!ok) {
      result.failure_index = static_cast<int>(idx);
      return result;
    }
    current = result.stages.back().u;
  }
  result.completed = true;
  return result;
}

}  // namespace percr
