#pragma once

// Truncated-cylinder grids and chart-tagged map samples.
//
// The cylinder is [s_min, s_max] x R/Z with n_s uniformly spaced s-nodes
// (h_s = (s_max - s_min)/(n_s - 1), both ends included) and n_t periodic
// t-nodes (h_t = 1/n_t).  A MapSample stores one SpherePoint per node; the
// first and last s-rows are the Dirichlet boundary.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "percr/sphere.hpp"

namespace percr {

struct ChartTearing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CylinderGrid {
  double s_min = 0.0;
  double s_max = 1.0;
  int n_s = 8;
  int n_t = 8;

  CylinderGrid() = default;
  CylinderGrid(double smin, double smax, int ns, int nt)
      : s_min(smin), s_max(smax), n_s(ns), n_t(nt) {
    if (!(s_min < s_max))
      throw std::invalid_argument("CylinderGrid: need s_min < s_max");
    if (n_s < 8 || n_t < 8)
      throw std::invalid_argument("CylinderGrid: need n_s, n_t >= 8");
  }

  double h_s() const { return (s_max - s_min) / (n_s - 1); }
  double h_t() const { return 1.0 / n_t; }
  double s(int i) const { return s_min + i * h_s(); }
  double t(int j) const { return j * h_t(); }
  int wrap_t(int j) const { return ((j % n_t) + n_t) % n_t; }
  int index(int i, int j) const { return i * n_t + wrap_t(j); }
  int size() const { return n_s * n_t; }

  bool operator==(const CylinderGrid&) const = default;
};

struct MapSample {
  CylinderGrid grid;
  std::vector<SpherePoint> values;
  int degree = 0;

  MapSample() = default;
  explicit MapSample(const CylinderGrid& g, int deg = 0)
      : grid(g), values(g.size()), degree(deg) {}

  SpherePoint& at(int i, int j) { return values[grid.index(i, j)]; }
  const SpherePoint& at(int i, int j) const { return values[grid.index(i, j)]; }
};

// Coordinate of `q` expressed in the chart of `ref`.  Throws when q sits at
// the opposite chart's origin, i.e. at infinity of ref's chart.
inline cpx pull_to_chart(const SpherePoint& ref, const SpherePoint& q) {
  if (q.chart == ref.chart) return q.coord;
  if (q.coord == cpx(0.0, 0.0))
    throw ChartTearing("pull_to_chart: neighbor sits at infinity of the reference chart");
  return 1.0 / q.coord;
}

// Adjacent nodes must stay representable in each other's charts: same chart
// is always fine, otherwise the pulled coordinate has to stay inside a
// modest multiple of the switch radius.
inline void check_no_tearing(const MapSample& u,
                             double radius = kChartSwitchRadius) {
  const auto& g = u.grid;
  const double limit = 4.0 * radius;
  auto ok = [&](const SpherePoint& a, const SpherePoint& b) {
    if (a.chart == b.chart) return true;
    if (b.coord == cpx(0.0, 0.0)) return false;
    return std::abs(1.0 / b.coord) <= limit;
  };
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_t; ++j) {
      const SpherePoint& c = u.at(i, j);
      if (std::abs(c.coord) > limit)
        throw ChartTearing("map sample: coordinate far outside the switch disk");
      if (i + 1 < g.n_s && !ok(c, u.at(i + 1, j)))
        throw ChartTearing("map sample: s-neighbors in incompatible charts");
      if (!ok(c, u.at(i, j + 1)))
        throw ChartTearing("map sample: t-neighbors in incompatible charts");
    }
}

// Central differences of the sample at an interior node, pulled into that
// node's chart.  Second order in both directions; t wraps.
struct MapDerivatives {
  cpx du_ds;
  cpx du_dt;
};

inline MapDerivatives map_derivatives(const MapSample& u, int i, int j) {
  const auto& g = u.grid;
  if (i <= 0 || i >= g.n_s - 1)
    throw std::invalid_argument("map_derivatives: s-index not interior");
  const SpherePoint& c = u.at(i, j);
  const cpx sp = pull_to_chart(c, u.at(i + 1, j));
  const cpx sm = pull_to_chart(c, u.at(i - 1, j));
  const cpx tp = pull_to_chart(c, u.at(i, j + 1));
  const cpx tm = pull_to_chart(c, u.at(i, j - 1));
  return {(sp - sm) / (2.0 * g.h_s()), (tp - tm) / (2.0 * g.h_t())};
}

// Fourth-order central differences, for quadrature densities where the
// second-order truncation would eat into the reported tolerance.  Needs two
// interior neighbors on each side in s.
inline MapDerivatives map_derivatives4(const MapSample& u, int i, int j) {
  const auto& g = u.grid;
  if (i < 2 || i > g.n_s - 3)
    throw std::invalid_argument("map_derivatives4: s-index too close to the boundary");
  const SpherePoint& c = u.at(i, j);
  auto pull = [&](int a, int b) { return pull_to_chart(c, u.at(a, b)); };
  const cpx ds = (-pull(i + 2, j) + 8.0 * pull(i + 1, j) - 8.0 * pull(i - 1, j) +
                  pull(i - 2, j)) /
                 (12.0 * g.h_s());
  const cpx dt = (-pull(i, j + 2) + 8.0 * pull(i, j + 1) - 8.0 * pull(i, j - 1) +
                  pull(i, j - 2)) /
                 (12.0 * g.h_t());
  return {ds, dt};
}

// One-sided (second order) s-derivative rows for the boundary, used by the
// area quadrature which needs the density on the full grid.
inline MapDerivatives map_derivatives_onesided(const MapSample& u, int i, int j) {
  const auto& g = u.grid;
  const SpherePoint& c = u.at(i, j);
  const cpx tp = pull_to_chart(c, u.at(i, j + 1));
  const cpx tm = pull_to_chart(c, u.at(i, j - 1));
  const cpx dt = (tp - tm) / (2.0 * g.h_t());
  cpx ds;
  if (i == 0) {
    const cpx f0 = c.coord;
    const cpx f1 = pull_to_chart(c, u.at(1, j));
    const cpx f2 = pull_to_chart(c, u.at(2, j));
    ds = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * g.h_s());
  } else if (i == g.n_s - 1) {
    const cpx f0 = c.coord;
    const cpx f1 = pull_to_chart(c, u.at(i - 1, j));
    const cpx f2 = pull_to_chart(c, u.at(i - 2, j));
    ds = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * g.h_s());
  } else {
    return map_derivatives(u, i, j);
  }
  return {ds, dt};
}

enum class HolomorphyMode { Holomorphic, AntiHolomorphic };

// Sup over interior nodes of the deviation of du from its expected complex
// (anti)linearity, measured in the round metric at the image point.
//
//   AntiHolomorphic:  || (du + J du j) - 2 du ||   (zero iff du antilinear)
//   Holomorphic:      || du + J du j ||            (zero iff du linear)
//
// Both reduce to a single complex number per node via the ds-contraction.
inline double antilinear_defect(const MapSample& u, HolomorphyMode mode) {
  const auto& g = u.grid;
  if (g.n_s < 3 || g.n_t < 3)
    throw std::invalid_argument("antilinear_defect: grid too small to difference");
  double worst = 0.0;
  const cpx I(0.0, 1.0);
  for (int i = 1; i < g.n_s - 1; ++i)
    for (int j = 0; j < g.n_t; ++j) {
      const MapDerivatives d = map_derivatives(u, i, j);
      const cpx dbar = d.du_ds + I * d.du_dt;
      const cpx dev = mode == HolomorphyMode::AntiHolomorphic
                          ? dbar - 2.0 * d.du_ds
                          : dbar;
      worst = std::max(worst, fs_norm(u.at(i, j), dev));
    }
  return worst;
}

// Plain text checkpoint: header with dimensions, then one node per line
// ("chart re im", round-trip precision).
inline void save_map(const MapSample& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_map: cannot open " + path);
  char line[128];
  std::snprintf(line, sizeof line, "percr-map 1\n%d %d %.17g %.17g %d\n",
                u.grid.n_s, u.grid.n_t, u.grid.s_min, u.grid.s_max, u.degree);
  out << line;
  for (const SpherePoint& p : u.values) {
    std::snprintf(line, sizeof line, "%c %.17g %.17g\n",
                  p.chart == Chart::Z ? 'Z' : 'W', p.coord.real(), p.coord.imag());
    out << line;
  }
  if (!out) throw std::runtime_error("save_map: write failed for " + path);
}

inline MapSample load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_map: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "percr-map" || version != 1)
    throw std::runtime_error("load_map: unrecognized header in " + path);
  int ns = 0, nt = 0, deg = 0;
  double smin = 0.0, smax = 0.0;
  in >> ns >> nt >> smin >> smax >> deg;
  if (!in) throw std::runtime_error("load_map: bad header in " + path);
  MapSample u(CylinderGrid(smin, smax, ns, nt), deg);
  for (SpherePoint& p : u.values) {
    char chart = 0;
    double re = 0.0, im = 0.0;
    in >> chart >> re >> im;
    if (!in || (chart != 'Z' && chart != 'W'))
      throw std::runtime_error("load_map: truncated or corrupt data in " + path);
    p = {cpx(re, im), chart == 'Z' ? Chart::Z : Chart::W};
  }
  return u;
}

}  // namespace percr
