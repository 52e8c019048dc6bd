#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

#include <percr/grid.hpp>
#include <percr/sphere.hpp>

using percr::Chart;
using percr::cpx;
using percr::SpherePoint;
using percr::TangentVector;

namespace {

// Random point in the chart-overlap annulus 0.5 <= |z| <= 2, where both chart
// representations are available and well-conditioned.
SpherePoint annulus_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  const double r = radius(rng);
  const double th = angle(rng);
  return {cpx(r * std::cos(th), r * std::sin(th)), Chart::Z};
}

cpx random_unit_disk(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> comp(-scale, scale);
  return {comp(rng), comp(rng)};
}

}  // namespace

TEST_CASE("area density: frozen values at the chart origin and at p = 1") {
  const SpherePoint origin{cpx(0.0, 0.0), Chart::Z};
  CHECK(percr::fs_area_density(origin, cpx(1.0, 0.0), cpx(0.0, 1.0)) == 1.0);

  const SpherePoint one{cpx(1.0, 0.0), Chart::Z};
  CHECK(percr::fs_area_density(one, cpx(1.0, 0.0), cpx(0.0, 1.0)) == 0.25);

  // Swapping the arguments flips the sign: it is a 2-form.
  CHECK(percr::fs_area_density(one, cpx(0.0, 1.0), cpx(1.0, 0.0)) == -0.25);
}

TEST_CASE("area density: invariant under the chart transition") {
  const SpherePoint pz{cpx(4.0, 0.0), Chart::Z};
  const cpx vs(1.0, 0.5), vt(-0.3, 2.0);

  const TangentVector as = percr::chart_switch(TangentVector{pz, vs});
  const TangentVector at = percr::chart_switch(TangentVector{pz, vt});
  REQUIRE(as.base.chart == Chart::W);
  REQUIRE(std::abs(as.base.coord - cpx(0.25, 0.0)) < 1e-15);

  const double direct = percr::fs_area_density(pz, vs, vt);
  const double transformed =
      percr::fs_area_density(as.base, as.value, at.value);
  CHECK(std::abs(direct - transformed) <= 1e-12 * std::abs(direct));
}

TEST_CASE("inner product: frozen values") {
  const SpherePoint origin{cpx(0.0, 0.0), Chart::Z};
  CHECK(percr::fs_inner(origin, cpx(1.0, 0.0), cpx(1.0, 0.0)) == 1.0);
  CHECK(percr::fs_inner(origin, cpx(1.0, 0.0), cpx(0.0, 1.0)) == 0.0);

  const SpherePoint one{cpx(1.0, 0.0), Chart::Z};
  CHECK(percr::fs_inner(one, cpx(1.0, 0.0), cpx(1.0, 0.0)) == 0.25);
}

TEST_CASE("inner product: agrees with the area form paired against J") {
  std::mt19937_64 rng(91);
  for (int n = 0; n < 1000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const cpx x = random_unit_disk(rng, 2.0);
    const cpx y = random_unit_disk(rng, 2.0);
    const cpx jy = percr::standard_j().apply(p, y);
    const double lhs = percr::fs_inner(p, x, y);
    const double rhs = percr::fs_area_density(p, x, jy);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("norm: conformal scaling") {
  const SpherePoint origin{cpx(0.0, 0.0), Chart::Z};
  CHECK(percr::fs_norm(origin, cpx(3.0, 4.0)) == 5.0);
  const SpherePoint one{cpx(1.0, 0.0), Chart::Z};
  CHECK(percr::fs_norm(one, cpx(3.0, 4.0)) == 2.5);
}

TEST_CASE("phi map: frozen values and coefficient form") {
  const SpherePoint origin{cpx(0.0, 0.0), Chart::Z};
  CHECK(std::abs(percr::phi_map(origin, cpx(1.0, 0.0), cpx(1.0, 0.0)) -
                 cpx(0.0, -1.0)) < 1e-15);
  CHECK(std::abs(percr::phi_map(origin, cpx(0.0, 1.0), cpx(1.0, 0.0)) -
                 cpx(-1.0, 0.0)) < 1e-15);

  const SpherePoint one{cpx(1.0, 0.0), Chart::Z};
  CHECK(std::abs(percr::phi_map(one, cpx(1.0, 0.0), cpx(1.0, 0.0)) -
                 cpx(0.0, -0.25)) < 1e-15);

  CHECK(std::abs(percr::phi_coefficient(origin, cpx(1.0, 0.0)) -
                 cpx(0.0, -1.0)) < 1e-15);
  CHECK(std::abs(percr::phi_coefficient(one, cpx(1.0, 0.0)) -
                 cpx(0.0, -0.25)) < 1e-15);
}

TEST_CASE("phi map: conjugate linearity in the vector slot") {
  std::mt19937_64 rng(92);
  for (int n = 0; n < 10000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const cpx x = random_unit_disk(rng, 2.0);
    const cpx y = random_unit_disk(rng, 2.0);
    const cpx jx = percr::standard_j().apply(p, x);
    const cpx lhs = percr::phi_map(p, jx, y);
    const cpx rhs = cpx(0.0, -1.0) * percr::phi_map(p, x, y);
    CHECK(std::abs(lhs - rhs) <= 1e-12);

    // phi_map is the coefficient times the second argument, exactly.
    const cpx via_coeff = percr::phi_coefficient(p, x) * y;
    CHECK(std::abs(percr::phi_map(p, x, y) - via_coeff) <= 1e-14);
  }
}

TEST_CASE("phi map: inverse recovers the vector") {
  std::mt19937_64 rng(93);
  for (int n = 0; n < 1000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const cpx x = random_unit_disk(rng, 2.0);
    const cpx back = percr::phi_inverse(p, percr::phi_coefficient(p, x));
    CHECK(std::abs(back - x) <= 1e-13 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("chart switch: involution, example pair, origin rejected") {
  const SpherePoint pz{cpx(4.0, 0.0), Chart::Z};
  const SpherePoint pw = percr::chart_switch(pz);
  CHECK(pw.chart == Chart::W);
  CHECK(std::abs(pw.coord - cpx(0.25, 0.0)) < 1e-15);
  const SpherePoint back = percr::chart_switch(pw);
  CHECK(back.chart == Chart::Z);
  CHECK(std::abs(back.coord - pz.coord) < 1e-15);

  const SpherePoint origin{cpx(0.0, 0.0), Chart::Z};
  CHECK_THROWS_AS(percr::chart_switch(origin), std::domain_error);

  // normalize_chart only rewrites points outside the switch disk.
  CHECK(percr::normalize_chart(pz).chart == Chart::W);
  const SpherePoint inside{cpx(1.5, 0.0), Chart::Z};
  CHECK(percr::normalize_chart(inside).chart == Chart::Z);
}

TEST_CASE("chart switch: tangent transform uses the transition derivative") {
  const SpherePoint pz{cpx(2.0, 0.0), Chart::Z};
  const TangentVector tv = percr::chart_switch(TangentVector{pz, cpx(1.0, 0.0)});
  CHECK(std::abs(tv.value - cpx(-0.25, 0.0)) < 1e-15);
}

TEST_CASE("scalar invariants survive the chart transition on the overlap") {
  std::mt19937_64 rng(94);
  for (int n = 0; n < 10000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const cpx v = random_unit_disk(rng, 2.0);
    const cpx w = random_unit_disk(rng, 2.0);

    const TangentVector tv = percr::chart_switch(TangentVector{p, v});
    const TangentVector tw = percr::chart_switch(TangentVector{p, w});
    const SpherePoint q = tv.base;

    const double inner_z = percr::fs_inner(p, v, w);
    const double inner_w = percr::fs_inner(q, tv.value, tw.value);
    CHECK(std::abs(inner_z - inner_w) <= 1e-10 * std::max(1.0, std::abs(inner_z)));

    const double norm_z = percr::fs_norm(p, v);
    const double norm_w = percr::fs_norm(q, tv.value);
    CHECK(std::abs(norm_z - norm_w) <= 1e-10 * std::max(1.0, norm_z));

    const double dens_z = percr::fs_area_density(p, v, w);
    const double dens_w = percr::fs_area_density(q, tv.value, tw.value);
    CHECK(std::abs(dens_z - dens_w) <= 1e-10 * std::max(1.0, std::abs(dens_z)));
  }
}

TEST_CASE("theta diagonal: purely imaginary and J-invariant") {
  std::mt19937_64 rng(95);
  for (int n = 0; n < 1000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const cpx x = random_unit_disk(rng, 2.0);
    const cpx th = percr::theta_diagonal(p, x);
    CHECK(th.real() == 0.0);
    CHECK(th.imag() <= 0.0);
    // dbar is antilinear, so v -> jv multiplies its value by -i; theta sees
    // only the squared length and must not move at all.
    const cpx rotated = percr::theta_diagonal(p, cpx(0.0, -1.0) * x);
    CHECK(std::abs(th - rotated) <= 1e-15 * std::max(1.0, std::abs(th)));
  }
}

TEST_CASE("embedding: unit length and chart consistency") {
  std::mt19937_64 rng(96);
  for (int n = 0; n < 1000; ++n) {
    const SpherePoint p = annulus_point(rng);
    const auto e = percr::sphere_embedding(p);
    const double len = e.x1 * e.x1 + e.x2 * e.x2 + e.x3 * e.x3;
    CHECK(std::abs(len - 1.0) <= 1e-12);

    const auto f = percr::sphere_embedding(percr::chart_switch(p));
    CHECK(std::abs(e.x1 - f.x1) <= 1e-12);
    CHECK(std::abs(e.x2 - f.x2) <= 1e-12);
    CHECK(std::abs(e.x3 - f.x3) <= 1e-12);
  }
  // Poles: chart origins sit at the bottom and top.
  const auto south = percr::sphere_embedding({cpx(0.0, 0.0), Chart::Z});
  CHECK(south.x3 == -1.0);
  const auto north = percr::sphere_embedding({cpx(0.0, 0.0), Chart::W});
  CHECK(north.x3 == 1.0);
}

namespace {

// Chart-tagged sample of exp(2 pi (s + i t)): the degree-one holomorphic
// cylinder map, crossing from chart Z to chart W at s = 0.
percr::MapSample holomorphic_cylinder(const percr::CylinderGrid& g) {
  percr::MapSample u(g, 1);
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_t; ++j) {
      const double lr = 2.0 * M_PI * g.s(i);
      const double th = 2.0 * M_PI * g.t(j);
      if (lr <= 0.0)
        u.at(i, j) = {std::exp(lr) * cpx(std::cos(th), std::sin(th)), Chart::Z};
      else
        u.at(i, j) = {std::exp(-lr) * cpx(std::cos(th), -std::sin(th)), Chart::W};
    }
  return u;
}

// Antipodal image of the same map: z -> -1/conj(z) applied pointwise; the
// result is antiholomorphic.
percr::MapSample antipodal_cylinder(const percr::CylinderGrid& g) {
  percr::MapSample u(g, -1);
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_t; ++j) {
      const double lr = -2.0 * M_PI * g.s(i);
      const double th = 2.0 * M_PI * g.t(j) + M_PI;
      if (lr <= 0.0)
        u.at(i, j) = {std::exp(lr) * cpx(std::cos(th), std::sin(th)), Chart::Z};
      else
        u.at(i, j) = {std::exp(-lr) * cpx(std::cos(th), -std::sin(th)), Chart::W};
    }
  return u;
}

}  // namespace

TEST_CASE("antilinear defect: detects holomorphic and antiholomorphic maps") {
  const percr::CylinderGrid g(-2.0, 2.0, 81, 16);
  const percr::MapSample holo = holomorphic_cylinder(g);
  const percr::MapSample anti = antipodal_cylinder(g);

  const double dh = percr::antilinear_defect(holo, percr::HolomorphyMode::Holomorphic);
  const double da = percr::antilinear_defect(anti, percr::HolomorphyMode::AntiHolomorphic);
  CHECK(dh < 0.2);
  CHECK(da < 0.2);

  // Each defect is pure truncation error, so halving the spacing should
  // shrink it by about four.
  const percr::CylinderGrid g2(-2.0, 2.0, 161, 32);
  const double dh2 = percr::antilinear_defect(holomorphic_cylinder(g2),
                                              percr::HolomorphyMode::Holomorphic);
  const double da2 = percr::antilinear_defect(antipodal_cylinder(g2),
                                              percr::HolomorphyMode::AntiHolomorphic);
  CHECK(dh / dh2 > 3.0);
  CHECK(dh / dh2 < 5.0);
  CHECK(da / da2 > 3.0);
  CHECK(da / da2 < 5.0);

  // Cross checks: the wrong mode sees an order-one defect.
  CHECK(percr::antilinear_defect(holo, percr::HolomorphyMode::AntiHolomorphic) > 1.0);
  CHECK(percr::antilinear_defect(anti, percr::HolomorphyMode::Holomorphic) > 1.0);
}

TEST_CASE("map sample io: round trip preserves every node") {
  const percr::CylinderGrid g(-1.0, 1.0, 17, 8);
  const percr::MapSample u = holomorphic_cylinder(g);
  const std::string path = "percr_test_map.txt";
  percr::save_map(u, path);
  const percr::MapSample v = percr::load_map(path);
  REQUIRE(v.grid == u.grid);
  REQUIRE(v.degree == u.degree);
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_t; ++j) {
      CHECK(v.at(i, j).chart == u.at(i, j).chart);
      CHECK(v.at(i, j).coord == u.at(i, j).coord);
    }
  std::remove(path.c_str());
}

TEST_CASE("tearing detection: incompatible neighbors are rejected") {
  const percr::CylinderGrid g(-1.0, 1.0, 9, 8);
  percr::MapSample u(g);
  for (auto& p : u.values) p = {cpx(0.1, 0.0), Chart::Z};
  CHECK_NOTHROW(percr::check_no_tearing(u));

  // A W-chart node whose coordinate is near that chart's origin represents a
  // point near infinity of its Z-chart neighbors.
  u.at(4, 3) = {cpx(1e-4, 0.0), Chart::W};
  CHECK_THROWS_AS(percr::check_no_tearing(u), percr::ChartTearing);
}
