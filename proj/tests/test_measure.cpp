#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "wolffkit/parallel.hpp"

using namespace wolffkit;
using test::rel;

TEST_SUITE("measure") {
  TEST_CASE("uniform ball mass is exact and split exactly over atoms") {
    GridMeasure m = test::ball(3, 8, 4);
    double cells = 0.0;
    for (double v : m.cell_masses()) cells += v;
    CHECK(cells == 1.0);
    CHECK(m.total_mass() == 1.0);
    std::vector<double> per(m.cell_count(), 0.0);
    for (std::size_t a = 0; a < m.atom_count(); ++a) per[m.atom_cell(a)] += m.atom_weight(a);
    for (std::size_t j = 0; j < m.cell_count(); ++j) CHECK(per[j] == m.cell_mass(j));
    CHECK(m.atom_count() == 4 * m.cell_count());
    for (std::size_t a = 0; a < m.atom_count(); ++a) {
      double k = m.atom_weight(a) / m.mass_unit();
      CHECK(k == std::floor(k));
    }
  }

  TEST_CASE("atoms stay inside their cells") {
    GridMeasure m = test::ball(2, 6, 8);
    for (std::size_t a = 0; a < m.atom_count(); ++a) {
      auto loc = m.locate(m.atom(a));
      REQUIRE(loc.has_value());
      CHECK(*loc == m.atom_cell(a));
    }
  }

  TEST_CASE("dyadic partition is exact") {
    GridMeasure m = test::random_cells(11, 2, 8, 3);
    for (int j = 0; j <= 3; ++j) {
      DyadicCube q = cube_of(std::vector<double>{-0.3, 0.6}, j);
      double kids = 0.0;
      for (const auto& c : q.children()) kids += cube_mass(m, c);
      CHECK(kids == cube_mass(m, q));
    }
    double orthants = 0.0;
    for (std::int64_t a : {-1, 0})
      for (std::int64_t b : {-1, 0}) orthants += cube_mass(m, DyadicCube{0, {a, b}});
    CHECK(orthants == m.total_mass());
  }

  TEST_CASE("ball mass is monotone and saturates") {
    GridMeasure m = test::ball(3, 6, 2);
    std::vector<double> x = {0.2, -0.1, 0.3};
    double prev = 0.0;
    for (double r = 0.05; r < 3.0; r *= 1.3) {
      double v = ball_mass(m, x, r);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(ball_mass(m, x, 3.0) == m.total_mass());
    RadialMassProfile prof = radial_profile(m, x);
    CHECK(prof.total() == m.total_mass());
    CHECK(prof.mass_within(0.7) == ball_mass(m, x, 0.7));
  }

  TEST_CASE("restriction keeps the exact mass") {
    GridMeasure m = test::ball(3, 6, 2);
    Ball b{{0.3, 0.0, 0.0}, 0.6};
    GridMeasure r = restrict_to(m, b);
    CHECK(r.total_mass() == ball_mass(m, b.center, b.radius));
    CHECK(r.atom_count() == atoms_in_ball(m, b).size());
    DyadicCube q{1, {0, 0, 0}};
    CHECK(restrict_to(m, q).total_mass() == cube_mass(m, q));
  }

  TEST_CASE("scaling and dilation") {
    GridMeasure m = test::random_cells(5, 2, 8, 2);
    GridMeasure two = m.scaled(2.0);
    for (std::size_t a = 0; a < m.atom_count(); ++a) CHECK(two.atom_weight(a) == 2.0 * m.atom_weight(a));
    CHECK(m.scaled(0.0).empty());
    GridMeasure d = m.dilated(3.0);
    CHECK(d.side() == 3.0 * m.side());
    for (std::size_t a = 0; a < m.atom_count(); ++a) {
      CHECK(d.atom(a)[0] == 3.0 * m.atom(a)[0]);
      CHECK(d.atom_weight(a) == m.atom_weight(a));
    }
    CHECK_THROWS_AS(m.scaled(-1.0), InvalidArgument);
    CHECK_THROWS_AS(m.dilated(0.0), InvalidArgument);
  }

  TEST_CASE("random cells are seeded") {
    GridMeasure a = test::random_cells(42), b = test::random_cells(42), c = test::random_cells(43);
    REQUIRE(a.cell_count() == b.cell_count());
    for (std::size_t j = 0; j < a.cell_count(); ++j) CHECK(a.cell_mass(j) == b.cell_mass(j));
    bool differ = a.cell_count() != c.cell_count();
    for (std::size_t j = 0; !differ && j < a.cell_count(); ++j) differ = a.cell_mass(j) != c.cell_mass(j);
    CHECK(differ);
  }

  TEST_CASE("csv round trip") {
    GridMeasure m = test::random_cells(9, 2, 6, 2);
    std::stringstream ss;
    write_measure_csv(m, ss);
    GridMeasure r = read_measure_csv(ss);
    REQUIRE(r.cell_count() == m.cell_count());
    CHECK(r.subsample() == m.subsample());
    CHECK(r.total_mass() == m.total_mass());
    for (std::size_t j = 0; j < m.cell_count(); ++j) {
      CHECK(r.cell_mass(j) == m.cell_mass(j));
      CHECK(r.cell_center(j)[0] == m.cell_center(j)[0]);
    }
    std::vector<double> pts = {0.1, 0.2, -0.4, 0.35}, w = {0.5, 0.25};
    GridMeasure pm = GridMeasure::from_point_masses(2, 0.25, pts, w);
    std::stringstream s2;
    write_measure_csv(pm, s2);
    GridMeasure pr = read_measure_csv(s2);
    CHECK(pr.atom_count() == 2);
    for (std::size_t a = 0; a < pm.atom_count(); ++a) {
      CHECK(pr.atom(a)[0] == pm.atom(a)[0]);
      CHECK(pr.atom(a)[1] == pm.atom(a)[1]);
      CHECK(pr.atom_weight(a) == pm.atom_weight(a));
    }
  }

  TEST_CASE("csv errors") {
    std::stringstream bad1("dim,side,subsample\n2,0.5,1\n0.25,0.25\n");
    CHECK_THROWS_AS(read_measure_csv(bad1), InvalidArgument);
    std::stringstream bad2("dim,side,subsample\n2,0.5,1\n0.25,0.25,-1\n");
    CHECK_THROWS_AS(read_measure_csv(bad2), InvalidArgument);
    std::stringstream bad3("2;0.5;1\n");
    CHECK_THROWS_AS(read_measure_csv(bad3), InvalidArgument);
    std::stringstream ok("# comment\n2,0.5,1\n0.25,0.25,1\n");
    CHECK(read_measure_csv(ok).total_mass() == 1.0);
  }

  TEST_CASE("empty and degenerate specs") {
    MeasureSpec s;
    s.kind = MeasureSpec::Kind::Empty;
    CHECK(build_grid_measure(s).empty());
    s.kind = MeasureSpec::Kind::UniformBall;
    s.radius = -1.0;
    CHECK_THROWS_AS(build_grid_measure(s), InvalidArgument);
    CHECK_THROWS_AS(measure_kind_from_string("cone"), InvalidArgument);
  }

  TEST_CASE("radial power density integrates to the requested mass") {
    MeasureSpec s;
    s.kind = MeasureSpec::Kind::RadialPower;
    s.dim = 2;
    s.exponent = 1.0;
    s.cells = 8;
    s.subsample = 2;
    s.total_mass = 3.0;
    GridMeasure m = build_grid_measure(s);
    CHECK(m.total_mass() == 3.0);
    // Density |x|^-1 puts mass 3 rho/R inside radius rho.
    CHECK(ball_mass(m, std::vector<double>{0.0, 0.0}, 0.5) == doctest::Approx(1.5).epsilon(0.1));
  }

  TEST_CASE("pairwise sum does not depend on threads") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> v(10007);
    for (double& x : v) x = U(rng) * std::exp2(static_cast<int>(U(rng) * 30));
    unsigned old = thread_count();
    set_thread_count(1);
    double a = pairwise_sum(v);
    set_thread_count(4);
    double b = pairwise_sum(v);
    set_thread_count(old);
    CHECK(a == b);
  }

  TEST_CASE("parallel_for propagates exceptions") {
    unsigned old = thread_count();
    set_thread_count(3);
    CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                      if (i == 37) throw InvalidArgument("boom");
                    }),
                    InvalidArgument);
    set_thread_count(old);
  }
}
