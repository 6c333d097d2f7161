#include "doctest.h"
#include "support.hpp"
#include "wolffkit/criteria.hpp"

using namespace wolffkit;
using test::rel;

namespace {
KappaOptions quick() {
  KappaOptions o;
  o.lower_bounds = false;
  return o;
}
}  // namespace

TEST_SUITE("criteria") {
  TEST_CASE("ball grid") {
    SpatialGrid g = ball_grid(Point{0.0, 0.0}, 1.0, 10);
    double area = 0.0;
    for (double w : g.weights) area += w;
    CHECK(area == doctest::Approx(3.14159).epsilon(0.05));
    CHECK_THROWS_AS(ball_grid(Point{0.0}, 0.0, 4), InvalidArgument);
  }

  TEST_CASE("zero measure") {
    GridMeasure m(2);
    Params prm{2, 0.5, 2.0, 0.5, 3.0};
    SpatialGrid g = ball_grid(Point{0.0, 0.0}, 1.0, 2);
    KappaTable kt = build_ball_kappa_table(m, prm, g.points, quick());
    CHECK(lr_existence(m, prm, 3.0, kt, g).verdict == Verdict::TrivialOnly);
    CHECK(bmo_criteria(m, prm, kt).constant("C1") == 0.0);
    auto sample = sample_balls(g.points, 2, std::vector<double>{0.5});
    CHECK(bmo_wolff_criterion(m, prm, sample).constant("C") == 0.0);
    CHECK(capacity_ball_criterion(m, prm, sample, CapacityMode::CapP).constant("C") == 0.0);
    CriteriaReport w = verify_wolff_inequality(m, prm, QuadratureSpec{100, 1});
    CHECK(w.constant("energy") == 0.0);
    CHECK(w.verdict == Verdict::Holds);
    KappaTable ct;
    CriteriaReport e = verify_enhanced_wolff(m, prm, 3.0, ct);
    CHECK(e.constant("A") == 0.0);
    CHECK(e.constant("B") == 0.0);
  }

  TEST_CASE("threshold dichotomy is exact") {
    GridMeasure m = test::ball(2, 6, 1);
    Params prm{2, 0.5, 2.0, 0.5};
    const double thr = prm.lr_threshold();
    SpatialGrid g = ball_grid(Point{0.0, 0.0}, 2.0, 3);
    KappaTable kt = build_ball_kappa_table(m, prm, g.points, quick());
    CHECK(lr_existence(m, prm, thr, kt, g).verdict == Verdict::TrivialOnly);
    CHECK(lr_existence(m, prm, std::nextafter(thr, 0.0), kt, g).verdict == Verdict::TrivialOnly);
    CriteriaReport up = lr_existence(m, prm, std::nextafter(thr, kInf), kt, g);
    CHECK(up.verdict == Verdict::Holds);
    CHECK(std::isfinite(up.constant("value")));
    CriteriaReport r4 = lr_existence(m, prm, 4.0, kt, g);
    CHECK(r4.constant("value") < up.constant("value"));
  }

  TEST_CASE("domain doubling slopes") {
    GridMeasure m = test::ball(2, 6, 1);
    Params prm{2, 0.5, 2.0, 0.5};
    ShellProfile sp = lr_domain_doubling(m, prm, 4.0, 512.0, 3, 16, quick());
    CHECK(sp.predicted_slope == doctest::Approx(2.0 - 4.0));
    REQUIRE(sp.log2_slopes.size() == 2);
    for (double s : sp.log2_slopes) CHECK(s == doctest::Approx(sp.predicted_slope).epsilon(0.05));
    CHECK_THROWS_AS(lr_domain_doubling(m, prm, 4.0, 512.0, 1, 16), InvalidArgument);
  }

  TEST_CASE("local existence uses both tails") {
    GridMeasure m = test::ball(2, 6, 1);
    Params prm{2, 0.5, 2.0, 0.5};
    SpatialGrid g = ball_grid(Point{0.0, 0.0}, 1.0, 3);
    KappaTable kt = build_ball_kappa_table(m, prm, g.points, quick());
    KappaTable ct = build_cube_kappa_table(m, prm, cell_level(m), quick());
    CriteriaReport a = lr_local_existence(m, prm, 1.5, 1.0, kt, g);
    CriteriaReport b = lr_local_existence(m, prm, 1.5, 1.0, kt, g, &ct);
    CHECK(a.verdict == Verdict::Holds);
    CHECK(b.verdict == Verdict::Holds);
    CHECK(a.constant("local_value") == b.constant("local_value"));
    CHECK_FALSE(a.notes.empty());  // alpha != 1
  }

  TEST_CASE("bmo constants and witnesses") {
    GridMeasure m = test::ball(3, 4, 2);
    std::vector<double> c = {0.0, 0.0, 0.0, 0.6, 0.0, 0.0};
    KappaTable kt = build_ball_kappa_table(m, test::kStd, c, quick());
    CriteriaReport r = bmo_criteria(m, test::kStd, kt);
    CHECK(r.verdict == Verdict::Holds);
    for (const char* k : {"C1", "C2", "C3"}) {
      CHECK(r.constant(k) > 0.0);
      CHECK(std::isfinite(r.constant(k)));
    }
    CHECK(r.witnesses.size() == 3);
    CHECK_THROWS_AS(r.constant("C4"), InvalidArgument);
  }

  TEST_CASE("capacity criteria") {
    GridMeasure m = test::ball(3, 4, 2);
    std::vector<double> c = {0.0, 0.0, 0.0};
    auto sample = sample_balls(c, 3, std::vector<double>{0.25, 0.5, 1.0, 2.0});
    CHECK(sample.size() == 4);
    CriteriaReport cap = capacity_ball_criterion(m, test::kStd, sample, CapacityMode::CapP);
    double best = 0.0;
    for (const Ball& b : sample) best = std::max(best, ball_mass(m, b.center, b.radius) / b.radius);
    CHECK(cap.constant("C") == doctest::Approx(best).epsilon(1e-12));
    CriteriaReport c1 = capacity_ball_criterion(m, test::kStd, sample, CapacityMode::Class1);
    CriteriaReport bw = bmo_wolff_criterion(m, test::kStd, sample);
    CHECK(c1.constant("C") == bw.constant("C"));
    CHECK_THROWS_AS(capacity_ball_criterion(m, Params{3, 1.0, 3.0, 0.5}, sample, CapacityMode::CapP), InvalidArgument);
    CHECK_THROWS_AS(sample_balls(std::vector<double>{0.0, 1.0, 2.0}, 2, std::vector<double>{1.0}), InvalidArgument);
  }

  TEST_CASE("enhanced Wolff: exact direction and fault injection") {
    GridMeasure m = test::random_cells(17, 2, 8, 2);
    Params prm{2, 0.5, 2.0, 0.5};
    KappaTable ct = build_cube_kappa_table(m, prm, cell_level(m), quick());
    CriteriaReport ok = verify_enhanced_wolff(m, prm, 3.0, ct);
    CHECK(ok.verdict == Verdict::Holds);
    CHECK(ok.constant("B") <= ok.constant("A"));
    CHECK(ok.constant("local_ratio_min") >= 1.0);
    CriteriaReport bad = verify_enhanced_wolff(m, prm, 3.0, ct, EnhancedWolffOptions{1e-3});
    CHECK(bad.verdict == Verdict::Fails);
    CHECK(verify_enhanced_wolff(m, prm, prm.lr_threshold(), ct).verdict == Verdict::TrivialOnly);
    KappaTable balls_only;
    balls_only.global_kappa = 1.0;
    CHECK_THROWS_AS(verify_enhanced_wolff(m, prm, 3.0, balls_only), IncompleteTable);
  }

  TEST_CASE("Wolff inequality report") {
    GridMeasure m = test::ball(3, 4, 1);
    CriteriaReport r = verify_wolff_inequality(m, test::kStd, QuadratureSpec{4000, 3});
    CHECK(r.verdict == Verdict::Holds);
    CHECK(r.constant("ratio_energy_wolff") > 0.0);
    CriteriaReport d = verify_wolff_inequality(m, Params{3, 1.0, 3.0, 0.5}, QuadratureSpec{100, 3});
    CHECK(d.verdict == Verdict::Inconclusive);
  }
}
