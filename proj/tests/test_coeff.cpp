#include "doctest.h"
#include "stokeshom/coeff.hpp"

using namespace shom;

TEST_CASE("identity coefficients pass with defect zero") {
  auto r = check_hypotheses(CoefficientSet::identity());
  CHECK(r.pass());
  CHECK(r.min_eigenvalue == doctest::Approx(1.0));
  CHECK(r.max_periodicity_defect == 0.0);
}

TEST_CASE("laminate passes with min eigenvalue exactly 1") {
  auto c = CoefficientSet::laminate();
  auto r = check_hypotheses(c);
  CHECK(r.pass());
  CHECK(r.min_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("built-in presets all pass") {
  for (auto c : {CoefficientSet::identity(), CoefficientSet::laminate(),
                 CoefficientSet::checkerboard_smooth()}) {
    CHECK(check_hypotheses(c).pass());
  }
}

TEST_CASE("non-periodic theta fails with defect 1") {
  auto c = CoefficientSet::identity();
  c.theta = parse_expr("y1");
  auto r = check_hypotheses(c);
  CHECK(!r.pass());
  CHECK(!r.periodicity_ok);
  CHECK(r.max_periodicity_defect == doctest::Approx(1.0));
}

TEST_CASE("asserted alpha above the sampled minimum fails ellipticity") {
  auto c = CoefficientSet::laminate();
  c.alpha = 1.5;  // sampled min eigenvalue is 1
  auto r = check_hypotheses(c);
  CHECK(!r.ellipticity_ok);
}

TEST_CASE("symmetric storage mirrors the off-diagonal entry") {
  auto c = CoefficientSet::parse("2", "y1*y2", "3", "1", "0", "0", 0.5, 1.0);
  auto m = c.a_at(0.3, 0.4);
  CHECK(m(0, 1) == m(1, 0));
  CHECK(m(0, 1) == doctest::Approx(0.12));
}
