#include "doctest.h"

#include "bqr/priors.hpp"
#include "property_checks.hpp"

using namespace bqr;

TEST_CASE("adaptive weights") {
  const Vector w = adaptive_weights((CoefVector(3) << 9.0, 2.0, 0.5).finished());
  REQUIRE(w.size() == 2);
  CHECK(w(0) == 0.5);
  CHECK(w(1) == 2.0);
  CHECK(adaptive_weights((CoefVector(2) << 1.0, 0.0).finished())(0) == doctest::Approx(1e8));
  CHECK(adaptive_weights((CoefVector(2) << 1.0, -4.0).finished())(0) == 0.25);
}

TEST_CASE("log prior examples") {
  const PriorSpec ca = PriorSpec::clipped_absolute(0.2, 2, 100);
  CHECK(log_prior(ca, (CoefVector(3) << 7.0, 0.5, 0.0).finished()) == doctest::Approx(-4.0));
  CHECK(log_prior(ca, (CoefVector(3) << 7.0, 0.1, 0.0).finished()) == doctest::Approx(-2.0));
  const PriorSpec al = PriorSpec::adaptive_lasso(0.1, Vector::Constant(1, 2.0), 100);
  CHECK(log_prior(al, (CoefVector(2) << -3.0, 0.3).finished()) == doctest::Approx(-0.6));
  CHECK(log_prior(PriorSpec::flat(2), (CoefVector(3) << 1.0, 2.0, 3.0).finished()) == 0.0);
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(PriorSpec::clipped_absolute(0.0, 2, 10), DataError);
  CHECK_THROWS_AS(PriorSpec::adaptive_lasso(-1.0, Vector::Ones(2), 10), DataError);
  CHECK_THROWS_AS(PriorSpec::adaptive_lasso(0.1, Vector::Zero(2), 10), DataError);
  CHECK_THROWS_AS(log_prior(PriorSpec::flat(2), CoefVector::Zero(2)), DimensionError);
  CHECK(parse_prior_family("ca") == PriorFamily::ClippedAbsolute);
  CHECK(parse_prior_family("al") == PriorFamily::AdaptiveLasso);
  CHECK(parse_prior_family("flat") == PriorFamily::Flat);
  CHECK_THROWS_AS(parse_prior_family("scad"), DataError);
}

TEST_CASE("prior properties") {
  for (const auto& r : props::prior_properties(13, 100)) {
    INFO(r.name << ": " << r.first_failure);
    CHECK(r.ok());
  }
}
