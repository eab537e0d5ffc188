#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "v2r/traffic.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace v2r::traffic;

namespace {

VehicleClass cls(double lambda, double x_min = 5.0) {
  VehicleClass vc;
  vc.lambda = lambda;
  vc.x_min = x_min;
  return vc;
}

}  // namespace

TEST_CASE("headway cdf is a shifted exponential") {
  VehicleClass vc = cls(0.03);
  CHECK(headway_cdf(vc, 5.0) == 0.0);
  CHECK(headway_cdf(vc, 4.9) == 0.0);
  CHECK(headway_cdf(vc, -1.0) == 0.0);
  CHECK(headway_cdf(vc, 20.0) == doctest::Approx(0.36237184837822667).epsilon(1e-12));
  CHECK(headway_cdf(vc, 1e9) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = 0.0;
  for (double x = 0.0; x <= 200.0; x += 2.5) {
    double f = headway_cdf(vc, x);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("nfold cdf matches the shifted Erlang") {
  VehicleClass vc = cls(0.03);
  CHECK(nfold_cdf(vc, 0, 100.0) == 1.0);
  CHECK(nfold_cdf(vc, 0, 0.0) == 1.0);
  CHECK(nfold_cdf(vc, 3, 14.0) == 0.0);  // below the 3*x_min support
  CHECK(nfold_cdf(vc, 1, 20.0) == doctest::Approx(headway_cdf(vc, 20.0)).epsilon(1e-14));
  CHECK(nfold_cdf(vc, 2, 100.0) == doctest::Approx(0.7513396028629258).epsilon(1e-12));
  CHECK(nfold_cdf(vc, 3, 60.0) == doctest::Approx(0.15455269996858623).epsilon(1e-12));
  // nonincreasing in n, nondecreasing in d
  for (int n = 0; n < 40; ++n)
    CHECK(nfold_cdf(vc, n + 1, 300.0) <= nfold_cdf(vc, n, 300.0) + 1e-15);
  for (double d = 0.0; d < 400.0; d += 10.0)
    CHECK(nfold_cdf(vc, 4, d) <= nfold_cdf(vc, 4, d + 10.0) + 1e-15);
}

TEST_CASE("count pmf sums to one and matches frozen values") {
  VehicleClass vc = cls(0.03);
  CountPmf p = count_pmf(vc, 1200.0);
  REQUIRE(p.probs.size() == 240);  // floor(d / x_min)
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.probs[30] == doctest::Approx(0.0805887605888741).epsilon(1e-10));
  CHECK(p.mean() == doctest::Approx(31.18241965973521).epsilon(1e-9));
  for (double q : p.probs) {
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
  }

  CountPmf tiny = count_pmf(cls(1e-9), 1200.0);
  CHECK(tiny.probs[0] == doctest::Approx(1.0).epsilon(1e-6));

  // mean is nondecreasing in lambda
  double m1 = count_pmf(cls(0.01), 1200.0).mean();
  double m3 = count_pmf(cls(0.03), 1200.0).mean();
  double m10 = count_pmf(cls(0.1), 1200.0).mean();
  CHECK(m1 < m3);
  CHECK(m3 < m10);
}

TEST_CASE("joint count pmf convolves the classes") {
  VehicleClass a = cls(0.009), b = cls(0.004);
  std::vector<VehicleClass> one{a};
  CountPmf single = joint_count_pmf(one, 1200.0);
  CountPmf direct = count_pmf(a, 1200.0);
  REQUIRE(single.probs.size() == direct.probs.size());
  for (std::size_t i = 0; i < direct.probs.size(); ++i)
    CHECK(single.probs[i] == doctest::Approx(direct.probs[i]).epsilon(1e-12));

  std::vector<VehicleClass> both{a, b};
  CountPmf joint = joint_count_pmf(both, 1200.0);
  CHECK(joint.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(joint.mean() ==
        doctest::Approx(count_pmf(a, 1200.0).mean() + count_pmf(b, 1200.0).mean())
            .epsilon(1e-9));
}

TEST_CASE("count weight picks the pmf value at the configured mass") {
  VehicleClass a = cls(0.009);
  CHECK(count_weight(a, 1200.0, 6.0) ==
        doctest::Approx(0.052895038527058014).epsilon(1e-12));
  CHECK(count_weight(a, 1200.0, 6.4) == count_weight(a, 1200.0, 6.0));
  // clamped at the support edges
  CHECK(count_weight(a, 1200.0, 1e9) ==
        doctest::Approx(count_pmf(a, 1200.0).probs.back()).epsilon(1e-15));
  CHECK(count_weight(a, 1200.0, -3.0) ==
        doctest::Approx(count_pmf(a, 1200.0).probs[0]).epsilon(1e-15));
}

TEST_CASE("two densities tuned to the same count weight agree") {
  // the equilibrium scenarios rely on this equality
  double w1 = count_weight(cls(0.009), 1200.0, 6.0);
  double w2 = count_weight(cls(0.0013292584845386694), 1200.0, 4.0);
  CHECK(w1 == doctest::Approx(w2).epsilon(1e-12));
}

TEST_CASE("phi is the normalized nonempty-road mass") {
  std::vector<VehicleClass> classes{cls(0.009), cls(0.004)};
  CHECK(phi(classes, 1200.0) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<VehicleClass> sparse{cls(1e-6)};
  CHECK(phi(sparse, 1200.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampled positions respect spacing and are deterministic") {
  VehicleClass vc = cls(0.03);
  std::vector<double> a = sample_positions(vc, 1200.0, 42);
  std::vector<double> b = sample_positions(vc, 1200.0, 42);
  CHECK(a == b);
  std::vector<double> c = sample_positions(vc, 1200.0, 43);
  CHECK(a != c);
  REQUIRE(!a.empty());
  CHECK(a.front() >= 0.0);
  CHECK(a.back() <= 1200.0);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] - a[i - 1] >= vc.x_min - 1e-12);
}

TEST_CASE("monte carlo counts agree with the analytic pmf") {
  VehicleClass vc = cls(0.03);
  CountPmf p = count_pmf(vc, 1200.0);
  std::vector<double> emp(p.probs.size(), 0.0);
  const int reps = 50000;
  for (int r = 0; r < reps; ++r) {
    std::size_t n = sample_positions(vc, 1200.0, 1000 + r).size();
    if (n >= emp.size()) n = emp.size() - 1;
    emp[n] += 1.0 / reps;
  }
  CHECK(tv_distance(p.probs, emp) < 0.03);
  // empirical mean close to the analytic mean
  double mean = 0.0;
  for (std::size_t n = 0; n < emp.size(); ++n) mean += n * emp[n];
  CHECK(mean == doctest::Approx(p.mean()).epsilon(0.01));
}

TEST_CASE("tv distance") {
  std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  CHECK(tv_distance(p, q) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tv_distance(p, p) == 0.0);
  std::vector<double> longer{0.5, 0.25, 0.25};
  CHECK(tv_distance(p, longer) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("validation rejects bad classes") {
  VehicleClass vc = cls(0.03);
  CHECK_NOTHROW(validate(vc, 1200.0));
  VehicleClass bad = vc;
  bad.lambda = 0.0;
  CHECK_THROWS_WITH_AS(validate(bad, 1200.0), doctest::Contains("lambda"),
                       std::invalid_argument);
  bad = vc;
  bad.x_min = 0.0;
  CHECK_THROWS_WITH_AS(validate(bad, 1200.0), doctest::Contains("x_min"),
                       std::invalid_argument);
  bad = vc;
  bad.x_min = 2000.0;  // omega would be zero
  CHECK_THROWS_AS(validate(bad, 1200.0), std::invalid_argument);
  bad = vc;
  bad.frame_bits = -1.0;
  CHECK_THROWS_AS(validate(bad, 1200.0), std::invalid_argument);
}
