#include "doctest.h"

#include <cmath>
#include <sstream>

#include "shapelab/embedding_diagnostics.hpp"
#include "shapelab/parallel.hpp"

using namespace shapelab;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

GridFunction line(int level) {
  return GridFunction::sample(level, [](double t) { return t; });
}

doctest::Approx golden(double v) { return doctest::Approx(v).epsilon(1e-9); }

}  // namespace

TEST_CASE("greedy net small cases") {
  const auto metric = sup_net_metric();
  CHECK(greedy_net({}, 0.5, metric).net_size == 0);
  CHECK(greedy_net({scalar(0.3)}, 0.5, metric).net_size == 1);
  CHECK(greedy_net({scalar(0.0), scalar(1.0)}, 0.5, metric).net_size == 2);
  CHECK(greedy_net({scalar(0.0), scalar(1.0)}, 1.0, metric).net_size == 1);
  CHECK_THROWS_AS(greedy_net({scalar(0.0)}, 0.0, metric), std::invalid_argument);

  const auto r = greedy_net({scalar(0.0), scalar(0.4), scalar(0.8), scalar(1.2)}, 0.5, metric);
  CHECK(r.centers == std::vector<std::size_t>{0, 2});
  CHECK(r.half_net_size == 1);
}

TEST_CASE("greedy net covers and separates") {
  const WienerSpace w(8, 32);
  std::vector<Vector> points;
  for (std::uint64_t s = 0; s < 400; ++s) points.push_back(sample_ball_H(w, s));
  for (const auto& p : points) CHECK(w.cm_norm(p) <= 1.0 + 1e-12);

  const auto metric = sup_net_metric();
  const auto r = greedy_net(points, 0.2, metric);
  CHECK(verify_cover(points, r, metric));
  for (std::size_t a = 0; a < r.centers.size(); ++a) {
    for (std::size_t b = a + 1; b < r.centers.size(); ++b) {
      CHECK(metric.distance(points[r.centers[a]], points[r.centers[b]]) > 0.2);
    }
  }
  const std::vector<Vector> half(points.begin(), points.begin() + 200);
  CHECK(greedy_net(half, 0.2, metric).net_size == r.half_net_size);

  auto shrunk = r;
  shrunk.epsilon = 0.01;
  CHECK_FALSE(verify_cover(points, shrunk, metric));
}

TEST_CASE("unbounded input fails saturation") {
  std::vector<Vector> points;
  for (int k = 0; k < 100; ++k) points.push_back(scalar(k));
  const auto r = greedy_net(points, 0.5, sup_net_metric());
  CHECK(r.net_size == 100);
  CHECK(r.half_net_size == 50);
  CHECK_FALSE(r.saturated);

  std::vector<Vector> bounded(100, scalar(0.25));
  CHECK(greedy_net(bounded, 0.5, sup_net_metric()).saturated);
}

TEST_CASE("net metrics") {
  const Vector a = line(6).values();
  const Vector zero = Vector::Zero(a.size());
  CHECK(holder_net_metric(0.5).distance(a, zero) == doctest::Approx(1.0));
  CHECK(parse_net_metric("sup", 4).distance(scalar(1.0), scalar(-2.0)) == 3.0);
  CHECK(parse_net_metric("holder:0.25", 4).name.rfind("holder", 0) == 0);
  CHECK(parse_net_metric("frechet_seq", 16).distance(Vector::Zero(16), Vector::Zero(16)) == 0.0);
  CHECK_THROWS_AS(parse_net_metric("l2", 4), std::invalid_argument);
  CHECK_THROWS_AS(holder_net_metric(1.0), std::invalid_argument);
}

TEST_CASE("compactness profile reports per epsilon") {
  const SequenceSpace seq(16);
  const auto reports = compactness_profile(floor_metric_shape(-0.5), seq, {0.4, 0.2}, 200, 3);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].metric == "frechet_seq");
  CHECK(reports[0].sample_count == 200);
  CHECK(reports[0].net_size <= reports[1].net_size);
  CHECK(to_json(reports[1]).contains("saturated"));
}

TEST_CASE("full measure CDF") {
  const std::vector<double> radii{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0};
  const auto r = full_measure_mc(0.25, radii, 2000, 10, 11);
  CHECK(r.cdf.front().p_hat == 0.0);
  CHECK(r.monotone);
  for (std::size_t k = 1; k < r.cdf.size(); ++k) CHECK(r.cdf[k].p_hat >= r.cdf[k - 1].p_hat);
  CHECK(r.pass);
  CHECK(r.crossing_radius == 4.0);
  CHECK(r.cdf[4].p_hat == 0.636);
  CHECK(r.cdf[4].stderr_ == doctest::Approx(std::sqrt(0.636 * 0.364 / 2000.0)));
  CHECK(r.cdf[4].model == "wiener(level=10)");

  const auto low = full_measure_mc(0.25, {0.5, 1.0}, 200, 8, 11);
  CHECK_FALSE(low.pass);
  CHECK(low.crossing_radius == -1.0);

  std::ostringstream os;
  write_cdf_csv(os, low);
  CHECK(os.str().rfind("r,p_hat,stderr\n", 0) == 0);
  CHECK_THROWS_AS(full_measure_mc(1.0, radii, 10, 8, 1), std::invalid_argument);
}

TEST_CASE("dichotomy sweep") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    for (double m : line_holder_medians(alpha, {6, 8, 10})) CHECK(m == doctest::Approx(1.0).epsilon(1e-14));
  }

  const auto r = dichotomy_sweep({0.25, 0.5, 0.75}, {8, 9, 10}, 200, 5);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].regime == "stable");
  CHECK(r.rows[1].regime == "none");
  CHECK(r.rows[2].regime == "divergent");
  for (double q : r.rows[0].ratios) CHECK(std::abs(q - 1.0) <= 0.2);
  for (double q : r.rows[2].ratios) CHECK(q == doctest::Approx(std::pow(2.0, 0.25)).epsilon(0.15));
  CHECK(r.pass);

  CHECK(r.rows[0].medians[0] == golden(1.8230859029036106));
  CHECK(r.rows[0].medians[2] == golden(1.8927030153395754));
  CHECK(r.rows[2].medians[0] == golden(12.258087295619228));
  CHECK(r.rows[2].medians[2] == golden(19.429499184424962));

  CHECK_THROWS_AS(dichotomy_sweep({0.25}, {10, 8}, 10, 5), std::invalid_argument);
  CHECK_THROWS_AS(dichotomy_sweep({0.25}, {8}, 10, 5), std::invalid_argument);
}

TEST_CASE("Cauchy-Schwarz bound") {
  const auto unit = cs_bound_check({line(10)});
  CHECK(unit.max_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(unit.violations == 0);
  CHECK(unit.pass);

  GridFunction doubled = line(8);
  doubled *= 2.0;
  const auto flagged = cs_bound_check({doubled});
  CHECK(flagged.precondition_failures == 1);
  CHECK(flagged.max_ratio_unnormalized == doctest::Approx(2.0));
  CHECK_FALSE(flagged.pass);

  const auto random = cs_bound_check(100, 8, 3);
  CHECK(random.precondition_failures == 0);
  CHECK(random.max_ratio <= 1.0 + 1e-9);
  CHECK(random.max_ratio > 0.0);
  CHECK(random.pass);
}

TEST_CASE("small-ball Holder bound") {
  CHECK(unit_band_path(10, 150, 64, 4).values().size() == 1025);
  CHECK(h12_norm(unit_band_path(10, 150, 64, 4)) == doctest::Approx(1.0).epsilon(1e-12));

  const auto r = small_ball_holder_bound({0.005, 0.01}, 0.25, 200, 10, 7);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].bound == doctest::Approx(0.1));
  CHECK(r.rows[1].bound == doctest::Approx(std::sqrt(0.02)));
  for (const auto& row : r.rows) {
    CHECK(row.filtered > 50);
    CHECK(row.violations == 0);
    CHECK(row.sharpest < 1.0);
  }
  CHECK(r.rows[0].filtered == 143);
  CHECK(r.pass);

  const auto edge = small_ball_holder_bound({1e-6}, 0.49999, 4, 8, 7);
  CHECK(edge.rows[0].bound == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(edge.rows[0].filtered == 0);
  CHECK_FALSE(edge.pass);

  CHECK_THROWS_AS(small_ball_holder_bound({0.01}, 0.5, 4, 8, 7), std::invalid_argument);
}

TEST_CASE("containment witnesses") {
  const auto r = containment_witnesses({8, 10}, 200, 9);
  CHECK(r.h12_ratios[0] == doctest::Approx(2.0).epsilon(0.15));
  CHECK(r.line_h12 == std::vector<double>{1.0, 1.0});
  CHECK(r.alpha_ratios[0] == doctest::Approx(1.0).epsilon(0.15));
  CHECK(r.alpha_prime_ratios[0] == doctest::Approx(std::pow(2.0, 0.2)).epsilon(0.15));
  CHECK(r.pass);
  CHECK(r.h12_medians[0] == golden(15.982880941315877));
  CHECK(r.alpha_prime_medians[1] == golden(6.975978820752559));
}

TEST_CASE("small-Holder membership") {
  for (double d : {1.0, 0.5, 0.25, 0.125}) {
    CHECK(small_holder_defect(line(10), 0.25, d) == doctest::Approx(std::pow(d, 0.75)));
  }

  const auto r = small_holder_membership(0.25, {0.5, 0.25, 0.125}, 200, 10, 21);
  CHECK(r.decreasing);
  CHECK(r.median_defects.back() < r.full_defect);
  CHECK(r.ratio == golden(0.8810946281149711));

  const auto control = small_holder_membership(0.75, {0.5, 0.25, 0.125, 0.0625, 0.03125}, 200, 10, 21);
  CHECK(control.ratio > 0.9);
  CHECK_FALSE(control.pass);

  CHECK_THROWS_AS(small_holder_membership(0.25, {0.5, 1.0 / 2048.0}, 10, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(small_holder_membership(0.25, {0.25, 0.5}, 10, 10, 1), std::invalid_argument);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("diagnostics independent of worker count") {
  const WienerSpace w(8, 32);
  set_worker_count(1);
  const auto fm1 = to_json(full_measure_mc(0.25, {1.0, 2.0, 3.0}, 300, 9, 4)).dump();
  const auto net1 = to_json(ball_covering_profile(w, {0.2}, 300, 4)[0]).dump();
  const auto cs1 = to_json(cs_bound_check(50, 8, 4)).dump();
  set_worker_count(3);
  CHECK(to_json(full_measure_mc(0.25, {1.0, 2.0, 3.0}, 300, 9, 4)).dump() == fm1);
  CHECK(to_json(ball_covering_profile(w, {0.2}, 300, 4)[0]).dump() == net1);
  CHECK(to_json(cs_bound_check(50, 8, 4)).dump() == cs1);
  set_worker_count(1);
}
