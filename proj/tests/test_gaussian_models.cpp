#include "doctest.h"

#include <cmath>
#include <vector>

#include "shapelab/gaussian_models.hpp"
#include "shapelab/parallel.hpp"
#include "shapelab/rng.hpp"

using namespace shapelab;

namespace {

struct Moments {
  double mean_a = 0, mean_b = 0, var_a = 0, var_b = 0, cov = 0;
};

Moments moments(const std::vector<double>& a, const std::vector<double>& b) {
  Moments m;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    m.mean_a += a[i] / n;
    m.mean_b += b[i] / n;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    m.var_a += (a[i] - m.mean_a) * (a[i] - m.mean_a) / (n - 1);
    m.var_b += (b[i] - m.mean_b) * (b[i] - m.mean_b) / (n - 1);
    m.cov += (a[i] - m.mean_a) * (b[i] - m.mean_b) / (n - 1);
  }
  return m;
}

}  // namespace

TEST_CASE("counter rng streams are reproducible and distinct") {
  CounterRng a(1), b(1), c(2);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CHECK(derive_seed(5, 0) != derive_seed(5, 1));
  CHECK(derive_seed(5, 0) != derive_seed(6, 0));
}

TEST_CASE("sample_wiener moments") {
  std::vector<double> at_one, at_quarter, at_three_quarters;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto w = sample_wiener({10, derive_seed(42, s)});
    REQUIRE(w[0] == 0.0);
    at_one.push_back(w[1024]);
    at_quarter.push_back(w[256]);
    at_three_quarters.push_back(w[768]);
  }
  const auto end = moments(at_one, at_one);
  CHECK(end.var_a >= 0.94);
  CHECK(end.var_a <= 1.06);
  const auto pair = moments(at_quarter, at_three_quarters);
  CHECK(std::abs(pair.cov - 0.25) < 0.03);
}

TEST_CASE("samples are deterministic in the seed") {
  CHECK(sample_wiener({9, 77}).values() == sample_wiener({9, 77}).values());
  CHECK(sample_kl(16, 7, 3).values() == sample_kl(16, 7, 3).values());
  const ProductGaussianModel model(Vector::LinSpaced(5, 1.0, 3.0), 9);
  CHECK(sample_product_gaussian(model).coords == sample_product_gaussian(model).coords);
}

TEST_CASE("coarse restriction of Wiener paths matches the coarse law") {
  std::vector<double> restricted, direct;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const auto fine = sample_wiener({6, derive_seed(1, s)});
    const auto coarse = coarsen(fine);
    const auto other = sample_wiener({5, derive_seed(2, s)});
    // Increment over the first coarse cell has variance 2^-5 in both cases.
    restricted.push_back(coarse[1]);
    direct.push_back(other[1]);
  }
  const auto a = moments(restricted, restricted);
  const auto b = moments(direct, direct);
  const double expected = std::ldexp(1.0, -5);
  const double tolerance = 4.0 * expected * std::sqrt(2.0 / 4000.0);
  CHECK(std::abs(a.var_a - expected) < tolerance);
  CHECK(std::abs(b.var_a - expected) < tolerance);
}

TEST_CASE("discrete energy of Wiener paths has mean 2^level") {
  for (int level : {6, 8}) {
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      const double e = h12_norm(sample_wiener({level, derive_seed(3, s)}));
      mean += e * e / 1000.0;
    }
    CHECK(std::abs(mean / std::ldexp(1.0, level) - 1.0) < 0.1);
  }
}

TEST_CASE("bridge_refine keeps nodes and adds midpoints with variance 2^-(n+2)") {
  const auto base = sample_wiener({4, 8});
  std::vector<double> deviations;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto fine = bridge_refine(base, derive_seed(9, s));
    REQUIRE(coarsen(fine).values() == base.values());
    deviations.push_back(fine[1] - 0.5 * (base[0] + base[1]));
  }
  const auto m = moments(deviations, deviations);
  const double expected = std::ldexp(1.0, -6);
  CHECK(std::abs(m.var_a - expected) < 4.0 * expected * std::sqrt(2.0 / 5000.0));
}

TEST_CASE("KL expansion") {
  CHECK(sup_norm(kl_path(KLExpansion{Vector::Zero(8)}, 6)) == 0.0);
  CHECK(std::abs(h12_norm(kl_path(KLExpansion{Vector::Unit(1, 0)}, 10)) - 1.0) < 1e-3);

  CounterRng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Vector xi(16);
    for (auto& x : xi) x = rng.normal();
    const double energy = std::pow(h12_norm(kl_path(KLExpansion{xi}, 10)), 2);
    CHECK(std::abs(energy / xi.squaredNorm() - 1.0) < 1e-2);
  }
  CHECK_THROWS_AS(sample_kl(0, 5, 1), std::invalid_argument);
}

TEST_CASE("sample_product_gaussian moments") {
  CHECK_THROWS_AS(ProductGaussianModel(Vector::Zero(3), 1), std::invalid_argument);

  std::vector<double> first, second;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto p = sample_product_gaussian(ProductGaussianModel(Vector{{1.0, 2.0}}, derive_seed(7, s)));
    first.push_back(p.coords[0]);
    second.push_back(p.coords[1]);
  }
  const auto m = moments(first, second);
  CHECK(std::abs(m.var_a / 1.0 - 1.0) < 0.05);
  CHECK(std::abs(m.var_b / 4.0 - 1.0) < 0.05);
  CHECK(std::abs(m.cov / std::sqrt(m.var_a * m.var_b)) < 0.03);
}

TEST_CASE("cm_norm") {
  const SequenceSpace seq(Vector{{1.0, 2.0}}, default_weights(2));
  CHECK(seq.cm_norm(Vector::Zero(2)) == 0.0);
  CHECK(seq.cm_norm(Vector{{1.0, 2.0}}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(cm_norm(seq.as_point(Vector{{1.0, 2.0}}), seq.sigma()) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(seq.cm_norm(Vector::Zero(3)), std::invalid_argument);

  const auto line = GridFunction::sample(7, [](double t) { return t; });
  CHECK(cm_norm(line) == doctest::Approx(1.0));
  const WienerSpace wiener(7, 16);
  CHECK(wiener.cm_norm(line.values()) == cm_norm(line));
}

TEST_CASE("sample_sphere_H") {
  const WienerSpace wiener(8, 64);
  const SequenceSpace seq(16);
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (const GaussianSpace* space : {static_cast<const GaussianSpace*>(&wiener),
                                       static_cast<const GaussianSpace*>(&seq)}) {
      const auto x = sample_sphere_H(*space, s);
      CHECK(std::abs(space->cm_norm(x.point) - 1.0) < 1e-12);
      CHECK(x.cm_norm == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(space->metric(x.point) <= 1.0 + 1e-12);
      const auto minus = sample_sphere_H(*space, s, true);
      CHECK(minus.point == -x.point);
      const auto tail = sample_sphere_plan(*space, s, 2 * s + 1);
      CHECK(std::abs(tail.cm_norm - 1.0) < 1e-12);
    }
  }

  Vector mean = Vector::Zero(16);
  for (std::uint64_t s = 0; s < 1000; ++s) mean += sample_sphere_H(seq, derive_seed(2, s)).point / 1000.0;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("strata reach small metric values") {
  const SequenceSpace seq(64);
  const auto deep = sample_sphere_H_stratum(seq, 3, 40);
  CHECK(deep.point.head(40).isZero());
  CHECK(seq.metric(deep.point) < 1e-10);
}

TEST_CASE("covariance_estimate") {
  const WienerSpace wiener(10, 8);
  const auto r = covariance_estimate(wiener, evaluation_functional(10, 0.3),
                                     evaluation_functional(10, 0.7), 10000, 123);
  CHECK(std::abs(r.estimate - 0.3) < 3.0 * r.stderr_);
  CHECK(r.samples == 10000);

  const auto zero = covariance_estimate(wiener, evaluation_functional(10, 0.0),
                                        evaluation_functional(10, 0.5), 200, 1);
  CHECK(zero.estimate == 0.0);

  const SequenceSpace seq(Vector{{1.0, 2.0}}, default_weights(2));
  const auto diag = covariance_estimate(seq, coordinate_functional(1), coordinate_functional(1), 10000, 5);
  CHECK(std::abs(diag.estimate - 4.0) < 3.0 * diag.stderr_);

  CHECK_THROWS_AS(covariance_estimate(seq, coordinate_functional(0), coordinate_functional(0), 99, 5),
                  std::invalid_argument);

  const auto json = to_json(diag);
  CHECK(json.contains("estimate"));
  CHECK(json.contains("stderr"));
  CHECK(json["N"] == 10000);
}

TEST_CASE("Monte Carlo results do not depend on worker count") {
  const WienerSpace wiener(8, 8);
  set_worker_count(1);
  const auto one = covariance_estimate(wiener, evaluation_functional(8, 0.5),
                                       evaluation_functional(8, 1.0), 500, 3);
  set_worker_count(3);
  const auto three = covariance_estimate(wiener, evaluation_functional(8, 0.5),
                                         evaluation_functional(8, 1.0), 500, 3);
  set_worker_count(1);
  CHECK(one.estimate == three.estimate);
  CHECK(one.stderr_ == three.stderr_);
}

TEST_CASE("space descriptions round trip") {
  const WienerSpace wiener(7, 12);
  const SequenceSpace seq(Vector{{1.0, 0.5, 0.25}}, default_weights(3));
  CHECK(make_space(wiener.describe())->describe() == wiener.describe());
  CHECK(make_space(seq.describe())->describe() == seq.describe());
  CHECK_THROWS_AS(make_space({{"kind", "torus"}}), std::invalid_argument);
}
