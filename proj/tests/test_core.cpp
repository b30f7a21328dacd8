#include <doctest.h>

#include <cmath>
#include <vector>

#include "mskm/core.hpp"

using namespace mskm;

TEST_CASE("normalize_for_correlation hand-computed example") {
  // mean = 2, centered = [-1, 0, 1], norm = sqrt(2)
  const TimeSeries z = normalize_for_correlation(std::vector<double>{1, 2, 3});
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(z[0] == doctest::Approx(-s).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(s).epsilon(1e-15));
}

TEST_CASE("constant series normalizes to zero") {
  const TimeSeries z = normalize_for_correlation(std::vector<double>{5, 5, 5});
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("normalized form has zero mean and unit norm") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20);
    for (double& v : x) v = rng.uniform() * 10.0 - 5.0;
    const TimeSeries z = normalize_for_correlation(x);
    double mean = 0, sq = 0;
    for (double v : z) {
      mean += v;
      sq += v * v;
    }
    CHECK(std::abs(mean) < 1e-12);
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalize rejects short series") {
  CHECK_THROWS_AS(normalize_for_correlation(std::vector<double>{1}), Error);
}

TEST_CASE("pearson correlation basics") {
  const std::vector<double> x{1, 2, 3}, y{3, 2, 1}, c{7, 7, 7};
  CHECK(pearson_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson_correlation(x, y) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(pearson_correlation(x, c) == 0.0);
  CHECK_THROWS_AS(pearson_correlation(x, std::vector<double>{1, 2}), Error);
}

TEST_CASE("correlation distance endpoints") {
  const std::vector<double> x{0.5, 2.5, -1.0, 4.0};
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  CHECK(correlation_distance(x, x) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(correlation_distance(x, neg) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(correlation_distance(x, std::vector<double>{7, 7, 7, 7}) == 1.0);
}

TEST_CASE("correlation invariant under positive affine maps") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x(16), y(16), ax(16);
    for (std::size_t i = 0; i < 16; ++i) {
      x[i] = rng.uniform() * 4.0;
      y[i] = rng.uniform() * 4.0 - 2.0;
    }
    const double a = 0.1 + rng.uniform() * 5.0;
    const double b = rng.uniform() * 100.0 - 50.0;
    for (std::size_t i = 0; i < 16; ++i) ax[i] = a * x[i] + b;
    CHECK(std::abs(pearson_correlation(ax, y) - pearson_correlation(x, y)) <= 1e-10);
  }
}

TEST_CASE("correlation symmetric and bounded") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x(12), y(12);
    for (std::size_t i = 0; i < 12; ++i) {
      x[i] = rng.gaussian();
      y[i] = rng.gaussian();
    }
    const double rxy = pearson_correlation(x, y);
    const double ryx = pearson_correlation(y, x);
    CHECK(rxy == ryx);  // same summation order under swap
    CHECK(rxy <= 1.0);
    CHECK(rxy >= -1.0);
  }
}

TEST_CASE("mean_series") {
  const std::vector<double> a{1, 1}, b{3, 3}, c{0, 2}, d{2, 0};
  auto span = [](const std::vector<double>& v) { return std::span<const double>(v); };
  const TimeSeries m1 = mean_series({span(a), span(b)});
  CHECK(m1[0] == 2.0);
  CHECK(m1[1] == 2.0);
  const TimeSeries m2 = mean_series({span(a)});
  CHECK(m2 == a);
  const TimeSeries m3 = mean_series({span(c), span(d)});
  CHECK(m3[0] == 1.0);
  CHECK(m3[1] == 1.0);
  CHECK_THROWS_AS(mean_series({}), Error);
}

TEST_CASE("rng reproducible and stable across substreams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  // Substream derivation ignores consumption of the parent stream.
  Rng c(42);
  c.next();
  Rng s1 = Rng(42).substream(5, 9);
  Rng s2 = c.substream(5, 9);
  for (int i = 0; i < 10; ++i) CHECK(s1.next() == s2.next());

  Rng s3 = Rng(42).substream(5, 10);
  bool differs = false;
  Rng s4 = Rng(42).substream(5, 9);
  for (int i = 0; i < 10; ++i) differs = differs || (s3.next() != s4.next());
  CHECK(differs);
}

TEST_CASE("rng uniform and below ranges") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const uint64_t v = rng.below(17);
    CHECK(v < 17);
  }
  CHECK_THROWS_AS(rng.below(0), Error);
}

TEST_CASE("rng gaussian moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}
