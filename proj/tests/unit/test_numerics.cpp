#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

#include "qsol/numerics.hpp"
#include "qsol/parallel.hpp"

using namespace qsol;

TEST_CASE("Gauss-Legendre rules are exact to degree 2m-1") {
  for (int m : {1, 2, 5, 16, 64}) {
    const auto& g = gauss_legendre(m);
    REQUIRE(g.nodes.size() == static_cast<std::size_t>(m));
    for (int k = 0; k <= 2 * m - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
      CHECK(std::abs(s - exact) < 1e-14);
    }
    for (double w : g.weights) CHECK(w > 0.0);
  }
}

TEST_CASE("pairwise sum and log-sum-exp") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (i + 1.0);
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(pairwise_sum(v) == doctest::Approx(naive).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);

  std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_sum_exp(std::vector<double>{ninf, ninf}) == ninf);
}

TEST_CASE("log-log fit recovers a power law") {
  std::vector<double> x, y;
  for (int p = 4; p <= 40; ++p) {
    x.push_back(p);
    y.push_back(3.0 * std::pow(p, -1.5));
  }
  const SlopeFit f = loglog_fit(x, y);
  CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.points == 37);
  // Non-positive values are skipped.
  x.push_back(50);
  y.push_back(0.0);
  CHECK(loglog_fit(x, y).points == 37);
}

TEST_CASE("parallel_for visits each index once for any thread count") {
  for (int t : {1, 2, 4, 7}) {
    set_thread_count(t);
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) {
      hits[i]++;
      parallel_for(3, [&](std::size_t) {});  // nested calls run inline
    });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  set_thread_count(0);
}

TEST_CASE("parallel_for propagates exceptions") {
  set_thread_count(4);
  CHECK_THROWS_AS(parallel_for(100,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  set_thread_count(0);
}
