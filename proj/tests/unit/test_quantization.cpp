#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qsol/errors.hpp"
#include "qsol/quadrature.hpp"
#include "qsol/quantization.hpp"
#include "support.hpp"

using namespace qsol;
using qsol::testing::random_potential;
using qsol::testing::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
  ReflexivePolytope polytope;
  SectionBasis basis;
  Potential phi;
  QuadratureGrid grid;
  InvariantProduct h;
};

Setup make(const char* name, int p, const Potential& phi, double margin = 0.0) {
  auto P = load_preset(name);
  auto b = lattice_points(P, p);
  QuadratureOptions o;
  o.margin = margin;
  auto g = build_grid(phi, P, b, o);
  auto h = gram(phi, b, g);
  return {P, b, phi, g, h};
}

Setup make(const char* name, int p) { return make(name, p, reference_potential(load_preset(name))); }

// log of (2 pi) int e^{a x} (2 cosh(x/2))^{-2(p+1)} dx = log 2pi + log B(p+1+a, p+1-a).
double round_log_weight(int p, int a) {
  return std::log(2 * kPi) + std::lgamma(p + 1.0 + a) + std::lgamma(p + 1.0 - a) - std::lgamma(2 * p + 2.0);
}

}  // namespace

TEST_CASE("Gram weights of closed-form potentials") {
  // phi = log(2 cosh x) on CP1 at p = 1: ell_0 = log(2 pi * 1/2).
  const auto phi = Potential::log_sum_exp(1, {{1, 0}, {-1, 0}}, {0.0, 0.0}, 1.0,
                                          PotentialKind::user_defined, "log 2cosh x");
  auto s = make("CP1", 1, phi);
  CHECK(s.h.log_weights[1] == doctest::Approx(std::log(kPi)).epsilon(1e-12));
  // Round metric at p = 1: ell_0 = log(pi/3).
  auto r = make("CP1", 1, Potential::round_cp1());
  CHECK(r.h.log_weights[1] == doctest::Approx(std::log(kPi / 3)).epsilon(1e-12));
  for (int p : {1, 3, 7, 12}) {
    auto rp = make("CP1", p, Potential::round_cp1());
    for (std::size_t k = 0; k < rp.basis.size(); ++k) {
      const int a = rp.basis.points[k][0];
      CHECK(std::abs(rp.h.log_weights[k] - round_log_weight(p, a)) < 1e-10);
    }
  }
}

TEST_CASE("Gram weights shift with the gauge constant") {
  auto s = make("dP8", 3);
  const double c = 0.37;
  const auto shifted = gram(s.phi.plus_constant(c), s.basis, s.grid);
  for (std::size_t k = 0; k < s.basis.size(); ++k) {
    CHECK(shifted.log_weights[k] == doctest::Approx(s.h.log_weights[k] - 4.0 * c).epsilon(1e-13));
  }
}

TEST_CASE("Gram weights respect the symmetries of the potential") {
  auto r = make("CP1", 6, Potential::round_cp1());
  const std::size_t N = r.basis.size();
  for (std::size_t k = 0; k < N; ++k) {
    CHECK(std::abs(r.h.log_weights[k] - r.h.log_weights[N - 1 - k]) < 1e-12);
  }
  auto d = make("dP8", 4);
  for (std::size_t k = 0; k < d.basis.size(); ++k) {
    const LatticePoint a = d.basis.points[k];
    for (std::size_t j = 0; j < d.basis.size(); ++j) {
      if (d.basis.points[j] == LatticePoint{a[1], a[0]}) {
        CHECK(std::abs(d.h.log_weights[k] - d.h.log_weights[j]) < 1e-11);
      }
    }
  }
}

TEST_CASE("Fubini-Study potential of a product") {
  const auto P = load_preset("CP1");
  for (int p : {1, 2, 5}) {
    const auto fs = fs_potential(uniform_product(lattice_points(P, p)));
    for (double x : {-3.0, -0.2, 0.0, 1.7, 9.0}) {
      double s = 0.0;
      for (int k = -p; k <= p; ++k) s += std::exp(k * x);
      CHECK(fs.value({x, 0.0}) == doctest::Approx(std::log(s) / p).epsilon(1e-14));
    }
  }
  // Round metric: rho is the constant (2p+1)/(2pi), b0 = 1/pi.
  for (int p : {1, 4, 9}) {
    auto r = make("CP1", p, Potential::round_cp1());
    for (double x : {-6.0, -1.0, 0.0, 0.5, 4.0}) {
      CHECK(rawnsley(r.h, r.phi, {x, 0.0}) == doctest::Approx((2 * p + 1) / (2 * kPi)).epsilon(1e-10));
      CHECK(bergman_density(r.phi, {x, 0.0}) == doctest::Approx(1 / kPi).epsilon(1e-13));
    }
  }
}

TEST_CASE("Rawnsley function integrates to the dimension of the space") {
  for (const char* name : {"CP1", "CP2", "dP8", "dP7"}) {
    for (int p : {1, 3}) {
      auto s = make(name, p, random_potential(load_preset(name)));
      std::vector<double> log_g(s.grid.size());
      for (std::size_t q = 0; q < s.grid.size(); ++q) {
        const auto& x = s.grid.points[q];
        log_g[q] = std::log(rawnsley(s.h, s.phi, x)) - s.phi.value(x) + log_two_pi_power(s.basis.dimension);
      }
      CHECK(integrate_log(s.grid, log_g).value == doctest::Approx(double(s.basis.size())).epsilon(1e-9));
    }
  }
}

TEST_CASE("Toeplitz quantization: unit, Tuynman identity, duality") {
  for (const char* name : {"CP1", "dP8", "CP1xCP1"}) {
    const int p = 3;
    const auto P = load_preset(name);
    const int n = P.dimension();
    auto s = make(name, p, random_potential(P));
    const auto one = toeplitz([](const RealPoint&) { return 1.0; }, s.h, s.phi, s.grid);
    for (double v : one.values) CHECK(std::abs(v - 1.0) < 1e-10);

    const RealPoint xi = random_vector(n, 1.0);
    const auto theta = toeplitz(
        [&](const RealPoint& x) {
          auto j = s.phi.jet(x);
          return j.grad[0] * xi[0] + j.grad[1] * xi[1];
        },
        s.h, s.phi, s.grid);
    for (std::size_t a = 0; a < s.basis.size(); ++a) {
      CHECK(std::abs((p + 1.0) * theta.values[a] - s.basis.dot(a, xi.data())) < 1e-9);
    }

    // <T(f), A> = int f sigma(A) rho dnu.
    DiagonalObservable A;
    for (std::size_t a = 0; a < s.basis.size(); ++a) A.values.push_back(qsol::testing::uniform(-1, 1));
    auto f = [](const RealPoint& x) { return std::sin(x[0]) + 0.3 * x[1] / (1 + x[1] * x[1]); };
    const auto tf = toeplitz(f, s.h, s.phi, s.grid);
    double lhs = 0.0;
    for (std::size_t a = 0; a < s.basis.size(); ++a) lhs += tf.values[a] * A.values[a];
    double rhs = 0.0;
    for (std::size_t q = 0; q < s.grid.size(); ++q) {
      const auto& x = s.grid.points[q];
      rhs += std::exp(s.grid.log_weights[q] - s.phi.value(x) + log_two_pi_power(n)) * rawnsley(s.h, s.phi, x) *
             f(x) * berezin_symbol(A, s.h, x);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("Berezin symbol is a convex combination of the diagonal") {
  auto s = make("dP8", 2);
  DiagonalObservable id{std::vector<double>(s.basis.size(), 1.0)};
  DiagonalObservable A;
  for (std::size_t a = 0; a < s.basis.size(); ++a) A.values.push_back(qsol::testing::uniform(-2, 3));
  const double lo = *std::min_element(A.values.begin(), A.values.end());
  const double hi = *std::max_element(A.values.begin(), A.values.end());
  for (int i = 0; i < 200; ++i) {
    const RealPoint x = random_vector(2, 30.0);
    CHECK(berezin_symbol(id, s.h, x) == doctest::Approx(1.0).epsilon(1e-14));
    const double v = berezin_symbol(A, s.h, x);
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
}

TEST_CASE("Berezin transform of the moment coordinate on the round sphere") {
  for (int p : {1, 2, 5, 10}) {
    auto r = make("CP1", p, Potential::round_cp1());
    std::vector<RealPoint> xs;
    for (double x = -8; x <= 8; x += 0.5) xs.push_back({x, 0.0});
    auto f = [](const RealPoint& x) { return std::tanh(x[0] / 2); };
    const auto b = berezin_transform(f, r.h, r.phi, r.grid, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(std::abs(b[i] - p / (p + 1.0) * f(xs[i])) < 1e-10);
    }
  }
}

TEST_CASE("twisting translates the Fubini-Study potential") {
  for (const char* name : {"CP1", "dP8", "dP6"}) {
    const int p = 4;
    auto s = make(name, p);
    const int n = s.basis.dimension;
    for (int t = 0; t < 5; ++t) {
      const RealPoint xi = random_vector(n, 2.0);
      const auto fs = fs_potential(s.h);
      const auto tw = fs_potential(twist_product(s.h, xi));
      for (int i = 0; i < 20; ++i) {
        const RealPoint x = random_vector(n, 10.0);
        const RealPoint y{x[0] + xi[0] / p, x[1] + xi[1] / p};
        CHECK(tw.value(x) == doctest::Approx(fs.value(y)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("weights CSV round trip and malformed input") {
  auto s = make("dP8", 3);
  const std::string csv = product_to_csv(s.h);
  const auto back = product_from_csv(csv, s.basis);
  CHECK(back.log_weights == s.h.log_weights);

  const auto b1 = lattice_points(load_preset("CP1"), 1);
  CHECK_THROWS_AS(product_from_csv("alpha_1,log_weight\n-1,0\n0,0\n", b1), ConfigError);
  CHECK_THROWS_AS(product_from_csv("alpha_1,log_weight\n-1,0\n0,0\n0,1\n1,0\n", b1), ConfigError);
  CHECK_THROWS_AS(product_from_csv("alpha_1,log_weight\n-1,0\n0,zz\n1,0\n", b1), ConfigError);
  CHECK_NOTHROW(product_from_csv("alpha_1,log_weight\n1,0.5\n-1,0\n0,2\n", b1));
}

TEST_CASE("coordinate dictionary is fixed") {
  const auto& d = coordinate_dictionary();
  CHECK(d.size() >= 6);
  for (const auto& e : d) {
    CHECK(!e.object.empty());
    CHECK(!e.formula.empty());
  }
}
