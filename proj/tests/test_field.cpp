#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "biasmap/field.hpp"

using namespace biasmap;

TEST_CASE("constant field returns its vector everywhere") {
  BiasFieldSpec spec{ConstantField{{2.0, 0.0}}};
  CHECK(eval_bias(spec, {10.0, 10.0}) == Vec2{2.0, 0.0});
  CHECK(eval_bias(spec, {-3.5, 42.0}) == Vec2{2.0, 0.0});
}

TEST_CASE("gaussian radial field vanishes at its center") {
  BiasFieldSpec spec{GaussianRadialField{{35.0, 30.0}, 5.0, 10.0}};
  CHECK(eval_bias(spec, {35.0, 30.0}) == Vec2{0.0, 0.0});
}

TEST_CASE("gaussian radial field hand-evaluated at one lengthscale") {
  BiasFieldSpec spec{GaussianRadialField{{35.0, 30.0}, 5.0, 10.0}};
  const Vec2 v = eval_bias(spec, {45.0, 30.0});
  CHECK(v.x() == doctest::Approx(5.0 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(v.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gaussian radial magnitude is non-increasing in distance") {
  BiasFieldSpec spec{GaussianRadialField{{10.0, 10.0}, 3.0, 4.0}};
  double prev = std::numeric_limits<double>::infinity();
  for (double r = 0.5; r < 40.0; r += 0.5) {
    const double mag = eval_bias(spec, {10.0 + r, 10.0}).norm();
    CHECK(mag <= prev + 1e-15);
    prev = mag;
  }
}

TEST_CASE("sum field equals the vector sum of its parts") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 20; ++trial) {
    ConstantField c{{u(rng), u(rng)}};
    GaussianRadialField g{{u(rng), u(rng)}, std::abs(u(rng)) * 0.2, 5.0};
    BiasFieldSpec sum{SumField{{BiasFieldSpec{c}, BiasFieldSpec{g}}}};
    const Vec2 q{u(rng), u(rng)};
    const Vec2 expect = eval_bias(BiasFieldSpec{c}, q) + eval_bias(BiasFieldSpec{g}, q);
    CHECK((eval_bias(sum, q) - expect).norm() < 1e-14);
  }
}

namespace {

GridInterpField sample_on_grid(const BiasFieldSpec& spec, const Vec2& origin,
                               double spacing, int cols, int rows) {
  GridInterpField g;
  g.origin = origin;
  g.spacing = spacing;
  g.cols = cols;
  g.rows = rows;
  for (int iy = 0; iy < rows; ++iy)
    for (int ix = 0; ix < cols; ++ix)
      g.values.push_back(
          eval_bias(spec, origin + Vec2(ix * spacing, iy * spacing)));
  return g;
}

}  // namespace

TEST_CASE("grid interp reproduces the sampled spec at its own nodes") {
  BiasFieldSpec analytic{GaussianRadialField{{12.0, 8.0}, 4.0, 6.0}};
  GridInterpField g = sample_on_grid(analytic, {0.0, 0.0}, 2.5, 9, 9);
  BiasFieldSpec spec{g};
  for (int iy = 0; iy < 9; ++iy) {
    for (int ix = 0; ix < 9; ++ix) {
      const Vec2 p{ix * 2.5, iy * 2.5};
      CHECK((eval_bias(spec, p) - eval_bias(analytic, p)).norm() < 1e-12);
    }
  }
}

TEST_CASE("grid interp stays within a bilinear error bound between nodes") {
  // Bilinear error on an h-cell is bounded by (|fxx| + |fyy|) h^2 / 8; the
  // sampled second differences approximate h^2 * f''. The Gaussian center
  // sits outside the patch so the field is smooth over it.
  const double h = 2.5;
  const int nn = 9;
  BiasFieldSpec analytic{GaussianRadialField{{30.0, 25.0}, 4.0, 8.0}};
  GridInterpField g = sample_on_grid(analytic, {0.0, 0.0}, h, nn, nn);
  double d2 = 0.0;  // max |second difference|, both axes and components
  for (int iy = 0; iy < nn; ++iy)
    for (int ix = 1; ix + 1 < nn; ++ix) {
      d2 = std::max(d2, (g.at(ix - 1, iy) - 2.0 * g.at(ix, iy) + g.at(ix + 1, iy))
                            .lpNorm<Eigen::Infinity>());
      d2 = std::max(d2, (g.at(iy, ix - 1) - 2.0 * g.at(iy, ix) + g.at(iy, ix + 1))
                            .lpNorm<Eigen::Infinity>());
    }
  const double bound = 2.0 * std::sqrt(2.0) * 2.0 * d2 / 8.0;
  BiasFieldSpec spec{g};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 q{u(rng), u(rng)};
    CHECK((eval_bias(spec, q) - eval_bias(analytic, q)).norm() <= bound);
  }
}

TEST_CASE("grid interp rejects out-of-hull queries") {
  BiasFieldSpec spec{sample_on_grid(BiasFieldSpec{ConstantField{{1.0, 0.0}}},
                                    {0.0, 0.0}, 1.0, 3, 3)};
  CHECK_THROWS_AS(eval_bias(spec, {2.5, -0.1}), std::domain_error);
  CHECK_THROWS_AS(eval_bias(spec, {2.1, 0.5}), std::domain_error);
}

TEST_CASE("non-finite query is rejected") {
  BiasFieldSpec spec{ConstantField{{1.0, 1.0}}};
  CHECK_THROWS_AS(eval_bias(spec, {std::nan(""), 0.0}), std::invalid_argument);
}

TEST_CASE("eval grid counts") {
  CHECK(make_eval_grid({0.0, 0.0, 50.0, 50.0}, 1.0).size() == 2601);
  CHECK(make_eval_grid({0.0, 0.0, 1.0, 1.0}, 1.0).size() == 4);
  CHECK(make_eval_grid({0.0, 0.0, 2.0, 0.0}, 1.0).size() == 3);
}

TEST_CASE("eval grid is row-major with inclusive edges") {
  const auto grid = make_eval_grid({0.0, 0.0, 2.0, 1.0}, 1.0);
  REQUIRE(grid.size() == 6);
  CHECK(grid.front() == Vec2{0.0, 0.0});
  CHECK(grid[1] == Vec2{1.0, 0.0});
  CHECK(grid.back() == Vec2{2.0, 1.0});
}
