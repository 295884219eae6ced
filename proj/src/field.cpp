#include "biasmap/field.hpp"

#include <cmath>
#include <stdexcept>

namespace biasmap {

namespace {

void require_finite(const Vec2& p) {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y()))
    throw std::invalid_argument("eval_bias: non-finite query position");
}

Vec2 eval_gaussian_radial(const GaussianRadialField& f, const Vec2& p) {
  if (f.sigma <= 0.0)
    throw std::invalid_argument("GaussianRadialField: sigma must be > 0");
  if (f.peak_magnitude < 0.0)
    throw std::invalid_argument("GaussianRadialField: peak_magnitude must be >= 0");
  const Vec2 d = p - f.center;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) return Vec2::Zero();  // direction undefined at the center
  const double mag =
      f.peak_magnitude * std::exp(-r2 / (2.0 * f.sigma * f.sigma));
  return d * (mag / std::sqrt(r2));
}

Vec2 eval_grid_interp(const GridInterpField& f, const Vec2& p) {
  if (f.spacing <= 0.0)
    throw std::invalid_argument("GridInterpField: spacing must be > 0");
  if (f.cols < 2 || f.rows < 2 ||
      f.values.size() != static_cast<std::size_t>(f.cols * f.rows))
    throw std::invalid_argument("GridInterpField: need a full grid of >= 2x2 nodes");

  const double u = (p.x() - f.origin.x()) / f.spacing;
  const double v = (p.y() - f.origin.y()) / f.spacing;
  const double tol = 1e-9;
  if (u < -tol || v < -tol || u > f.cols - 1 + tol || v > f.rows - 1 + tol)
    throw std::domain_error("GridInterpField: query outside grid hull");

  const double uc = std::clamp(u, 0.0, static_cast<double>(f.cols - 1));
  const double vc = std::clamp(v, 0.0, static_cast<double>(f.rows - 1));
  int ix = std::min(static_cast<int>(uc), f.cols - 2);
  int iy = std::min(static_cast<int>(vc), f.rows - 2);
  const double fu = uc - ix;
  const double fv = vc - iy;

  return (1 - fu) * (1 - fv) * f.at(ix, iy) + fu * (1 - fv) * f.at(ix + 1, iy) +
         (1 - fu) * fv * f.at(ix, iy + 1) + fu * fv * f.at(ix + 1, iy + 1);
}

}  // namespace

Vec2 eval_bias(const BiasFieldSpec& spec, const Vec2& position) {
  require_finite(position);
  return std::visit(
      [&](const auto& f) -> Vec2 {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
          return f.vector;
        } else if constexpr (std::is_same_v<T, GaussianRadialField>) {
          return eval_gaussian_radial(f, position);
        } else if constexpr (std::is_same_v<T, SumField>) {
          Vec2 total = Vec2::Zero();
          for (const auto& part : f.parts) total += eval_bias(part, position);
          return total;
        } else {
          return eval_grid_interp(f, position);
        }
      },
      spec.value());
}

std::vector<Vec2> make_eval_grid(const Rect& bounds, double spacing) {
  if (spacing <= 0.0)
    throw std::invalid_argument("make_eval_grid: spacing must be > 0");
  if (bounds.width() < 0.0 || bounds.height() < 0.0 ||
      (bounds.width() == 0.0 && bounds.height() == 0.0))
    throw std::invalid_argument("make_eval_grid: degenerate bounds");

  const int nx = static_cast<int>(std::floor(bounds.width() / spacing + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(bounds.height() / spacing + 1e-9)) + 1;
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      pts.emplace_back(bounds.xmin + ix * spacing, bounds.ymin + iy * spacing);
  return pts;
}

}  // namespace biasmap
