#pragma once

#include <variant>
#include <vector>

#include "biasmap/geometry.hpp"

namespace biasmap {

class BiasFieldSpec;

/// Uniform bias vector everywhere.
struct ConstantField {
  Vec2 vector{0.0, 0.0};
};

/// Vector field pointing radially away from `center` with Gaussian
/// magnitude peak_magnitude * exp(-r^2 / (2 sigma^2)). Zero at the center.
struct GaussianRadialField {
  Vec2 center{0.0, 0.0};
  double peak_magnitude = 0.0;
  double sigma = 1.0;
};

/// Bilinearly interpolated grid of bias vectors. Node (ix, iy) sits at
/// origin + (ix, iy) * spacing; values are row-major with iy outer.
struct GridInterpField {
  Vec2 origin{0.0, 0.0};
  double spacing = 1.0;
  int cols = 0;  // node count along x
  int rows = 0;  // node count along y
  std::vector<Vec2> values;

  const Vec2& at(int ix, int iy) const { return values[iy * cols + ix]; }
};

struct SumField {
  std::vector<BiasFieldSpec> parts;
};

/// Parametric description of a ground-truth bias field M: R^2 -> R^2.
class BiasFieldSpec {
 public:
  using Variant =
      std::variant<ConstantField, GaussianRadialField, SumField, GridInterpField>;

  BiasFieldSpec() : value_(ConstantField{}) {}
  BiasFieldSpec(ConstantField f) : value_(std::move(f)) {}
  BiasFieldSpec(GaussianRadialField f) : value_(std::move(f)) {}
  BiasFieldSpec(SumField f) : value_(std::move(f)) {}
  BiasFieldSpec(GridInterpField f) : value_(std::move(f)) {}

  const Variant& value() const { return value_; }

 private:
  Variant value_;
};

/// Evaluates M(position). Throws std::invalid_argument on non-finite input
/// or malformed parameters, std::domain_error for out-of-hull GridInterp
/// queries.
Vec2 eval_bias(const BiasFieldSpec& spec, const Vec2& position);

/// Row-major regular grid covering `bounds`, both edges included where
/// spacing divides the extent.
std::vector<Vec2> make_eval_grid(const Rect& bounds, double spacing);

}  // namespace biasmap
