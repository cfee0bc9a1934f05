#include "drifts/volume.hpp"

#include <cmath>
#include <string>

namespace drifts {

Geometry Geometry::axis_aligned(const Eigen::Vector3i& dims,
                                const Eigen::Vector3d& spacing) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.affine.setIdentity();
  g.affine.topLeftCorner<3, 3>() = spacing.asDiagonal();
  g.validate();
  return g;
}

void Geometry::validate() const {
  if ((dims.array() < 1).any()) {
    throw Error(ErrorCode::GeometryError, "all dims must be >= 1");
  }
  if (!(spacing.array() > 0.0).all() || !spacing.allFinite()) {
    throw Error(ErrorCode::GeometryError, "all spacing components must be > 0");
  }
  const double det = affine.topLeftCorner<3, 3>().determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorCode::GeometryError, "affine is singular");
  }
}

bool Geometry::matches(const Geometry& other) const {
  if (dims != other.dims) return false;
  const Eigen::Array3d rel =
      (spacing - other.spacing).array().abs() / spacing.array();
  if ((rel > 1e-6).any()) return false;
  return ((affine - other.affine).array().abs() <= 1e-6).all();
}

std::string_view to_string(LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::Feta7: return "FETA7";
    case LabelScheme::DrawEm9: return "DRAWEM9";
    case LabelScheme::Meta4: return "META4";
    case LabelScheme::Subclass: return "SUBCLASS";
  }
  return "FETA7";
}

LabelScheme label_scheme_from_string(std::string_view name) {
  if (name == "FETA7" || name == "feta7") return LabelScheme::Feta7;
  if (name == "DRAWEM9" || name == "drawem9") return LabelScheme::DrawEm9;
  if (name == "META4" || name == "meta4") return LabelScheme::Meta4;
  if (name == "SUBCLASS" || name == "subclass") return LabelScheme::Subclass;
  throw Error(ErrorCode::InvalidArgument,
              "unknown label scheme '" + std::string(name) + "'");
}

std::set<std::int32_t> LabelMap::values() const {
  std::set<std::int32_t> out;
  for (Index i = 0; i < data_.size(); ++i) out.insert(data_[i]);
  return out;
}

void LabelMap::validate_codes(std::int32_t max_subclass) const {
  std::int32_t max_code = -1;
  switch (scheme_) {
    case LabelScheme::Feta7: max_code = 7; break;
    case LabelScheme::DrawEm9: max_code = 9; break;
    case LabelScheme::Meta4: max_code = 4; break;
    case LabelScheme::Subclass: max_code = max_subclass; break;
  }
  const std::int32_t lo = data_.minCoeff();
  const std::int32_t hi = data_.maxCoeff();
  if (lo < 0 || (max_code >= 0 && hi > max_code)) {
    throw Error(ErrorCode::UnknownLabel,
                std::string(to_string(scheme_)) + " map holds code " +
                    std::to_string(lo < 0 ? lo : hi));
  }
}

}  // namespace drifts
