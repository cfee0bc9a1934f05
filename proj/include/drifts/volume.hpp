#pragma once

#include <cstdint>
#include <set>
#include <string_view>
#include <type_traits>
#include <utility>

#include <Eigen/Core>
#include <Eigen/LU>

#include "drifts/error.hpp"

namespace drifts {

using Index = std::int64_t;

/// Voxel grid: counts, mm spacing and the voxel-to-world affine (mm).
struct Geometry {
  Eigen::Vector3i dims{1, 1, 1};
  Eigen::Vector3d spacing{1.0, 1.0, 1.0};
  Eigen::Matrix4d affine = Eigen::Matrix4d::Identity();

  /// Axis-aligned grid with the world origin at voxel (0,0,0).
  static Geometry axis_aligned(const Eigen::Vector3i& dims,
                               const Eigen::Vector3d& spacing);

  Index voxel_count() const {
    return Index(dims.x()) * Index(dims.y()) * Index(dims.z());
  }

  Index linear_index(int x, int y, int z) const {
    return Index(x) + Index(dims.x()) * (Index(y) + Index(dims.y()) * Index(z));
  }

  Eigen::Vector3i voxel_of(Index i) const {
    const Index nx = dims.x(), ny = dims.y();
    return {int(i % nx), int((i / nx) % ny), int(i / (nx * ny))};
  }

  Eigen::Vector3d to_world(const Eigen::Vector3d& voxel) const {
    return affine.topLeftCorner<3, 3>() * voxel + affine.topRightCorner<3, 1>();
  }

  /// World coordinate of the grid centre.
  Eigen::Vector3d center_world() const {
    return to_world((dims.cast<double>() - Eigen::Vector3d::Ones()) / 2.0);
  }

  /// Throws GeometryError when any invariant is broken.
  void validate() const;

  /// Same dims, spacing within 1e-6 relative and affine within 1e-6 mm.
  bool matches(const Geometry& other) const;
};

/// Dense scalar 3D grid, x-fastest.
template <typename Scalar>
class Volume {
 public:
  using scalar_type = Scalar;
  using Data = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Volume() : data_(Data::Zero(1)) {}

  explicit Volume(const Geometry& geometry, Scalar fill = Scalar(0))
      : geometry_(geometry) {
    geometry_.validate();
    data_ = Data::Constant(geometry_.voxel_count(), fill);
  }

  Volume(const Geometry& geometry, Data data)
      : geometry_(geometry), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::GeometryError,
                  "voxel data length does not match dims");
    }
  }

  const Geometry& geometry() const { return geometry_; }
  const Eigen::Vector3i& dims() const { return geometry_.dims; }
  const Eigen::Vector3d& spacing() const { return geometry_.spacing; }
  const Eigen::Matrix4d& affine() const { return geometry_.affine; }

  Data& data() { return data_; }
  const Data& data() const { return data_; }
  Index size() const { return data_.size(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }
  Scalar& operator()(int x, int y, int z) {
    return data_[geometry_.linear_index(x, y, z)];
  }
  Scalar operator()(int x, int y, int z) const {
    return data_[geometry_.linear_index(x, y, z)];
  }

 protected:
  Geometry geometry_;
  Data data_;
};

using Volume3D = Volume<float>;

enum class LabelScheme { Feta7, DrawEm9, Meta4, Subclass };

std::string_view to_string(LabelScheme scheme);
LabelScheme label_scheme_from_string(std::string_view name);

/// Integer label volume tagged with the code scheme it carries.
class LabelMap : public Volume<std::int32_t> {
 public:
  LabelMap() = default;
  LabelMap(const Geometry& geometry, LabelScheme scheme, std::int32_t fill = 0)
      : Volume<std::int32_t>(geometry, fill), scheme_(scheme) {}
  LabelMap(const Geometry& geometry, Data data, LabelScheme scheme)
      : Volume<std::int32_t>(geometry, std::move(data)), scheme_(scheme) {}

  LabelScheme scheme() const { return scheme_; }
  void set_scheme(LabelScheme scheme) { scheme_ = scheme; }

  /// Sorted set of codes present.
  std::set<std::int32_t> values() const;

  /// Throws UnknownLabel when a code falls outside the scheme's range.
  /// `max_subclass` bounds SUBCLASS maps; negative means unbounded.
  void validate_codes(std::int32_t max_subclass = -1) const;

 private:
  LabelScheme scheme_ = LabelScheme::Feta7;
};

template <typename V>
concept VolumeLike =
    std::is_base_of_v<Volume<typename V::scalar_type>, V>;

/// A zero-filled container of the same kind as `proto` on `geometry`.
template <VolumeLike V>
V blank_like(const V& proto, const Geometry& geometry) {
  if constexpr (std::is_same_v<V, LabelMap>) {
    return LabelMap(geometry, proto.scheme());
  } else {
    return V(geometry);
  }
}

inline void require_same_grid(const Geometry& a, const Geometry& b,
                              const char* what) {
  if (!a.matches(b)) {
    throw Error(ErrorCode::GeometryError,
                std::string(what) + ": geometry mismatch");
  }
}

}  // namespace drifts
