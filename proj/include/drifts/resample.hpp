#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "drifts/volume.hpp"

namespace drifts {

enum class InterpKind { NearestNeighbor, Trilinear };

// Sampling convention shared by resampling and warping: a continuous voxel
// coordinate c along an axis of n voxels is inside the field of view when
// c is in [-0.5, n - 0.5). Outside samples read 0; inside samples are
// clamped to [0, n - 1] before interpolation.
inline bool in_field_of_view(const Eigen::Vector3d& c, const Eigen::Vector3i& n) {
  return c.x() >= -0.5 && c.x() < n.x() - 0.5 && c.y() >= -0.5 &&
         c.y() < n.y() - 0.5 && c.z() >= -0.5 && c.z() < n.z() - 0.5;
}

template <typename T>
double sample_trilinear(const Volume<T>& v, const Eigen::Vector3d& c) {
  const Eigen::Vector3i& n = v.dims();
  if (!in_field_of_view(c, n)) return 0.0;
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double p = std::clamp(c[a], 0.0, double(n[a] - 1));
    if (n[a] == 1) {
      i0[a] = 0;
      f[a] = 0.0;
      continue;
    }
    i0[a] = std::min(int(std::floor(p)), n[a] - 2);
    f[a] = p - i0[a];
  }
  const Index sx = 1, sy = n.x(), sz = Index(n.x()) * n.y();
  const Index base = v.geometry().linear_index(i0[0], i0[1], i0[2]);
  const Index dx = n.x() > 1 ? sx : 0;
  const Index dy = n.y() > 1 ? sy : 0;
  const Index dz = n.z() > 1 ? sz : 0;
  const auto& d = v.data();
  const double c00 = d[base] * (1 - f[0]) + d[base + dx] * f[0];
  const double c10 = d[base + dy] * (1 - f[0]) + d[base + dy + dx] * f[0];
  const double c01 = d[base + dz] * (1 - f[0]) + d[base + dz + dx] * f[0];
  const double c11 =
      d[base + dz + dy] * (1 - f[0]) + d[base + dz + dy + dx] * f[0];
  const double c0 = c00 * (1 - f[1]) + c10 * f[1];
  const double c1 = c01 * (1 - f[1]) + c11 * f[1];
  return c0 * (1 - f[2]) + c1 * f[2];
}

template <typename T>
T sample_nearest(const Volume<T>& v, const Eigen::Vector3d& c) {
  const Eigen::Vector3i& n = v.dims();
  if (!in_field_of_view(c, n)) return T(0);
  int i[3];
  for (int a = 0; a < 3; ++a) {
    i[a] = std::clamp(int(std::lround(c[a])), 0, n[a] - 1);
  }
  return v(i[0], i[1], i[2]);
}

/// Labels always take nearest neighbour regardless of the request.
template <VolumeLike V>
constexpr InterpKind effective_interp(InterpKind requested) {
  if constexpr (std::is_integral_v<typename V::scalar_type>) {
    return InterpKind::NearestNeighbor;
  } else {
    return requested;
  }
}

template <VolumeLike V>
typename V::scalar_type sample(const V& v, const Eigen::Vector3d& c,
                               InterpKind interp) {
  using T = typename V::scalar_type;
  if (effective_interp<V>(interp) == InterpKind::NearestNeighbor) {
    return sample_nearest(v, c);
  }
  return static_cast<T>(sample_trilinear(v, c));
}

/// Samples `v` at every voxel centre of `target` through the shared world
/// frame.
template <VolumeLike V>
V resample_onto(const V& v, const Geometry& target, InterpKind interp) {
  V out = blank_like(v, target);
  const Eigen::Matrix4d to_source = v.affine().inverse() * target.affine;
  const Eigen::Matrix3d step = to_source.topLeftCorner<3, 3>();
  const Eigen::Vector3d origin = to_source.topRightCorner<3, 1>();
  const InterpKind kind = effective_interp<V>(interp);
  Index i = 0;
  for (int z = 0; z < target.dims.z(); ++z) {
    for (int y = 0; y < target.dims.y(); ++y) {
      Eigen::Vector3d c = origin + step.col(1) * y + step.col(2) * z;
      for (int x = 0; x < target.dims.x(); ++x, ++i, c += step.col(0)) {
        out[i] = sample(v, c, kind);
      }
    }
  }
  return out;
}

/// Grid with the same field of view at `target_spacing`:
/// dims = ceil(n * s / t), voxel i centred on source index (i + 0.5) t / s - 0.5.
Geometry resampled_geometry(const Geometry& source,
                            const Eigen::Vector3d& target_spacing);

template <VolumeLike V>
V resample(const V& v, const Eigen::Vector3d& target_spacing,
           InterpKind interp = InterpKind::Trilinear) {
  return resample_onto(v, resampled_geometry(v.geometry(), target_spacing),
                       interp);
}

/// Centred crop / zero pad; retained voxels keep their world coordinates.
template <VolumeLike V>
V crop_or_pad(const V& v, const Eigen::Vector3i& target_dims) {
  if ((target_dims.array() < 1).any()) {
    throw Error(ErrorCode::InvalidArgument, "crop_or_pad: dims must be >= 1");
  }
  // Truncating division keeps pad-then-crop an exact inverse for odd
  // differences.
  const Eigen::Vector3i start = (v.dims() - target_dims) / 2;
  Geometry g = v.geometry();
  g.dims = target_dims;
  g.affine.topRightCorner<3, 1>() = v.geometry().to_world(start.cast<double>());
  V out = blank_like(v, g);
  const Eigen::Vector3i& n = v.dims();
  for (int z = 0; z < target_dims.z(); ++z) {
    const int sz = z + start.z();
    if (sz < 0 || sz >= n.z()) continue;
    for (int y = 0; y < target_dims.y(); ++y) {
      const int sy = y + start.y();
      if (sy < 0 || sy >= n.y()) continue;
      for (int x = 0; x < target_dims.x(); ++x) {
        const int sx = x + start.x();
        if (sx < 0 || sx >= n.x()) continue;
        out(x, y, z) = v(sx, sy, sz);
      }
    }
  }
  return out;
}

}  // namespace drifts
