#include "drifts/resample.hpp"

namespace drifts {

Geometry resampled_geometry(const Geometry& source,
                            const Eigen::Vector3d& target_spacing) {
  if (!(target_spacing.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument,
                "resample: target spacing components must be > 0");
  }
  Geometry g = source;
  g.spacing = target_spacing;
  Eigen::Matrix4d to_source = Eigen::Matrix4d::Identity();
  for (int a = 0; a < 3; ++a) {
    const double ratio = target_spacing[a] / source.spacing[a];
    // Guard the ceil against representation noise, e.g. 3 * 0.5 / 0.5.
    const double extent = source.dims[a] / ratio;
    g.dims[a] = std::max(1, int(std::ceil(extent - 1e-9)));
    to_source(a, a) = ratio;
    to_source(a, 3) = (ratio - 1.0) / 2.0;
  }
  g.affine = source.affine * to_source;
  return g;
}

}  // namespace drifts
