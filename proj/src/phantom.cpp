#include "drifts/phantom.hpp"

#include <cmath>

namespace drifts {

namespace {

// Squared normalised radius of p inside an ellipsoid.
double ellipsoid(const Eigen::Vector3d& p, const Eigen::Vector3d& c, const Eigen::Vector3d& r) {
  return (p - c).cwiseQuotient(r).squaredNorm();
}

}  // namespace

Subject make_phantom(const Eigen::Vector3i& dims, const Eigen::Vector3d& spacing,
                     std::uint64_t seed, const std::string& id) {
  const Geometry g = Geometry::axis_aligned(dims, spacing);
  Subject s{id, LabelMap(g, LabelScheme::Feta7), Volume3D(g)};
  const RngStream texture(seed, 0, Stage::Phantom);

  // Unit cube coordinates in [-1, 1].
  const Eigen::Vector3d half = (dims.cast<double>() - Eigen::Vector3d::Ones()) / 2.0;
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  const Eigen::Vector3d brain(0.72, 0.80, 0.70);
  Index i = 0;
  for (int z = 0; z < dims.z(); ++z) {
    for (int y = 0; y < dims.y(); ++y) {
      for (int x = 0; x < dims.x(); ++x, ++i) {
        const Eigen::Vector3d p =
            (Eigen::Vector3d(x, y, z) - half).cwiseQuotient(half.cwiseMax(Eigen::Vector3d::Ones()));
        std::int32_t label = 0;
        double value = 0.0;
        const double rb = ellipsoid(p, zero, brain);
        if (ellipsoid(p, zero, Eigen::Vector3d(0.95, 0.97, 0.93)) > 1.0) {
          value = 0.0;
        } else if (rb > 1.0) {
          value = 70.0 + 25.0 * std::sin(6.0 * p.x()) * std::cos(5.0 * p.y());  // maternal tissue
        } else {
          // Nested shells from the outside in.
          if (rb > 0.86) {
            label = 1, value = 210.0;  // CSF
          } else if (rb > 0.62) {
            label = 2, value = 95.0;  // cortical GM
          } else {
            label = 3, value = 150.0 + 20.0 * p.z();  // WM with a smooth gradient
          }
          if (ellipsoid(p, Eigen::Vector3d(-0.18, 0.05, 0.05), Eigen::Vector3d(0.10, 0.30, 0.14)) <= 1.0 ||
              ellipsoid(p, Eigen::Vector3d(0.18, 0.05, 0.05), Eigen::Vector3d(0.10, 0.30, 0.14)) <= 1.0) {
            label = 4, value = 230.0;  // lateral ventricles
          } else if (ellipsoid(p, Eigen::Vector3d(-0.14, -0.05, -0.12), Eigen::Vector3d(0.09, 0.12, 0.10)) <= 1.0 ||
                     ellipsoid(p, Eigen::Vector3d(0.14, -0.05, -0.12), Eigen::Vector3d(0.09, 0.12, 0.10)) <= 1.0) {
            label = 6, value = 110.0;  // deep grey matter
          } else if (ellipsoid(p, Eigen::Vector3d(0.0, -0.50, -0.38), Eigen::Vector3d(0.38, 0.18, 0.20)) <= 1.0) {
            label = 5, value = 135.0;  // cerebellum
          } else if (ellipsoid(p, Eigen::Vector3d(0.0, -0.18, -0.46), Eigen::Vector3d(0.09, 0.10, 0.24)) <= 1.0) {
            label = 7, value = 125.0;  // brainstem
          }
        }
        if (value > 0.0) {
          value = std::max(1.0, value + 4.0 * texture.gaussian_at(std::uint64_t(i)));
        }
        s.labels[i] = label;
        s.intensity[i] = float(value);
      }
    }
  }
  return s;
}

}  // namespace drifts
