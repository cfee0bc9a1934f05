#pragma once

#include <optional>
#include <utility>

#include <Eigen/Core>
#include <Eigen/LU>

#include "drifts/resample.hpp"
#include "drifts/rng.hpp"
#include "drifts/types.hpp"
#include "drifts/volume.hpp"

namespace drifts {

// ---------------------------------------------------------------- affine --

/// Symmetric half-widths: rotation ~ U(-r, r) rad, scale ~ U(1-s, 1+s),
/// translation ~ U(-t, t) mm, each of the six shears ~ U(-h, h).
struct AffineRanges {
  double rotation = 0.0;
  double scale = 0.0;
  double translation = 0.0;
  double shear = 0.0;

  friend bool operator==(const AffineRanges&, const AffineRanges&) = default;
};

struct AffineParams {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();  // rad about x, y, z
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // mm
  Eigen::Matrix<double, 6, 1> shear = Eigen::Matrix<double, 6, 1>::Zero();  // xy xz yx yz zx zy
};

AffineParams draw_affine(const AffineRanges& ranges, RngStream& rng);

/// World-space matrix T * R * Sh * Sc applied about `center` (mm).
Eigen::Matrix4d compose_affine(const AffineParams& params, const Eigen::Vector3d& center);

// ----------------------------------------------------- diffeomorphic SVF --

struct SvfConfig {
  int control_points = 10;       // per axis
  double velocity_std = 0.75;    // volume voxels
  int squaring_steps = 7;
  int field_downsample = 2;      // integration grid = ceil(dims / this)
};

/// Dense displacement on an integration grid covering the volume's field of
/// view (corner aligned). Displacements are stored in volume-voxel units and
/// read back with trilinear interpolation.
class DeformationField {
 public:
  DeformationField() = default;
  DeformationField(const Eigen::Vector3i& volume_dims, const Eigen::Vector3i& grid_dims,
                   Eigen::Matrix3Xf displacement);

  static DeformationField zero(const Eigen::Vector3i& volume_dims,
                               const Eigen::Vector3i& grid_dims);

  const Eigen::Vector3i& volume_dims() const { return volume_dims_; }
  const Eigen::Vector3i& grid_dims() const { return grid_dims_; }
  const Eigen::Matrix3Xf& displacement() const { return displacement_; }

  /// Volume voxels per grid voxel along each axis.
  Eigen::Vector3d grid_step() const {
    return volume_dims_.cast<double>().cwiseQuotient(grid_dims_.cast<double>());
  }

  /// Displacement (volume voxels) at a continuous volume-voxel coordinate.
  Eigen::Vector3d at(const Eigen::Vector3d& voxel) const;

  /// Largest displacement norm over grid nodes, in volume voxels.
  double max_displacement() const;

 private:
  Eigen::Vector3i volume_dims_{1, 1, 1};
  Eigen::Vector3i grid_dims_{1, 1, 1};
  Eigen::Matrix3Xf displacement_ = Eigen::Matrix3Xf::Zero(3, 1);
};

/// Stationary velocity on the integration grid, in volume-voxel units.
struct VelocityField {
  Eigen::Vector3i volume_dims{1, 1, 1};
  Eigen::Vector3i grid_dims{1, 1, 1};
  Eigen::Matrix3Xf velocity;

  VelocityField negated() const { return {volume_dims, grid_dims, -velocity}; }
};

Eigen::Vector3i integration_grid_dims(const Eigen::Vector3i& volume_dims, const SvfConfig& cfg);

/// i.i.d. N(0, velocity_std) per component on the control grid, trilinearly
/// upsampled onto the integration grid.
VelocityField draw_velocity(const Eigen::Vector3i& volume_dims, const SvfConfig& cfg,
                            RngStream& rng);

/// Scaling and squaring: exp(v) with `steps` self-compositions.
DeformationField integrate_velocity(const VelocityField& v, int steps);

DeformationField draw_svf_deformation(const Eigen::Vector3i& volume_dims,
                                      const SvfConfig& cfg, RngStream& rng);

/// x -> x + first(x) + second(x + first(x)), on `first`'s grid.
DeformationField compose(const DeformationField& first, const DeformationField& second);

/// Minimum of det(I + grad u) over grid nodes (central differences inside,
/// one-sided at the border).
double min_jacobian_determinant(const DeformationField& field);

/// Trilinear upsampling of a control grid onto `fine` (corner aligned,
/// edge extended).
Eigen::ArrayXf upsample_control_grid(const Eigen::ArrayXf& coarse,
                                     const Eigen::Vector3i& coarse_dims,
                                     const Eigen::Vector3i& fine_dims);

// ------------------------------------------------------------- warping --

/// Backward warp: output voxel o samples the input at
/// A^-1 * M * A * (o + u(o)), where A is the volume affine and M the world
/// transform. Labels are always sampled nearest-neighbour; outside the field
/// of view reads 0.
template <VolumeLike V>
V apply_transform(const V& v, const Eigen::Matrix4d& world_transform,
                  const DeformationField* field,
                  InterpKind interp = InterpKind::Trilinear) {
  if (field != nullptr && field->volume_dims() != v.dims()) {
    throw Error(ErrorCode::GeometryError, "apply_transform: field does not match volume");
  }
  const Eigen::Matrix4d voxel_map =
      v.affine().inverse() * world_transform * v.affine();
  const Eigen::Matrix3d lin = voxel_map.topLeftCorner<3, 3>();
  const Eigen::Vector3d off = voxel_map.topRightCorner<3, 1>();
  const InterpKind kind = effective_interp<V>(interp);
  V out = blank_like(v, v.geometry());
  const Eigen::Vector3i& n = v.dims();
  Index i = 0;
  for (int z = 0; z < n.z(); ++z) {
    for (int y = 0; y < n.y(); ++y) {
      for (int x = 0; x < n.x(); ++x, ++i) {
        Eigen::Vector3d p(x, y, z);
        if (field != nullptr) p += field->at(p);
        out[i] = sample(v, lin * p + off, kind);
      }
    }
  }
  return out;
}

// -------------------------------------------------- intensity corruption --

struct BiasConfig {
  int control_points = 4;
  double std = 0.3;
};

/// exp of a trilinearly upsampled N(0, std) control grid; strictly positive.
Volume3D draw_bias_field(const Geometry& geometry, const BiasConfig& cfg, RngStream& rng);

Volume3D apply_bias_field(const Volume3D& v, const BiasConfig& cfg, RngStream& rng);

/// Min-max normalise, raise to `gamma`, map back to the original range.
Volume3D gamma_contrast(const Volume3D& v, double gamma);

/// i.i.d. additive N(0, sigma); voxel i uses the i-th normal of `stream`.
Volume3D add_gaussian_noise(const Volume3D& v, double sigma, const RngStream& stream);

/// Separable Gaussian with per-axis sigma in mm; kernels truncated at 3 sigma
/// and renormalised, borders replicate the edge voxel.
Volume3D gaussian_blur(const Volume3D& v, const Eigen::Vector3d& sigma_mm);
Volume3D gaussian_blur(const Volume3D& v, double sigma_mm);

/// Min-max rescale to [0, 1]; a constant volume maps to 0.
Volume3D rescale_unit(const Volume3D& v);

// ---------------------------------------------------- resolution change --

struct ResolutionSimConfig {
  Range in_plane{0.5, 1.5};   // mm
  Range thickness{3.0, 4.5};  // mm
  int slice_axis = -1;        // -1 draws the axis
};

struct ResolutionDraw {
  Eigen::Vector3d target_spacing = Eigen::Vector3d::Ones();
  int slice_axis = 2;
};

ResolutionDraw draw_resolution(const Geometry& geometry, const ResolutionSimConfig& cfg,
                               RngStream& rng);

/// Blur with FWHM = target - source per axis, downsample to `target_spacing`,
/// then resample back onto the source grid (both trilinear). Targets below
/// the source spacing are raised to it.
Volume3D simulate_resolution(const Volume3D& v, const Eigen::Vector3d& target_spacing);

Volume3D simulate_resolution(const Volume3D& v, const ResolutionSimConfig& cfg,
                             RngStream& rng, ResolutionDraw* drawn = nullptr);

/// FWHM-matched blur sigma (mm) for simulating `target` on a `source` grid.
double slice_profile_sigma_mm(double target, double source);

// ------------------------------------------------------------ profiles --

enum class AugmentProfile { SynthSegFull, Simple };

struct AugmentConfig {
  // SynthSeg-style full profile
  AffineRanges affine{0.26, 0.2, 0.0, 0.012};
  SvfConfig svf;
  BiasConfig bias;
  Range gamma{0.5, 2.0};
  Range noise_sigma{0.0, 0.05};  // in units of the image maximum
  ResolutionSimConfig resolution;

  // "simple" profile
  AffineRanges simple_affine{0.2, 0.1, 30.0, 0.1};
  Range simple_gamma{0.5, 1.5};
  double simple_noise_sigma = 0.1;
  Range simple_blur_sigma{0.5, 1.5};  // voxels
  double simple_probability = 0.5;
};

struct SimpleDecisions {
  bool affine = false;
  bool gamma = false;
  bool noise = false;
  bool blur = false;
};

SimpleDecisions draw_simple_decisions(double probability, RngStream& rng);

struct SpatialTransform {
  Eigen::Matrix4d affine = Eigen::Matrix4d::Identity();
  std::optional<DeformationField> field;
};

SpatialTransform draw_spatial(const Geometry& geometry, AugmentProfile profile,
                              const AugmentConfig& cfg, const SampleRng& rng,
                              ParamRecord* record = nullptr);

template <VolumeLike V>
V apply_spatial(const V& v, const SpatialTransform& t,
                InterpKind interp = InterpKind::Trilinear) {
  return apply_transform(v, t.affine, t.field ? &*t.field : nullptr, interp);
}

/// Bias/gamma/noise (full) or gamma/noise/blur (simple). The result is in
/// units of the image maximum once noise has been considered.
Volume3D corrupt_intensities(const Volume3D& image, AugmentProfile profile,
                             const AugmentConfig& cfg, const SampleRng& rng,
                             ParamRecord* record = nullptr);

/// Resolution simulation for the full profile; identity for simple.
Volume3D simulate_acquisition(const Volume3D& image, AugmentProfile profile,
                              const AugmentConfig& cfg, const SampleRng& rng,
                              ParamRecord* record = nullptr);

/// Spatial + intensity chain for an existing (image, labels) pair, ending
/// with a [0, 1] rescale.
std::pair<Volume3D, LabelMap> apply_profile(const Volume3D& image, const LabelMap& labels,
                                            AugmentProfile profile, const AugmentConfig& cfg,
                                            const SampleRng& rng,
                                            ParamRecord* record = nullptr);

std::string_view to_string(AugmentProfile profile);
AugmentProfile augment_profile_from_string(std::string_view name);

}  // namespace drifts
