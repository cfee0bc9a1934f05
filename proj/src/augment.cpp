#include "drifts/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Geometry>

namespace drifts {

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Per-axis linear interpolation taps for corner-aligned upsampling.
struct Taps {
  std::vector<int> lo;
  std::vector<float> frac;
};

Taps axis_taps(int coarse, int fine) {
  Taps t;
  t.lo.resize(std::size_t(fine));
  t.frac.resize(std::size_t(fine));
  const double ratio = double(coarse) / fine;
  for (int f = 0; f < fine; ++f) {
    const double c = std::clamp((f + 0.5) * ratio - 0.5, 0.0, double(coarse - 1));
    const int lo = coarse > 1 ? std::min(int(std::floor(c)), coarse - 2) : 0;
    t.lo[std::size_t(f)] = lo;
    t.frac[std::size_t(f)] = coarse > 1 ? float(c - lo) : 0.0f;
  }
  return t;
}

// Trilinear read of component `comp` of a 3xN field at grid coordinate g,
// clamped to the grid.
inline Eigen::Vector3d field_at(const Eigen::Matrix3Xf& f, const Eigen::Vector3i& n,
                                const Eigen::Vector3d& g) {
  int i0[3];
  int step[3];
  double w[3];
  const Index stride[3] = {1, n.x(), Index(n.x()) * n.y()};
  for (int a = 0; a < 3; ++a) {
    const double p = std::clamp(g[a], 0.0, double(n[a] - 1));
    if (n[a] == 1) {
      i0[a] = 0;
      w[a] = 0.0;
      step[a] = 0;
      continue;
    }
    i0[a] = std::min(int(p), n[a] - 2);
    w[a] = p - i0[a];
    step[a] = int(stride[a]);
  }
  const Index base = i0[0] + stride[1] * i0[1] + stride[2] * i0[2];
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int corner = 0; corner < 8; ++corner) {
    const int bx = corner & 1, by = (corner >> 1) & 1, bz = (corner >> 2) & 1;
    const double weight = (bx ? w[0] : 1 - w[0]) * (by ? w[1] : 1 - w[1]) *
                          (bz ? w[2] : 1 - w[2]);
    if (weight == 0.0) continue;
    out += weight * f.col(base + bx * step[0] + by * step[1] + bz * step[2]).cast<double>();
  }
  return out;
}

Index grid_count(const Eigen::Vector3i& n) { return Index(n.x()) * n.y() * n.z(); }

void check_positive_dims(const Eigen::Vector3i& n, const char* what) {
  if ((n.array() < 1).any()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": dims must be >= 1");
  }
}

}  // namespace

// ---------------------------------------------------------------- affine --

AffineParams draw_affine(const AffineRanges& r, RngStream& rng) {
  if (r.rotation < 0 || r.scale < 0 || r.translation < 0 || r.shear < 0) {
    throw Error(ErrorCode::InvalidRange, "affine half-widths must be >= 0");
  }
  if (r.scale >= 1.0) {
    throw Error(ErrorCode::InvalidRange, "affine scale half-width must be < 1");
  }
  AffineParams p;
  for (int a = 0; a < 3; ++a) p.rotation[a] = rng.uniform(-r.rotation, r.rotation);
  for (int a = 0; a < 3; ++a) p.scale[a] = rng.uniform(1.0 - r.scale, 1.0 + r.scale);
  for (int a = 0; a < 3; ++a) p.translation[a] = rng.uniform(-r.translation, r.translation);
  for (int a = 0; a < 6; ++a) p.shear[a] = rng.uniform(-r.shear, r.shear);
  return p;
}

Eigen::Matrix4d compose_affine(const AffineParams& p, const Eigen::Vector3d& center) {
  const Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(p.rotation.z(), Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(p.rotation.y(), Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(p.rotation.x(), Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  Eigen::Matrix3d shear;
  shear << 1.0, p.shear[0], p.shear[1],
           p.shear[2], 1.0, p.shear[3],
           p.shear[4], p.shear[5], 1.0;
  const Eigen::Matrix3d lin = rot * shear * p.scale.asDiagonal();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = lin;
  m.topRightCorner<3, 1>() = p.translation + center - lin * center;
  return m;
}

// ----------------------------------------------------- diffeomorphic SVF --

DeformationField::DeformationField(const Eigen::Vector3i& volume_dims,
                                   const Eigen::Vector3i& grid_dims,
                                   Eigen::Matrix3Xf displacement)
    : volume_dims_(volume_dims), grid_dims_(grid_dims), displacement_(std::move(displacement)) {
  check_positive_dims(volume_dims, "DeformationField");
  check_positive_dims(grid_dims, "DeformationField");
  if (displacement_.cols() != grid_count(grid_dims)) {
    throw Error(ErrorCode::GeometryError, "DeformationField: size does not match grid");
  }
}

DeformationField DeformationField::zero(const Eigen::Vector3i& volume_dims,
                                        const Eigen::Vector3i& grid_dims) {
  return {volume_dims, grid_dims, Eigen::Matrix3Xf::Zero(3, grid_count(grid_dims))};
}

Eigen::Vector3d DeformationField::at(const Eigen::Vector3d& voxel) const {
  const Eigen::Vector3d h = grid_step();
  const Eigen::Vector3d g =
      (voxel + Eigen::Vector3d::Constant(0.5)).cwiseQuotient(h) - Eigen::Vector3d::Constant(0.5);
  return field_at(displacement_, grid_dims_, g);
}

double DeformationField::max_displacement() const {
  return displacement_.size() == 0 ? 0.0 : double(displacement_.colwise().norm().maxCoeff());
}

Eigen::Vector3i integration_grid_dims(const Eigen::Vector3i& volume_dims, const SvfConfig& cfg) {
  if (cfg.field_downsample < 1) {
    throw Error(ErrorCode::InvalidArgument, "svf field_downsample must be >= 1");
  }
  Eigen::Vector3i g;
  for (int a = 0; a < 3; ++a) {
    g[a] = std::max(1, (volume_dims[a] + cfg.field_downsample - 1) / cfg.field_downsample);
  }
  return g;
}

Eigen::ArrayXf upsample_control_grid(const Eigen::ArrayXf& coarse,
                                     const Eigen::Vector3i& cn, const Eigen::Vector3i& fn) {
  check_positive_dims(cn, "upsample_control_grid");
  check_positive_dims(fn, "upsample_control_grid");
  if (coarse.size() != grid_count(cn)) {
    throw Error(ErrorCode::GeometryError, "upsample_control_grid: size does not match dims");
  }
  const Taps tx = axis_taps(cn.x(), fn.x());
  const Taps ty = axis_taps(cn.y(), fn.y());
  const Taps tz = axis_taps(cn.z(), fn.z());
  const Index sy = cn.x(), sz = Index(cn.x()) * cn.y();
  const int dx = cn.x() > 1 ? 1 : 0;
  const Index dy = cn.y() > 1 ? sy : 0;
  const Index dz = cn.z() > 1 ? sz : 0;
  Eigen::ArrayXf out(grid_count(fn));
  Index i = 0;
  for (int z = 0; z < fn.z(); ++z) {
    const float wz = tz.frac[std::size_t(z)];
    for (int y = 0; y < fn.y(); ++y) {
      const float wy = ty.frac[std::size_t(y)];
      const Index row = sz * tz.lo[std::size_t(z)] + sy * ty.lo[std::size_t(y)];
      for (int x = 0; x < fn.x(); ++x, ++i) {
        const float wx = tx.frac[std::size_t(x)];
        const Index b = row + tx.lo[std::size_t(x)];
        const float c00 = coarse[b] * (1 - wx) + coarse[b + dx] * wx;
        const float c10 = coarse[b + dy] * (1 - wx) + coarse[b + dy + dx] * wx;
        const float c01 = coarse[b + dz] * (1 - wx) + coarse[b + dz + dx] * wx;
        const float c11 = coarse[b + dz + dy] * (1 - wx) + coarse[b + dz + dy + dx] * wx;
        out[i] = (c00 * (1 - wy) + c10 * wy) * (1 - wz) + (c01 * (1 - wy) + c11 * wy) * wz;
      }
    }
  }
  return out;
}

VelocityField draw_velocity(const Eigen::Vector3i& volume_dims, const SvfConfig& cfg,
                            RngStream& rng) {
  check_positive_dims(volume_dims, "draw_velocity");
  if (cfg.control_points < 1) {
    throw Error(ErrorCode::InvalidArgument, "svf control_points must be >= 1");
  }
  if (!(cfg.velocity_std >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "svf velocity_std must be >= 0");
  }
  const Eigen::Vector3i cn = Eigen::Vector3i::Constant(cfg.control_points);
  VelocityField v;
  v.volume_dims = volume_dims;
  v.grid_dims = integration_grid_dims(volume_dims, cfg);
  v.velocity.resize(3, grid_count(v.grid_dims));
  for (int comp = 0; comp < 3; ++comp) {
    Eigen::ArrayXf coarse(grid_count(cn));
    for (Index i = 0; i < coarse.size(); ++i) coarse[i] = float(rng.normal(0.0, cfg.velocity_std));
    v.velocity.row(comp) = upsample_control_grid(coarse, cn, v.grid_dims).matrix().transpose();
  }
  return v;
}

DeformationField integrate_velocity(const VelocityField& v, int steps) {
  if (steps < 0) throw Error(ErrorCode::InvalidArgument, "integrate_velocity: steps must be >= 0");
  const Eigen::Vector3i& n = v.grid_dims;
  if (v.velocity.cols() != grid_count(n)) {
    throw Error(ErrorCode::GeometryError, "integrate_velocity: size does not match grid");
  }
  const Eigen::Vector3d h =
      v.volume_dims.cast<double>().cwiseQuotient(n.cast<double>());
  // Work in grid units.
  Eigen::Matrix3Xf d = (h.cast<float>().cwiseInverse().asDiagonal() * v.velocity) /
                       float(std::ldexp(1.0, steps));
  Eigen::Matrix3Xf next(3, d.cols());
  for (int s = 0; s < steps; ++s) {
    Index i = 0;
    for (int z = 0; z < n.z(); ++z) {
      for (int y = 0; y < n.y(); ++y) {
        for (int x = 0; x < n.x(); ++x, ++i) {
          const Eigen::Vector3d u = d.col(i).cast<double>();
          const Eigen::Vector3d g = Eigen::Vector3d(x, y, z) + u;
          next.col(i) = (u + field_at(d, n, g)).cast<float>();
        }
      }
    }
    d.swap(next);
  }
  return {v.volume_dims, n, h.cast<float>().asDiagonal() * d};
}

DeformationField draw_svf_deformation(const Eigen::Vector3i& volume_dims, const SvfConfig& cfg,
                                      RngStream& rng) {
  return integrate_velocity(draw_velocity(volume_dims, cfg, rng), cfg.squaring_steps);
}

DeformationField compose(const DeformationField& first, const DeformationField& second) {
  if (first.volume_dims() != second.volume_dims()) {
    throw Error(ErrorCode::GeometryError, "compose: fields cover different volumes");
  }
  const Eigen::Vector3i& n = first.grid_dims();
  const Eigen::Vector3d h = first.grid_step();
  Eigen::Matrix3Xf out(3, grid_count(n));
  Index i = 0;
  for (int z = 0; z < n.z(); ++z) {
    for (int y = 0; y < n.y(); ++y) {
      for (int x = 0; x < n.x(); ++x, ++i) {
        const Eigen::Vector3d p =
            (Eigen::Vector3d(x, y, z) + Eigen::Vector3d::Constant(0.5)).cwiseProduct(h) -
            Eigen::Vector3d::Constant(0.5);
        const Eigen::Vector3d u1 = first.displacement().col(i).cast<double>();
        out.col(i) = (u1 + second.at(p + u1)).cast<float>();
      }
    }
  }
  return {first.volume_dims(), n, std::move(out)};
}

double min_jacobian_determinant(const DeformationField& field) {
  const Eigen::Vector3i& n = field.grid_dims();
  const Eigen::Vector3d h = field.grid_step();
  const Eigen::Matrix3Xf& u = field.displacement();
  const Index stride[3] = {1, n.x(), Index(n.x()) * n.y()};
  double best = std::numeric_limits<double>::infinity();
  Index i = 0;
  for (int z = 0; z < n.z(); ++z) {
    for (int y = 0; y < n.y(); ++y) {
      for (int x = 0; x < n.x(); ++x, ++i) {
        const int pos[3] = {x, y, z};
        Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
        for (int a = 0; a < 3; ++a) {
          if (n[a] == 1) continue;
          const Index lo = pos[a] > 0 ? i - stride[a] : i;
          const Index hi = pos[a] < n[a] - 1 ? i + stride[a] : i;
          const double span = double((hi - lo) / stride[a]) * h[a];
          jac.col(a) += (u.col(hi) - u.col(lo)).cast<double>() / span;
        }
        best = std::min(best, jac.determinant());
      }
    }
  }
  return best;
}

// -------------------------------------------------- intensity corruption --

Volume3D draw_bias_field(const Geometry& geometry, const BiasConfig& cfg, RngStream& rng) {
  if (cfg.control_points < 1) {
    throw Error(ErrorCode::InvalidArgument, "bias control_points must be >= 1");
  }
  if (!(cfg.std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bias std must be >= 0");
  const Eigen::Vector3i cn = Eigen::Vector3i::Constant(cfg.control_points);
  Eigen::ArrayXf coarse(grid_count(cn));
  for (Index i = 0; i < coarse.size(); ++i) coarse[i] = float(rng.normal(0.0, cfg.std));
  return Volume3D(geometry, upsample_control_grid(coarse, cn, geometry.dims).exp());
}

Volume3D apply_bias_field(const Volume3D& v, const BiasConfig& cfg, RngStream& rng) {
  const Volume3D field = draw_bias_field(v.geometry(), cfg, rng);
  return Volume3D(v.geometry(), v.data() * field.data());
}

Volume3D gamma_contrast(const Volume3D& v, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidGamma, "gamma must be a finite value > 0");
  }
  const double lo = v.data().minCoeff();
  const double hi = v.data().maxCoeff();
  if (!(hi > lo)) return v;
  Volume3D out(v.geometry());
  const double range = hi - lo;
  for (Index i = 0; i < v.size(); ++i) {
    const double t = std::clamp((v[i] - lo) / range, 0.0, 1.0);
    out[i] = float(lo + range * std::pow(t, gamma));
  }
  return out;
}

Volume3D add_gaussian_noise(const Volume3D& v, double sigma, const RngStream& stream) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (sigma == 0.0) return v;
  Volume3D out(v.geometry());
  for (Index i = 0; i < v.size(); ++i) {
    out[i] = float(v[i] + sigma * stream.gaussian_at(std::uint64_t(i)));
  }
  return out;
}

Volume3D gaussian_blur(const Volume3D& v, const Eigen::Vector3d& sigma_mm) {
  if ((sigma_mm.array() < 0.0).any() || !sigma_mm.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "blur sigma must be >= 0");
  }
  Volume3D out = v;
  const Eigen::Vector3i& n = v.dims();
  const Index stride[3] = {1, n.x(), Index(n.x()) * n.y()};
  for (int a = 0; a < 3; ++a) {
    const double s = sigma_mm[a] / v.spacing()[a];
    if (s <= 0.0 || n[a] == 1) continue;
    const int radius = int(std::ceil(3.0 * s));
    std::vector<double> kernel(std::size_t(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      kernel[std::size_t(k + radius)] = std::exp(-0.5 * k * k / (s * s));
      total += kernel[std::size_t(k + radius)];
    }
    for (double& k : kernel) k /= total;

    const int len = n[a];
    std::vector<double> line(static_cast<std::size_t>(len));
    const int b1 = a == 0 ? 1 : 0, b2 = a == 2 ? 1 : 2;
    for (int j = 0; j < n[b2]; ++j) {
      for (int k = 0; k < n[b1]; ++k) {
        const Index base = Index(j) * stride[b2] + Index(k) * stride[b1];
        for (int t = 0; t < len; ++t) line[std::size_t(t)] = out[base + t * stride[a]];
        for (int t = 0; t < len; ++t) {
          double acc = 0.0;
          for (int q = -radius; q <= radius; ++q) {
            const int src = std::clamp(t + q, 0, len - 1);
            acc += kernel[std::size_t(q + radius)] * line[std::size_t(src)];
          }
          out[base + t * stride[a]] = float(acc);
        }
      }
    }
  }
  return out;
}

Volume3D gaussian_blur(const Volume3D& v, double sigma_mm) {
  return gaussian_blur(v, Eigen::Vector3d::Constant(sigma_mm));
}

Volume3D rescale_unit(const Volume3D& v) {
  const float lo = v.data().minCoeff();
  const float hi = v.data().maxCoeff();
  if (!(hi > lo)) return Volume3D(v.geometry(), 0.0f);
  return Volume3D(v.geometry(), (v.data() - lo) / (hi - lo));
}

// ---------------------------------------------------- resolution change --

double slice_profile_sigma_mm(double target, double source) {
  constexpr double kFwhmToSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
  return std::max(0.0, target / source - 1.0) * source / kFwhmToSigma;
}

ResolutionDraw draw_resolution(const Geometry& geometry, const ResolutionSimConfig& cfg,
                               RngStream& rng) {
  cfg.in_plane.validate("resolution in_plane");
  cfg.thickness.validate("resolution thickness");
  if (!(cfg.in_plane.lo > 0.0) || !(cfg.thickness.lo > 0.0)) {
    throw Error(ErrorCode::InvalidRange, "resolution spacings must be > 0");
  }
  if (cfg.slice_axis < -1 || cfg.slice_axis > 2) {
    throw Error(ErrorCode::InvalidArgument, "resolution slice_axis must be -1, 0, 1 or 2");
  }
  ResolutionDraw d;
  d.slice_axis = cfg.slice_axis < 0 ? rng.uniform_int(0, 2) : cfg.slice_axis;
  const double in_plane = rng.uniform(cfg.in_plane.lo, cfg.in_plane.hi);
  const double thickness = rng.uniform(cfg.thickness.lo, cfg.thickness.hi);
  for (int a = 0; a < 3; ++a) {
    d.target_spacing[a] =
        std::max(a == d.slice_axis ? thickness : in_plane, geometry.spacing[a]);
  }
  return d;
}

Volume3D simulate_resolution(const Volume3D& v, const Eigen::Vector3d& target_spacing) {
  const Eigen::Vector3d t = target_spacing.cwiseMax(v.spacing());
  Eigen::Vector3d sigma;
  for (int a = 0; a < 3; ++a) sigma[a] = slice_profile_sigma_mm(t[a], v.spacing()[a]);
  if ((sigma.array() == 0.0).all()) return v;
  const Volume3D low = resample(gaussian_blur(v, sigma), t, InterpKind::Trilinear);
  return resample_onto(low, v.geometry(), InterpKind::Trilinear);
}

Volume3D simulate_resolution(const Volume3D& v, const ResolutionSimConfig& cfg, RngStream& rng,
                             ResolutionDraw* drawn) {
  const ResolutionDraw d = draw_resolution(v.geometry(), cfg, rng);
  if (drawn != nullptr) *drawn = d;
  return simulate_resolution(v, d.target_spacing);
}

// ------------------------------------------------------------ profiles --

SimpleDecisions draw_simple_decisions(double probability, RngStream& rng) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::InvalidRange, "probability must lie in [0, 1]");
  }
  SimpleDecisions d;
  d.affine = rng.bernoulli(probability);
  d.gamma = rng.bernoulli(probability);
  d.noise = rng.bernoulli(probability);
  d.blur = rng.bernoulli(probability);
  return d;
}

namespace {

SimpleDecisions sample_decisions(const AugmentConfig& cfg, const SampleRng& rng) {
  RngStream s = rng.stream(Stage::ProfileDecisions);
  return draw_simple_decisions(cfg.simple_probability, s);
}

void record_affine(ParamRecord* record, const AffineParams& p) {
  if (record == nullptr) return;
  (*record)["affine.rotation"] = as_vector(p.rotation);
  (*record)["affine.scale"] = as_vector(p.scale);
  (*record)["affine.translation"] = as_vector(p.translation);
  (*record)["affine.shear"] = as_vector(p.shear);
}

}  // namespace

SpatialTransform draw_spatial(const Geometry& geometry, AugmentProfile profile,
                              const AugmentConfig& cfg, const SampleRng& rng,
                              ParamRecord* record) {
  SpatialTransform t;
  if (profile == AugmentProfile::SynthSegFull) {
    RngStream as = rng.stream(Stage::Affine);
    const AffineParams p = draw_affine(cfg.affine, as);
    t.affine = compose_affine(p, geometry.center_world());
    record_affine(record, p);
    RngStream ss = rng.stream(Stage::Svf);
    t.field = draw_svf_deformation(geometry.dims, cfg.svf, ss);
    if (record != nullptr) (*record)["svf.max_displacement"] = {t.field->max_displacement()};
    return t;
  }
  const SimpleDecisions d = sample_decisions(cfg, rng);
  if (record != nullptr) {
    (*record)["simple.applied"] = {double(d.affine), double(d.gamma), double(d.noise),
                                   double(d.blur)};
  }
  if (d.affine) {
    RngStream as = rng.stream(Stage::Affine);
    const AffineParams p = draw_affine(cfg.simple_affine, as);
    t.affine = compose_affine(p, geometry.center_world());
    record_affine(record, p);
  }
  return t;
}

Volume3D corrupt_intensities(const Volume3D& image, AugmentProfile profile,
                             const AugmentConfig& cfg, const SampleRng& rng,
                             ParamRecord* record) {
  auto put = [&](const char* key, double value) {
    if (record != nullptr) (*record)[key] = {value};
  };
  auto normalise_by_max = [](Volume3D v) {
    const float hi = v.data().maxCoeff();
    if (hi > 0.0f) v.data() /= hi;
    return v;
  };

  if (profile == AugmentProfile::SynthSegFull) {
    cfg.gamma.validate("gamma");
    cfg.noise_sigma.validate("noise_sigma");
    RngStream bs = rng.stream(Stage::BiasField);
    Volume3D out = apply_bias_field(image, cfg.bias, bs);
    RngStream gs = rng.stream(Stage::Gamma);
    const double gamma = std::exp(gs.uniform(std::log(cfg.gamma.lo), std::log(cfg.gamma.hi)));
    put("gamma", gamma);
    out = normalise_by_max(gamma_contrast(out, gamma));
    RngStream ns = rng.stream(Stage::Noise);
    const double sigma = ns.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
    put("noise.sigma", sigma);
    return add_gaussian_noise(out, sigma, rng.stream(Stage::NoiseVoxels));
  }

  const SimpleDecisions d = sample_decisions(cfg, rng);
  Volume3D out = image;
  if (d.gamma) {
    cfg.simple_gamma.validate("simple_gamma");
    RngStream gs = rng.stream(Stage::Gamma);
    const double gamma = gs.uniform(cfg.simple_gamma.lo, cfg.simple_gamma.hi);
    put("gamma", gamma);
    out = gamma_contrast(out, gamma);
  }
  out = normalise_by_max(std::move(out));
  if (d.noise) {
    put("noise.sigma", cfg.simple_noise_sigma);
    out = add_gaussian_noise(out, cfg.simple_noise_sigma, rng.stream(Stage::NoiseVoxels));
  }
  if (d.blur) {
    cfg.simple_blur_sigma.validate("simple_blur_sigma");
    RngStream bs = rng.stream(Stage::Blur);
    const double sigma_vox = bs.uniform(cfg.simple_blur_sigma.lo, cfg.simple_blur_sigma.hi);
    put("blur.sigma_voxels", sigma_vox);
    out = gaussian_blur(out, image.spacing() * sigma_vox);
  }
  return out;
}

Volume3D simulate_acquisition(const Volume3D& image, AugmentProfile profile,
                              const AugmentConfig& cfg, const SampleRng& rng,
                              ParamRecord* record) {
  if (profile != AugmentProfile::SynthSegFull) return image;
  RngStream rs = rng.stream(Stage::Resolution);
  ResolutionDraw d;
  Volume3D out = simulate_resolution(image, cfg.resolution, rs, &d);
  if (record != nullptr) {
    (*record)["resolution.spacing"] = as_vector(d.target_spacing);
    (*record)["resolution.slice_axis"] = {double(d.slice_axis)};
  }
  return out;
}

std::pair<Volume3D, LabelMap> apply_profile(const Volume3D& image, const LabelMap& labels,
                                            AugmentProfile profile, const AugmentConfig& cfg,
                                            const SampleRng& rng, ParamRecord* record) {
  require_same_grid(image.geometry(), labels.geometry(), "apply_profile");
  const SpatialTransform t = draw_spatial(image.geometry(), profile, cfg, rng, record);
  Volume3D warped = apply_spatial(image, t, InterpKind::Trilinear);
  LabelMap warped_labels = apply_spatial(labels, t, InterpKind::NearestNeighbor);
  warped = corrupt_intensities(warped, profile, cfg, rng, record);
  warped = simulate_acquisition(warped, profile, cfg, rng, record);
  return {rescale_unit(warped), std::move(warped_labels)};
}

std::string_view to_string(AugmentProfile profile) {
  return profile == AugmentProfile::Simple ? "simple" : "synthseg";
}

AugmentProfile augment_profile_from_string(std::string_view name) {
  if (name == "synthseg" || name == "synthseg_full") return AugmentProfile::SynthSegFull;
  if (name == "simple") return AugmentProfile::Simple;
  throw Error(ErrorCode::ConfigError, "unknown augmentation profile '" + std::string(name) + "'");
}

}  // namespace drifts
