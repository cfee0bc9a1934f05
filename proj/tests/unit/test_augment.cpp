#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drifts/augment.hpp"
#include "drifts/phantom.hpp"

using namespace drifts;

namespace {

Geometry grid(const Eigen::Vector3i& n, double s = 1.0) {
  return Geometry::axis_aligned(n, Eigen::Vector3d::Constant(s));
}

Volume3D random_volume(const Eigen::Vector3i& n, unsigned seed, float lo = 0, float hi = 1) {
  Volume3D v(grid(n));
  std::mt19937 g(seed);
  std::uniform_real_distribution<float> d(lo, hi);
  for (Index i = 0; i < v.size(); ++i) v[i] = d(g);
  return v;
}

Eigen::Vector3d centroid_of(const LabelMap& lm, std::int32_t label) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double n = 0;
  for (Index i = 0; i < lm.size(); ++i)
    if (lm[i] == label) c += lm.geometry().voxel_of(i).cast<double>(), n += 1;
  return c / n;
}

}  // namespace

TEST_CASE("affine: zero ranges give identity, translation is analytic") {
  RngStream rng(1, 0, Stage::Affine);
  const AffineParams p = draw_affine(AffineRanges{}, rng);
  CHECK(compose_affine(p, Eigen::Vector3d(3, 4, 5)).isApprox(Eigen::Matrix4d::Identity(), 0));

  AffineParams t;
  t.translation = Eigen::Vector3d(10, 0, 0);
  const Eigen::Matrix4d m = compose_affine(t, Eigen::Vector3d(7, -2, 1));
  CHECK(m.topLeftCorner<3, 3>().isIdentity(0));
  CHECK(m.col(3).isApprox(Eigen::Vector4d(10, 0, 0, 1), 0));
}

TEST_CASE("affine draws stay inside their ranges") {
  const AffineRanges r{0.26, 0.2, 15.0, 0.012};
  for (std::uint64_t i = 0; i < 10000; ++i) {
    RngStream rng(3, i, Stage::Affine);
    const AffineParams p = draw_affine(r, rng);
    REQUIRE((p.rotation.array().abs() <= r.rotation).all());
    REQUIRE(((p.scale.array() >= 1 - r.scale) && (p.scale.array() <= 1 + r.scale)).all());
    REQUIRE((p.translation.array().abs() <= r.translation).all());
    REQUIRE((p.shear.array().abs() <= r.shear).all());
  }
  RngStream rng(3, 0, Stage::Affine);
  CHECK_THROWS_AS(draw_affine(AffineRanges{0, 1.5, 0, 0}, rng), Error);
}

TEST_CASE("svf: zero std gives zero displacement") {
  SvfConfig cfg;
  cfg.velocity_std = 0.0;
  RngStream rng(1, 0, Stage::Svf);
  const DeformationField f = draw_svf_deformation({24, 20, 16}, cfg, rng);
  CHECK(f.max_displacement() == 0.0);
  CHECK(f.at({3.3, 7.1, 2.0}).norm() == 0.0);
}

TEST_CASE("svf: default fields are diffeomorphic and invertible by negation") {
  const Eigen::Vector3i dims(48, 48, 48);
  SvfConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed, 0, Stage::Svf);
    const VelocityField v = draw_velocity(dims, cfg, rng);
    const DeformationField fwd = integrate_velocity(v, cfg.squaring_steps);
    const DeformationField inv = integrate_velocity(v.negated(), cfg.squaring_steps);
    CHECK(min_jacobian_determinant(fwd) > 0.0);
    CHECK(fwd.max_displacement() > 0.0);
    const DeformationField round = compose(fwd, inv);
    CHECK(round.max_displacement() < 0.1);
  }
}

TEST_CASE("control grid upsampling interpolates a linear ramp exactly") {
  const Eigen::Vector3i c(4, 4, 4), f(16, 12, 8);
  Eigen::ArrayXf coarse(64);
  for (int z = 0, i = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x, ++i) coarse[i] = float(x + 2 * y - z);
  const Eigen::ArrayXf fine = upsample_control_grid(coarse, c, f);
  REQUIRE(fine.size() == 16 * 12 * 8);
  CHECK(fine.minCoeff() >= coarse.minCoeff() - 1e-5f);
  CHECK(fine.maxCoeff() <= coarse.maxCoeff() + 1e-5f);
}

TEST_CASE("apply_transform: identity, impulse shift, label conservation") {
  const Volume3D v = random_volume({9, 8, 7}, 1);
  const Volume3D same = apply_transform(v, Eigen::Matrix4d::Identity(), nullptr);
  CHECK((same.data() == v.data()).all());
  const DeformationField zero = DeformationField::zero(v.dims(), {5, 4, 4});
  CHECK((apply_transform(v, Eigen::Matrix4d::Identity(), &zero).data() == v.data()).all());

  Volume3D spike(grid({12, 12, 12}, 2.0));
  spike(5, 6, 7) = 1.0f;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topRightCorner<3, 1>() = Eigen::Vector3d(4.0, 0.0, -2.0);  // mm, i.e. (2, 0, -1) voxels
  const Volume3D moved = apply_transform(spike, t, nullptr);
  // Backward warp: out(o) = in(o + t), so the spike lands at s - t.
  CHECK(moved(3, 6, 8) == 1.0f);
  CHECK(moved.data().sum() == 1.0f);

  LabelMap lm(grid({16, 16, 16}), LabelScheme::Feta7);
  for (Index i = 0; i < lm.size(); ++i) lm[i] = std::int32_t((i / 7) % 4) * 2;
  RngStream rng(4, 0, Stage::Svf);
  const DeformationField f = draw_svf_deformation(lm.dims(), SvfConfig{}, rng);
  AffineParams p;
  p.rotation = Eigen::Vector3d(0.2, -0.1, 0.15);
  const LabelMap w =
      apply_transform(lm, compose_affine(p, lm.geometry().center_world()), &f, InterpKind::Trilinear);
  for (std::int32_t x : w.values()) CHECK((x == 0 || x == 2 || x == 4 || x == 6));
}

TEST_CASE("bias field") {
  const Volume3D v = random_volume({16, 16, 16}, 2);
  RngStream r0(1, 0, Stage::BiasField);
  CHECK((apply_bias_field(v, BiasConfig{4, 0.0}, r0).data() == v.data()).all());

  const Geometry g = grid({8, 8, 8});
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RngStream r(2, i, Stage::BiasField);
    REQUIRE(draw_bias_field(g, BiasConfig{}, r).data().minCoeff() > 0.0f);
  }

  Volume3D holes = v;
  for (Index i = 0; i < holes.size(); i += 3) holes[i] = 0.0f;
  RngStream r1(3, 0, Stage::BiasField);
  const Volume3D b = apply_bias_field(holes, BiasConfig{}, r1);
  for (Index i = 0; i < holes.size(); i += 3) CHECK(b[i] == 0.0f);
}

TEST_CASE("gamma contrast") {
  const Volume3D v = random_volume({8, 8, 8}, 3);
  const Volume3D one = gamma_contrast(v, 1.0);
  for (Index i = 0; i < v.size(); ++i) CHECK(one[i] == doctest::Approx(v[i]).epsilon(1e-6));

  Volume3D three(grid({3, 1, 1}));
  three[0] = 0.0f, three[1] = 0.5f, three[2] = 1.0f;
  const Volume3D sq = gamma_contrast(three, 2.0);
  CHECK(sq[0] == 0.0f);
  CHECK(sq[1] == doctest::Approx(0.25));
  CHECK(sq[2] == doctest::Approx(1.0));

  CHECK_THROWS_AS(gamma_contrast(v, 0.0), Error);
  CHECK_THROWS_AS(gamma_contrast(v, -1.0), Error);

  const Volume3D wide = random_volume({10, 10, 10}, 4, 0, 255);
  std::vector<Index> order(std::size_t(wide.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return wide[a] < wide[b]; });
  for (double g : {0.3, 0.7, 1.9, 4.0}) {
    const Volume3D out = gamma_contrast(wide, g);
    for (std::size_t k = 1; k < order.size(); ++k) REQUIRE(out[order[k - 1]] <= out[order[k]]);
  }
}

TEST_CASE("noise and blur") {
  const Volume3D v = random_volume({10, 10, 10}, 5);
  const RngStream s(1, 0, Stage::NoiseVoxels);
  CHECK((add_gaussian_noise(v, 0.0, s).data() == v.data()).all());
  CHECK((gaussian_blur(v, 0.0).data() == v.data()).all());

  Volume3D flat(grid({40, 40, 40}), 2.5f);
  const Volume3D b = gaussian_blur(flat, 1.5);
  double interior = 0;
  int n = 0;
  for (int z = 10; z < 30; ++z)
    for (int y = 10; y < 30; ++y)
      for (int x = 10; x < 30; ++x) interior += b(x, y, z), ++n;
  CHECK(std::abs(interior / n - 2.5) < 1e-6);

  Volume3D big(grid({256, 256, 256}), 1.0f);
  const Volume3D noisy = add_gaussian_noise(big, 0.1, RngStream(2, 0, Stage::NoiseVoxels));
  const Eigen::ArrayXd d = (noisy.data() - big.data()).cast<double>();
  const double sd = std::sqrt((d - d.mean()).square().mean());
  CHECK(sd == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("resolution simulation") {
  const Volume3D v = random_volume({12, 12, 12}, 6);
  const Volume3D same = simulate_resolution(v, v.spacing());
  for (Index i = 0; i < v.size(); ++i) CHECK(same[i] == doctest::Approx(v[i]).epsilon(1e-6));

  Volume3D flat(grid({16, 16, 16}), 4.0f);
  const Volume3D lo = simulate_resolution(flat, Eigen::Vector3d(1.0, 1.0, 4.0));
  for (Index i = 0; i < lo.size(); ++i) CHECK(lo[i] == doctest::Approx(4.0).epsilon(1e-5));

  CHECK(slice_profile_sigma_mm(1.0, 1.0) == 0.0);
  CHECK(slice_profile_sigma_mm(0.5, 1.0) == 0.0);
  CHECK(slice_profile_sigma_mm(4.0, 1.0) == doctest::Approx(3.0 / 2.3548));

  // Impulse response along the slice axis: FWHM near thickness / source spacing.
  // The system is shift-variant, so the response is averaged over spike
  // positions spanning one low-resolution sample, each aligned on the spike.
  for (double thickness : {3.0, 4.0, 4.5}) {
    std::vector<double> prof(64, 0.0);
    const int phases = int(std::lround(2.0 * thickness));
    for (int ph = 0; ph < phases; ++ph) {
      Volume3D spike(grid({8, 8, 96}));
      spike(4, 4, 40 + ph) = 1.0f;
      const Volume3D out = simulate_resolution(spike, Eigen::Vector3d(1.0, 1.0, thickness));
      for (int z = 0; z < 64; ++z) prof[std::size_t(z)] += out(4, 4, 40 + ph + z - 32) / phases;
    }
    const auto peak = std::max_element(prof.begin(), prof.end());
    const double half = *peak / 2.0;
    const int p = int(peak - prof.begin());
    auto crossing = [&](int dir) {
      int z = p;
      while (prof[std::size_t(z + dir)] > half) z += dir;
      const double a = prof[std::size_t(z)], b = prof[std::size_t(z + dir)];
      return z + dir * (a - half) / (a - b);
    };
    const double fwhm = crossing(1) - crossing(-1);
    CHECK_MESSAGE(std::abs(fwhm - thickness) <= 0.3 * thickness, "thickness " << thickness
                                                                   << " fwhm " << fwhm);
  }
}

TEST_CASE("profiles") {
  const Subject s = make_phantom({24, 24, 24}, {1, 1, 1}, 1);
  AugmentConfig cfg;

  SUBCASE("simple with every op skipped only rescales") {
    cfg.simple_probability = 0.0;
    const auto [img, lab] = apply_profile(s.intensity, s.labels, AugmentProfile::Simple, cfg,
                                          SampleRng(1, 0));
    CHECK((img.data() == rescale_unit(s.intensity).data()).all());
    CHECK((lab.data() == s.labels.data()).all());
  }

  SUBCASE("full profile keeps image and labels on one grid") {
    ParamRecord rec;
    const auto [img, lab] = apply_profile(s.intensity, s.labels, AugmentProfile::SynthSegFull,
                                          cfg, SampleRng(2, 0), &rec);
    CHECK(img.geometry().matches(lab.geometry()));
    CHECK(img.data().minCoeff() >= 0.0f);
    CHECK(img.data().maxCoeff() <= 1.0f);
    CHECK(rec.count("gamma") == 1);
    CHECK(rec.count("resolution.spacing") == 1);
    CHECK(rec.at("svf.max_displacement")[0] <= 4.0);
  }

  SUBCASE("simple decision frequencies") {
    int counts[4] = {0, 0, 0, 0};
    const int n = 10000;
    for (std::uint64_t i = 0; i < std::uint64_t(n); ++i) {
      RngStream r(11, i, Stage::ProfileDecisions);
      const SimpleDecisions d = draw_simple_decisions(0.5, r);
      counts[0] += d.affine, counts[1] += d.gamma, counts[2] += d.noise, counts[3] += d.blur;
    }
    for (int c : counts) {
      CHECK(double(c) / n >= 0.48);
      CHECK(double(c) / n <= 0.52);
    }
  }

  SUBCASE("image and labels share the spatial transform") {
    LabelMap marker(grid({32, 32, 32}), LabelScheme::Feta7);
    Volume3D img(marker.geometry());
    for (int z = 18; z < 24; ++z)
      for (int y = 8; y < 14; ++y)
        for (int x = 10; x < 16; ++x) marker(x, y, z) = 3, img(x, y, z) = 100.0f;
    for (std::uint64_t i = 0; i < 5; ++i) {
      const SpatialTransform t =
          draw_spatial(marker.geometry(), AugmentProfile::SynthSegFull, cfg, SampleRng(5, i));
      const LabelMap wl = apply_spatial(marker, t, InterpKind::NearestNeighbor);
      const Volume3D wi = apply_spatial(img, t);
      LabelMap bright(marker.geometry(), LabelScheme::Feta7);
      for (Index k = 0; k < wi.size(); ++k) bright[k] = wi[k] > 50.0f ? 3 : 0;
      CHECK((centroid_of(wl, 3) - centroid_of(bright, 3)).norm() < 1.0);
    }
  }
}

TEST_CASE("rescale_unit") {
  Volume3D v(grid({4, 1, 1}));
  v[0] = -2, v[1] = 0, v[2] = 2, v[3] = 6;
  const Volume3D r = rescale_unit(v);
  CHECK(r[0] == 0.0f);
  CHECK(r[3] == 1.0f);
  CHECK(r[2] == doctest::Approx(0.5));
  const Volume3D flat(grid({3, 3, 3}), 7.0f);
  CHECK(rescale_unit(flat).data().maxCoeff() == 0.0f);
}
