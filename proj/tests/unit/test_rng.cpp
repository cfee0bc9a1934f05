#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "drifts/rng.hpp"

using namespace drifts;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{~0u, ~0u, ~0u, ~0u}, A2{~0u, ~0u}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                   A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same key replays, different keys diverge") {
  RngStream a(42, 3, Stage::Affine), b(42, 3, Stage::Affine);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t idx = 0; idx < 4; ++idx)
    for (Stage s : {Stage::Affine, Stage::Svf, Stage::Noise})
      for (std::uint32_t sub = 0; sub < 3; ++sub) {
        firsts.insert(RngStream(42, idx, s, sub).next_u64());
      }
  CHECK(firsts.size() == 36);
  CHECK(RngStream(1, 0, Stage::Affine).next_u64() != RngStream(2, 0, Stage::Affine).next_u64());
}

TEST_CASE("random access normals do not depend on order") {
  const RngStream s(7, 1, Stage::NoiseVoxels);
  std::vector<double> fwd, rev(64);
  for (std::uint64_t i = 0; i < 64; ++i) fwd.push_back(s.gaussian_at(i));
  for (std::uint64_t i = 64; i-- > 0;) rev[i] = s.gaussian_at(i);
  CHECK(fwd == rev);
}

TEST_CASE("distribution moments") {
  RngStream r(9, 0, Stage::Generic);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  int bern = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(2.0, 4.0);
    CHECK_MESSAGE((u >= 2.0 && u <= 4.0), u);
    su += u;
    const double g = r.normal(1.0, 2.0);
    sn += g;
    sn2 += g * g;
    bern += r.bernoulli(0.3);
  }
  CHECK(su / n == doctest::Approx(3.0).epsilon(0.005));
  const double mean = sn / n;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::sqrt(sn2 / n - mean * mean) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(double(bern) / n == doctest::Approx(0.3).epsilon(0.02));
  CHECK(r.uniform(5.0, 5.0) == 5.0);

  int lo = 0, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const int k = r.uniform_int(1, 9);
    REQUIRE((k >= 1 && k <= 9));
    lo += k == 1;
    hi += k == 9;
  }
  CHECK(lo > 900);
  CHECK(hi > 900);
}
