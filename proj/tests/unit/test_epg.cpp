#include <doctest.h>

#include <cmath>
#include <random>

#include "drifts/epg.hpp"
#include "../support/oracles.hpp"

using namespace drifts;

namespace {
constexpr double kHuge = 1e300;
}

TEST_CASE("CPMG limit is exp(-k ESP / T2)") {
  std::mt19937 g(3);
  std::uniform_real_distribution<double> esp_d(2.0, 15.0), t2_d(10.0, 3000.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double esp = esp_d(g), t2 = t2_d(g);
    const auto seq = EpgSequenceParams::constant(esp, 150, 180.0, esp);
    const auto e = epg_fse_echoes(kHuge, t2, seq);
    for (int k = 1; k <= 150; ++k) {
      const double expect = std::exp(-k * esp / t2);
      REQUIRE(std::abs(e[std::size_t(k - 1)] - expect) <= 1e-9 * expect);
    }
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] <= e[k - 1]);
  }
}

TEST_CASE("lossless refocusing keeps every echo at 1") {
  const auto seq = EpgSequenceParams::constant(6.12, 40, 180.0, 6.12);
  for (double a : epg_fse_echoes(kHuge, kHuge, seq)) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("production recursion equals the dense matrix oracle") {
  SUBCASE("150 degree train, T1 2000, T2 200, ESP 6.12, ETL 150") {
    const auto seq = EpgSequenceParams::constant(6.12, 150, 150.0, 90.0);
    const auto fast = epg_fse_echoes(2000.0, 200.0, seq);
    const auto slow = oracle::DenseEpg(2 * 150 + 1).echoes(2000.0, 200.0, 6.12, seq.refocusing_deg, 90.0);
    REQUIRE(fast.size() == slow.size());
    double worst = 0;
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
    CHECK(worst <= 1e-12);
  }
  SUBCASE("random draws with varying schedules") {
    std::mt19937 g(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 8; ++trial) {
      const int etl = 12 + trial;
      EpgSequenceParams seq = EpgSequenceParams::constant(3 + 10 * u(g), etl, 180.0, 10.0, 70 + 40 * u(g));
      for (double& f : seq.refocusing_deg) f = 60 + 120 * u(g);
      const double t1 = 200 + 3000 * u(g), t2 = 20 + 500 * u(g);
      const auto fast = epg_fse_echoes(t1, t2, seq);
      const auto slow =
          oracle::DenseEpg(2 * etl + 1).echoes(t1, t2, seq.esp, seq.refocusing_deg, seq.excitation_deg);
      for (std::size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) <= 1e-12);
      for (double a : fast) CHECK((a >= 0.0 && a <= 1.0 + 1e-12));
    }
  }
}

TEST_CASE("echo amplitudes are bounded by the CPMG envelope") {
  const auto seq = EpgSequenceParams::constant(6.12, 150, 150.0, 90.0);
  const auto e = epg_fse_echoes(1500.0, 120.0, seq);
  for (int k = 1; k <= 150; ++k) {
    CHECK(e[std::size_t(k - 1)] <= 1.0);
    CHECK(e[std::size_t(k - 1)] >= 0.0);
  }
}

TEST_CASE("invalid relaxometry is rejected") {
  const auto seq = EpgSequenceParams::constant(6.12, 10, 180.0, 12.0);
  CHECK_THROWS_AS(epg_fse_echoes(0.0, 50.0, seq), Error);
  CHECK_THROWS_AS(epg_fse_echoes(100.0, -1.0, seq), Error);
  try {
    epg_fse_echoes(100.0, 0.0, seq);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidRelaxometry);
  }
}

TEST_CASE("echo number rounds TE over ESP") {
  EpgSequenceParams s = EpgSequenceParams::constant(6.12, 150, 180.0, 90.0);
  CHECK(s.echo_number() == 15);
  s.te_eff = 300.0;
  CHECK(s.echo_number() == 49);
}

TEST_CASE("relaxometry sampling") {
  RelaxometryConfig cfg;
  cfg.mode = RelaxometryMode::Reference;
  cfg.reference[1] = {{900, 900}, {80, 80}, {0.7, 0.7}};
  cfg.reference[2] = {{1200, 1500}, {90, 120}, {0.8, 0.9}};
  std::map<std::int32_t, std::int32_t> keys{{1, 1}, {2, 2}, {3, 2}};
  RngStream r1(4, 0, Stage::Relaxometry), r2(4, 0, Stage::Relaxometry);
  const RelaxometryTable a = sample_relaxometry(cfg, keys, r1);
  const RelaxometryTable b = sample_relaxometry(cfg, keys, r2);
  CHECK(a.at(1).t1 == 900.0);
  CHECK(a.at(1).t2 == 80.0);
  CHECK(a.at(1).pd == 0.7);
  for (const auto& [id, t] : a) {
    CHECK(t.t1 == b.at(id).t1);
    CHECK(t.t2 == b.at(id).t2);
    CHECK(t.pd == b.at(id).pd);
  }
  CHECK(cfg.reference[2].t1.contains(a.at(3).t1));

  keys[9] = 9;
  RngStream r3(4, 0, Stage::Relaxometry);
  try {
    sample_relaxometry(cfg, keys, r3);
    FAIL("expected MissingParams");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingParams);
  }

  RelaxometryConfig rnd;
  std::map<std::int32_t, std::int32_t> one{{1, 1}};
  int warned = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    RngStream r(5, i, Stage::Relaxometry);
    std::vector<std::string> w;
    const TissueRelaxometry t = sample_relaxometry(rnd, one, r, &w).at(1);
    REQUIRE(rnd.randomized.t1.contains(t.t1));
    REQUIRE(rnd.randomized.t2.contains(t.t2));
    REQUIRE(rnd.randomized.pd.contains(t.pd));
    warned += !w.empty();
  }
  CHECK(warned > 0);  // T2 > T1 is possible and only warned about
}

TEST_CASE("EPG volume rendering") {
  LabelMap ids(Geometry::axis_aligned({4, 4, 4}, {1, 1, 1}), LabelScheme::Subclass);
  for (Index i = 0; i < ids.size(); ++i) ids[i] = i < 16 ? 0 : 1;
  const auto seq = EpgSequenceParams::constant(6.12, 150, 180.0, 92.0);
  RelaxometryTable t{{1, {kHuge, 150.0, 0.6}}};
  const Volume3D v = render_epg_volume(ids, t, seq);
  const double expect = 0.6 * std::exp(-seq.echo_number() * 6.12 / 150.0);
  for (Index i = 0; i < v.size(); ++i) {
    if (i < 16) {
      CHECK(v[i] == 0.0f);
    } else {
      CHECK(v[i] == doctest::Approx(expect).epsilon(1e-6));
    }
  }

  // Long T2 (CSF-like) is brighter than short T2 (WM-like) at equal weight.
  for (double te : {12.24, 90.0, 300.0}) {
    const auto s = EpgSequenceParams::constant(6.12, 150, 160.0, te);
    LabelMap two = ids;
    for (Index i = 0; i < two.size(); ++i) two[i] = 1 + (i % 2);
    const Volume3D r = render_epg_volume(two, {{1, {4000, 2000, 1}}, {2, {800, 80, 1}}}, s);
    CHECK(r[0] > r[1]);
  }

  CHECK_THROWS_AS(render_epg_volume(ids, {}, seq), Error);
}
