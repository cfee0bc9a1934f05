#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "drifts/metrics.hpp"
#include "../support/oracles.hpp"

using namespace drifts;

namespace {

LabelMap blank(int n = 16) {
  return LabelMap(Geometry::axis_aligned({n, n, n}, {1, 1, 1}), LabelScheme::Feta7);
}

// Blobby random label map: a few random boxes per label.
LabelMap random_map(std::mt19937& g, int n = 16) {
  LabelMap lm = blank(n);
  std::uniform_int_distribution<int> pos(0, n - 1), len(1, n / 2), lab(1, 7);
  for (int b = 0; b < 12; ++b) {
    const int l = lab(g);
    const int x0 = pos(g), y0 = pos(g), z0 = pos(g);
    const int lx = len(g), ly = len(g), lz = len(g);
    for (int z = z0; z < std::min(n, z0 + lz); ++z)
      for (int y = y0; y < std::min(n, y0 + ly); ++y)
        for (int x = x0; x < std::min(n, x0 + lx); ++x) lm(x, y, z) = l;
  }
  return lm;
}

}  // namespace

TEST_CASE("dice by hand") {
  LabelMap a = blank(), b = blank();
  CHECK(dice(a, b, 3) == 1.0);  // both empty
  a[0] = a[1] = a[2] = a[3] = 3;
  b[1] = b[2] = b[3] = b[4] = b[5] = b[6] = 3;
  CHECK(dice(a, b, 3) == doctest::Approx(0.6));
  CHECK(dice(a, a, 3) == 1.0);
  LabelMap c = blank();
  c[10] = c[11] = c[12] = c[13] = 3;
  CHECK(dice(a, c, 3) == 0.0);
  CHECK(dice(a, blank(), 3) == 0.0);
}

TEST_CASE("hausdorff basics") {
  LabelMap a = blank(), b = blank();
  a(2, 4, 4) = 1;
  b(7, 4, 4) = 1;
  CHECK(*hd95(a, b, 1) == doctest::Approx(5.0));
  CHECK(*hd95(a, a, 1) == 0.0);
  CHECK(*hd95(a, b, 1, {2.0, 1.0, 1.0}) == doctest::Approx(10.0));
  CHECK_FALSE(hd95(a, blank(), 1).has_value());
}

TEST_CASE("dice and hd95 agree with brute force on random maps") {
  std::mt19937 g(12);
  for (int t = 0; t < 30; ++t) {
    const LabelMap a = random_map(g), b = random_map(g);
    const Eigen::Vector3d sp(0.8, 1.0, 1.3);
    for (std::int32_t l = 1; l <= 7; ++l) {
      CHECK(dice(a, b, l) == oracle::dice(a, b, l));
      CHECK(dice(a, b, l) == dice(b, a, l));
      const auto h = hd95(a, b, l, sp);
      const double o = oracle::hausdorff(a, b, l, 95.0, sp);
      if (o < 0) {
        CHECK_FALSE(h.has_value());
      } else {
        REQUIRE(h.has_value());
        CHECK(std::abs(*h - o) <= 1e-9);
        CHECK(*h == doctest::Approx(*hd95(b, a, l, sp)));
        CHECK(*h <= *hausdorff_percentile(a, b, l, 100.0, sp) + 1e-12);
        CHECK(std::abs(*hausdorff_percentile(a, b, l, 100.0, sp) -
                       oracle::hausdorff(a, b, l, 100.0, sp)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("hd95 is translation invariant and linear in spacing") {
  LabelMap a = blank(20), b = blank(20);
  for (int z = 3; z < 9; ++z)
    for (int y = 4; y < 10; ++y)
      for (int x = 2; x < 7; ++x) a(x, y, z) = 2;
  for (int z = 5; z < 10; ++z)
    for (int y = 3; y < 8; ++y)
      for (int x = 4; x < 11; ++x) b(x, y, z) = 2;
  LabelMap as = blank(20), bs = blank(20);
  for (int z = 0; z < 17; ++z)
    for (int y = 0; y < 17; ++y)
      for (int x = 0; x < 17; ++x) as(x + 3, y + 2, z + 1) = a(x, y, z), bs(x + 3, y + 2, z + 1) = b(x, y, z);
  const double h = *hd95(a, b, 2);
  CHECK(*hd95(as, bs, 2) == doctest::Approx(h));
  CHECK(*hd95(a, b, 2, {2.5, 2.5, 2.5}) == doctest::Approx(2.5 * h));
}

TEST_CASE("evaluate and batch reports") {
  std::mt19937 g(2);
  const LabelMap gt = random_map(g);
  LabelMap no5 = gt;
  for (Index i = 0; i < no5.size(); ++i)
    if (no5[i] == 5) no5[i] = 0;

  const EvalReport same = evaluate(gt, gt, "s");
  for (const LabelMetrics& m : same.labels) {
    CHECK(m.dice == 1.0);
    if (m.present) CHECK(*m.hd95 == 0.0);
  }

  const EvalReport r = evaluate(no5, no5, "x");
  const LabelMetrics& l5 = r.labels[4];
  CHECK(l5.label == 5);
  CHECK_FALSE(l5.present);
  CHECK(l5.dice == 1.0);
  CHECK_FALSE(l5.hd95.has_value());

  std::vector<EvalCase> cases;
  std::vector<EvalReport> single;
  for (int s = 0; s < 3; ++s) {
    LabelMap p = random_map(g), q = random_map(g);
    single.push_back(evaluate(p, q, "sub" + std::to_string(s)));
    cases.push_back({"sub" + std::to_string(s), p, q});
  }
  const BatchReport batch = batch_evaluate(cases);
  REQUIRE(batch.subjects.size() == 3);
  for (int s = 0; s < 3; ++s) {
    for (int l = 0; l < 7; ++l) {
      CHECK(batch.subjects[std::size_t(s)].labels[std::size_t(l)].dice ==
            single[std::size_t(s)].labels[std::size_t(l)].dice);
      CHECK(batch.subjects[std::size_t(s)].labels[std::size_t(l)].hd95 ==
            single[std::size_t(s)].labels[std::size_t(l)].hd95);
    }
  }
  const std::string text = format_report(batch);
  CHECK(text.rfind("subject\tlabel\tdice\thd95\n", 0) == 0);
  CHECK(text.find("summary_mean") != std::string::npos);

  const SummaryStat st = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(*st.mean == 2.5);
  CHECK(*st.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK_FALSE(summarize({1.0}).std.has_value());

  LabelMap wrong = gt;
  wrong.set_scheme(LabelScheme::Meta4);
  CHECK_THROWS_AS(evaluate(wrong, gt), Error);
}

TEST_CASE("rank-sum tests") {
  const std::vector<double> x{1, 2, 3}, y{100, 101, 102};
  CHECK(wilcoxon_rank_sum_normal(x, y) < 0.05);
  CHECK(wilcoxon_rank_sum_exact(x, y) == doctest::Approx(oracle::rank_sum_enumerated(x, y)));
  CHECK(wilcoxon_rank_sum_exact(x, y) == doctest::Approx(0.1));  // 2 of 20 assignments
  CHECK(wilcoxon_rank_sum(x, x) > 0.9);

  std::mt19937 g(6);
  std::uniform_int_distribution<int> v(0, 6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + std::size_t(t % 6), m = 1 + std::size_t((t / 6) % 6);
    std::vector<double> a(n), b(m);
    for (double& q : a) q = v(g);  // ties on purpose
    for (double& q : b) q = v(g);
    CHECK(wilcoxon_rank_sum_exact(a, b) == doctest::Approx(oracle::rank_sum_enumerated(a, b)).epsilon(1e-12));
    std::vector<double> ta = a, tb = b;
    for (double& q : ta) q = std::exp(q) - 3;
    for (double& q : tb) q = std::exp(q) - 3;
    CHECK(wilcoxon_rank_sum(a, b) == wilcoxon_rank_sum(ta, tb));
    CHECK(wilcoxon_rank_sum_normal(a, b) == wilcoxon_rank_sum_normal(ta, tb));
  }

  std::vector<double> big_a(20), big_b(25);
  for (std::size_t i = 0; i < 20; ++i) big_a[i] = double(i);
  for (std::size_t i = 0; i < 25; ++i) big_b[i] = double(i) + 7.5;
  CHECK(wilcoxon_rank_sum(big_a, big_b) == wilcoxon_rank_sum_normal(big_a, big_b));

  const auto adj = bonferroni({0.01, 0.4}, 2);
  CHECK(adj[0] == doctest::Approx(0.02));
  CHECK(adj[1] == doctest::Approx(0.8));
  CHECK(bonferroni({0.3, 0.6, 0.01})[1] == 1.0);
}
