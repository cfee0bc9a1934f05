#include "drifts/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "drifts/rng.hpp"

namespace drifts {

namespace {

// Weighted 1D sample: value x[i] observed c[i] times, sorted ascending.
struct WeightedSample {
  Eigen::ArrayXd x;
  Eigen::ArrayXd c;
  std::vector<Index> slot_of_value;  // input value -> row of x
};

WeightedSample exact_sample(std::span<const float> values) {
  const Index n = Index(values.size());
  std::vector<Index> order(values.size());
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] < values[b]; });
  WeightedSample s;
  s.x.resize(n);
  s.c = Eigen::ArrayXd::Ones(n);
  s.slot_of_value.resize(values.size());
  for (Index r = 0; r < n; ++r) {
    s.x[r] = values[order[r]];
    s.slot_of_value[order[r]] = r;
  }
  return s;
}

WeightedSample binned_sample(std::span<const float> values, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<double> counts(std::size_t(bins), 0.0);
  std::vector<int> bin_of(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int b = hi > lo ? std::min(bins - 1, int((values[i] - lo) / width)) : 0;
    bin_of[i] = b;
    counts[std::size_t(b)] += 1.0;
  }
  std::vector<Index> row_of_bin(std::size_t(bins), -1);
  Index rows = 0;
  for (int b = 0; b < bins; ++b) {
    if (counts[std::size_t(b)] > 0) row_of_bin[std::size_t(b)] = rows++;
  }
  WeightedSample s;
  s.x.resize(rows);
  s.c.resize(rows);
  for (int b = 0; b < bins; ++b) {
    const Index r = row_of_bin[std::size_t(b)];
    if (r < 0) continue;
    s.x[r] = hi > lo ? lo + (b + 0.5) * width : lo;
    s.c[r] = counts[std::size_t(b)];
  }
  s.slot_of_value.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.slot_of_value[i] = row_of_bin[std::size_t(bin_of[i])];
  }
  return s;
}

struct Params {
  Eigen::ArrayXd mean, var, weight;
};

struct Moments {
  Eigen::ArrayXd s0, s1, s2;  // about the current means
  double log_likelihood = 0.0;
};

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Moments expectation(const WeightedSample& s, const Params& p) {
  const Index k = p.mean.size();
  Moments m;
  m.s0 = Eigen::ArrayXd::Zero(k);
  m.s1 = Eigen::ArrayXd::Zero(k);
  m.s2 = Eigen::ArrayXd::Zero(k);
  const Eigen::ArrayXd log_norm =
      p.weight.log() - 0.5 * (kLog2Pi + p.var.log());
  const Eigen::ArrayXd inv_two_var = 0.5 / p.var;
  Eigen::ArrayXd logp(k), dev(k), e(k), r(k);
  long double ll = 0.0L;
  for (Index i = 0; i < s.x.size(); ++i) {
    dev = s.x[i] - p.mean;
    logp = log_norm - dev.square() * inv_two_var;
    const double top = logp.maxCoeff();
    e = (logp - top).exp();
    const double total = e.sum();
    ll += static_cast<long double>(s.c[i]) * (top + std::log(total));
    r = e * (s.c[i] / total);
    m.s0 += r;
    m.s1 += r * dev;
    m.s2 += r * dev.square();
  }
  m.log_likelihood = static_cast<double>(ll);
  return m;
}

void maximization(const Moments& m, double total, double floor, Params& p) {
  for (Index j = 0; j < p.mean.size(); ++j) {
    if (!(m.s0[j] > 0.0)) {
      p.weight[j] = 0.0;
      continue;
    }
    const double shift = m.s1[j] / m.s0[j];
    p.mean[j] += shift;
    p.var[j] = std::max(floor, m.s2[j] / m.s0[j] - shift * shift);
    p.weight[j] = m.s0[j] / total;
  }
}

}  // namespace

EmResult em_cluster(std::span<const float> values, int k, std::uint64_t seed,
                    const EmOptions& options) {
  if (values.empty()) throw Error(ErrorCode::EmptyMask, "em_cluster: empty mask");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "em_cluster: k must be >= 1");
  if (std::size_t(k) > values.size()) {
    throw Error(ErrorCode::TooFewVoxels, "em_cluster: k exceeds the number of voxels");
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "em_cluster: non-finite intensity");
    }
  }

  const WeightedSample s = options.histogram_bins > 0
                               ? binned_sample(values, options.histogram_bins)
                               : exact_sample(values);
  const double total = s.c.sum();
  const double sample_mean = (s.c * s.x).sum() / total;
  const double sample_var = (s.c * (s.x - sample_mean).square()).sum() / total;
  const double floor =
      sample_var > 0.0
          ? options.variance_floor_ratio * sample_var
          : 1e-12 * std::max(1.0, sample_mean * sample_mean);

  Params p;
  p.mean.resize(k);
  p.var = Eigen::ArrayXd::Constant(k, std::max(sample_var, floor));
  p.weight = Eigen::ArrayXd::Constant(k, 1.0 / k);
  {
    // Weighted quantiles: first row whose cumulative count exceeds q * N.
    Index row = 0;
    double cumulative = s.c[0];
    for (int j = 0; j < k; ++j) {
      const double target = (j + 0.5) / k * total;
      while (cumulative <= target && row + 1 < s.x.size()) {
        cumulative += s.c[++row];
      }
      p.mean[j] = s.x[row];
    }
    RngStream jitter(seed, 0, Stage::Partition);
    const double step = 1e-3 * std::max(std::sqrt(sample_var),
                                        1e-9 * std::max(1.0, std::abs(sample_mean)));
    for (int j = 1; j < k; ++j) {
      if (p.mean[j] <= p.mean[j - 1]) {
        p.mean[j] = p.mean[j - 1] + step * (1.0 + jitter.uniform01());
      }
    }
  }

  GmmFit fit;
  fit.k = k;
  fit.variance_floor = floor;
  Moments m = expectation(s, p);
  fit.log_likelihood_trace.push_back(m.log_likelihood);
  for (int it = 0; it < options.max_iterations; ++it) {
    maximization(m, total, floor, p);
    const double previous = m.log_likelihood;
    m = expectation(s, p);
    fit.log_likelihood_trace.push_back(m.log_likelihood);
    fit.iterations = it + 1;
    const double change = std::abs(m.log_likelihood - previous);
    if (change < options.tolerance * std::max(std::abs(previous), 1e-300)) {
      fit.converged = true;
      break;
    }
  }
  fit.log_likelihood = m.log_likelihood;

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return p.mean[a] < p.mean[b]; });
  std::vector<int> rank_of(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    rank_of[std::size_t(order[std::size_t(r)])] = r;
    fit.means.push_back(p.mean[order[std::size_t(r)]]);
    fit.variances.push_back(p.var[order[std::size_t(r)]]);
    fit.weights.push_back(p.weight[order[std::size_t(r)]]);
  }

  // Hard assignment per distinct row, then per input value.
  std::vector<int> row_label(static_cast<std::size_t>(s.x.size()));
  const Eigen::ArrayXd log_norm = p.weight.log() - 0.5 * (kLog2Pi + p.var.log());
  Eigen::ArrayXd logp(k);
  for (Index i = 0; i < s.x.size(); ++i) {
    logp = log_norm - (s.x[i] - p.mean).square() / (2.0 * p.var);
    Index best = 0;
    logp.maxCoeff(&best);
    row_label[std::size_t(i)] = rank_of[std::size_t(best)];
  }
  EmResult result;
  result.assignment.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    result.assignment[i] = row_label[std::size_t(s.slot_of_value[i])];
  }
  result.fit = std::move(fit);
  return result;
}

EmResult em_cluster(const Volume3D& intensity, std::span<const Index> mask, int k,
                    std::uint64_t seed, const EmOptions& options) {
  std::vector<float> values(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const Index v = mask[i];
    if (v < 0 || v >= intensity.size()) {
      throw Error(ErrorCode::InvalidArgument, "em_cluster: mask index out of range");
    }
    values[i] = intensity[v];
  }
  return em_cluster(std::span<const float>(values), k, seed, options);
}

}  // namespace drifts
