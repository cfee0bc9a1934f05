#include "drifts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "drifts/labels.hpp"

namespace drifts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform (Felzenszwalb & Huttenlocher) with sample
// spacing `s`; f holds squared distances, infinity where unset.
void edt_1d(const std::vector<double>& f, double s, std::vector<int>& v, std::vector<double>& z,
            std::vector<double>& out) {
  const int n = int(f.size());
  const double s2 = s * s;
  auto cut = [&](int p, int q) {
    return ((f[std::size_t(q)] + s2 * q * q) - (f[std::size_t(p)] + s2 * p * p)) /
           (2.0 * s2 * (q - p));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[std::size_t(q)] == kInf) continue;
    double c = -kInf;
    while (k >= 0) {
      c = cut(v[std::size_t(k)], q);
      if (c > z[std::size_t(k)]) break;
      --k;
    }
    ++k;
    v[std::size_t(k)] = q;
    z[std::size_t(k)] = k == 0 ? -kInf : c;
    z[std::size_t(k + 1)] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[std::size_t(j + 1)] < q) ++j;
    const int p = v[std::size_t(j)];
    const double d = s * (q - p);
    out[std::size_t(q)] = d * d + f[std::size_t(p)];
  }
}

void check_pair(const LabelMap& pred, const LabelMap& gt) {
  require_same_grid(pred.geometry(), gt.geometry(), "metrics");
}

}  // namespace

double dice(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
  check_pair(pred, gt);
  Index a = 0, b = 0, both = 0;
  for (Index i = 0; i < pred.size(); ++i) {
    const bool pa = pred[i] == label, gb = gt[i] == label;
    a += pa;
    b += gb;
    both += pa && gb;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * double(both) / double(a + b);
}

std::vector<Eigen::Vector3i> boundary_voxels(const LabelMap& labels, std::int32_t label) {
  const Eigen::Vector3i& n = labels.dims();
  std::vector<Eigen::Vector3i> out;
  auto inside = [&](int x, int y, int z) {
    return x >= 0 && y >= 0 && z >= 0 && x < n.x() && y < n.y() && z < n.z() &&
           labels(x, y, z) == label;
  };
  for (int z = 0; z < n.z(); ++z) {
    for (int y = 0; y < n.y(); ++y) {
      for (int x = 0; x < n.x(); ++x) {
        if (labels(x, y, z) != label) continue;
        if (!inside(x - 1, y, z) || !inside(x + 1, y, z) || !inside(x, y - 1, z) ||
            !inside(x, y + 1, z) || !inside(x, y, z - 1) || !inside(x, y, z + 1)) {
          out.emplace_back(x, y, z);
        }
      }
    }
  }
  return out;
}

std::vector<double> directed_distances(const std::vector<Eigen::Vector3i>& from,
                                       const std::vector<Eigen::Vector3i>& to,
                                       const Eigen::Vector3d& spacing) {
  if (from.empty()) return {};
  if (to.empty()) return std::vector<double>(from.size(), kInf);
  Eigen::Vector3i lo = to.front(), hi = to.front();
  for (const auto* set : {&from, &to}) {
    for (const Eigen::Vector3i& p : *set) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Eigen::Vector3i n = hi - lo + Eigen::Vector3i::Ones();
  const Index nx = n.x(), nxy = Index(n.x()) * n.y();
  std::vector<double> grid(std::size_t(nxy * n.z()), kInf);
  for (const Eigen::Vector3i& p : to) {
    const Eigen::Vector3i q = p - lo;
    grid[std::size_t(q.x() + nx * q.y() + nxy * q.z())] = 0.0;
  }
  const int longest = n.maxCoeff();
  std::vector<double> line(static_cast<std::size_t>(longest)), res(static_cast<std::size_t>(longest)),
      zs(std::size_t(longest + 1));
  std::vector<int> vs(static_cast<std::size_t>(longest));
  const Index stride[3] = {1, nx, nxy};
  for (int a = 0; a < 3; ++a) {
    const int b1 = a == 0 ? 1 : 0, b2 = a == 2 ? 1 : 2;
    line.resize(std::size_t(n[a]));
    res.resize(std::size_t(n[a]));
    for (int j = 0; j < n[b2]; ++j) {
      for (int k = 0; k < n[b1]; ++k) {
        const Index base = j * stride[b2] + k * stride[b1];
        for (int t = 0; t < n[a]; ++t) line[std::size_t(t)] = grid[std::size_t(base + t * stride[a])];
        edt_1d(line, spacing[a], vs, zs, res);
        for (int t = 0; t < n[a]; ++t) grid[std::size_t(base + t * stride[a])] = res[std::size_t(t)];
      }
    }
  }
  std::vector<double> out;
  out.reserve(from.size());
  for (const Eigen::Vector3i& p : from) {
    const Eigen::Vector3i q = p - lo;
    out.push_back(std::sqrt(grid[std::size_t(q.x() + nx * q.y() + nxy * q.z())]));
  }
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "percentile of an empty list");
  if (!(q > 0.0 && q <= 100.0)) {
    throw Error(ErrorCode::InvalidArgument, "percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q / 100.0 * double(values.size()) - 1e-9);
  const std::size_t idx = std::size_t(std::clamp(rank, 1.0, double(values.size()))) - 1;
  return values[idx];
}

std::optional<double> hausdorff_percentile(const LabelMap& pred, const LabelMap& gt,
                                           std::int32_t label, double q,
                                           const Eigen::Vector3d& spacing) {
  check_pair(pred, gt);
  const auto a = boundary_voxels(pred, label);
  const auto b = boundary_voxels(gt, label);
  if (a.empty() || b.empty()) return std::nullopt;
  return std::max(nearest_rank_percentile(directed_distances(a, b, spacing), q),
                  nearest_rank_percentile(directed_distances(b, a, spacing), q));
}

std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, std::int32_t label,
                           const Eigen::Vector3d& spacing) {
  return hausdorff_percentile(pred, gt, label, 95.0, spacing);
}

std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
  return hd95(pred, gt, label, gt.spacing());
}

std::optional<double> hd100(const LabelMap& pred, const LabelMap& gt, std::int32_t label) {
  return hausdorff_percentile(pred, gt, label, 100.0, gt.spacing());
}

EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, const std::string& subject) {
  check_pair(pred, gt);
  for (const LabelMap* m : {&pred, &gt}) {
    if (m->scheme() != LabelScheme::Feta7) {
      throw Error(ErrorCode::InvalidArgument, "evaluate expects FeTA label maps");
    }
    m->validate_codes();
  }
  EvalReport r;
  r.subject = subject;
  std::vector<Index> in_pred(feta::kLabelCount + 1, 0), in_gt(feta::kLabelCount + 1, 0);
  for (Index i = 0; i < pred.size(); ++i) {
    ++in_pred[std::size_t(pred[i])];
    ++in_gt[std::size_t(gt[i])];
  }
  double dice_sum = 0.0, hd_sum = 0.0;
  int dice_n = 0, hd_n = 0;
  for (std::int32_t label = 1; label <= feta::kLabelCount; ++label) {
    LabelMetrics m;
    m.label = label;
    m.present = in_pred[std::size_t(label)] > 0 || in_gt[std::size_t(label)] > 0;
    m.dice = dice(pred, gt, label);
    m.hd95 = hd95(pred, gt, label);
    if (m.present) {
      dice_sum += m.dice;
      ++dice_n;
      if (m.hd95) {
        hd_sum += *m.hd95;
        ++hd_n;
      }
    }
    r.labels.push_back(m);
  }
  if (dice_n > 0) r.mean_dice = dice_sum / dice_n;
  if (hd_n > 0) r.mean_hd95 = hd_sum / hd_n;
  return r;
}

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  s.count = int(values.size());
  if (values.empty()) return s;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.std = std::sqrt(ss / double(values.size() - 1));
  }
  return s;
}

BatchReport batch_evaluate(const std::vector<EvalCase>& cases) {
  BatchReport b;
  for (const EvalCase& c : cases) b.subjects.push_back(evaluate(c.pred, c.gt, c.subject));
  for (std::int32_t label = 1; label <= feta::kLabelCount; ++label) {
    std::vector<double> d, h;
    for (const EvalReport& r : b.subjects) {
      const LabelMetrics& m = r.labels[std::size_t(label - 1)];
      if (!m.present) continue;
      d.push_back(m.dice);
      if (m.hd95) h.push_back(*m.hd95);
    }
    b.label_dice.push_back(summarize(d));
    b.label_hd95.push_back(summarize(h));
  }
  std::vector<double> d, h;
  for (const EvalReport& r : b.subjects) {
    if (r.mean_dice) d.push_back(*r.mean_dice);
    if (r.mean_hd95) h.push_back(*r.mean_hd95);
  }
  b.mean_dice = summarize(d);
  b.mean_hd95 = summarize(h);
  return b;
}

std::string format_report(const BatchReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  auto put = [&](const std::optional<double>& v) {
    if (v) {
      os << *v;
    } else {
      os << "NA";
    }
  };
  os << "subject\tlabel\tdice\thd95\n";
  for (const EvalReport& r : report.subjects) {
    for (const LabelMetrics& m : r.labels) {
      os << r.subject << '\t' << m.label << '\t';
      put(m.present ? std::optional<double>(m.dice) : std::nullopt);
      os << '\t';
      put(m.hd95);
      os << '\n';
    }
    os << r.subject << "\tmean\t";
    put(r.mean_dice);
    os << '\t';
    put(r.mean_hd95);
    os << '\n';
  }
  for (const char* row : {"summary_mean", "summary_std"}) {
    const bool mean = row[8] == 'm';
    for (std::size_t l = 0; l < report.label_dice.size(); ++l) {
      os << row << '\t' << l + 1 << '\t';
      put(mean ? report.label_dice[l].mean : report.label_dice[l].std);
      os << '\t';
      put(mean ? report.label_hd95[l].mean : report.label_hd95[l].std);
      os << '\n';
    }
    os << row << "\tmean\t";
    put(mean ? report.mean_dice.mean : report.mean_dice.std);
    os << '\t';
    put(mean ? report.mean_hd95.mean : report.mean_hd95.std);
    os << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------ rank sum --

namespace {

struct Ranked {
  std::vector<double> ranks;  // pooled midranks, x first
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked pooled_midranks(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.empty() || y.empty()) {
    throw Error(ErrorCode::EmptySample, "rank-sum test needs two non-empty samples");
  }
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (double v : pooled) {
    if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "rank-sum test on NaN");
  }
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  Ranked r;
  r.ranks.resize(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = mid;
    const double t = double(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

}  // namespace

double wilcoxon_rank_sum_normal(const std::vector<double>& x, const std::vector<double>& y) {
  const Ranked r = pooled_midranks(x, y);
  const double n = double(x.size()), m = double(y.size()), total = n + m;
  double w = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) w += r.ranks[i];
  const double u = w - n * (n + 1.0) / 2.0;
  const double mu = n * m / 2.0;
  const double var = n * m / 12.0 * ((total + 1.0) - r.tie_term / (total * (total - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double wilcoxon_rank_sum_exact(const std::vector<double>& x, const std::vector<double>& y) {
  const Ranked r = pooled_midranks(x, y);
  const std::size_t n = x.size(), total = r.ranks.size();
  if (total > 62) {
    throw Error(ErrorCode::InvalidArgument, "exact rank-sum limited to 62 pooled values");
  }
  // Doubled midranks are integers; count subsets of size n by doubled sum.
  std::vector<int> r2(total);
  int max_sum = 0;
  for (std::size_t i = 0; i < total; ++i) {
    r2[i] = int(std::lround(2.0 * r.ranks[i]));
    max_sum += r2[i];
  }
  std::vector<std::vector<long double>> ways(n + 1,
                                             std::vector<long double>(std::size_t(max_sum + 1), 0));
  ways[0][0] = 1;
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t k = std::min(n, i + 1); k >= 1; --k) {
      for (int s = max_sum; s >= r2[i]; --s) {
        ways[k][std::size_t(s)] += ways[k - 1][std::size_t(s - r2[i])];
      }
    }
  }
  int observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += r2[i];
  // Sums are of doubled ranks, so the null mean n (N + 1) / 2 doubles too.
  const long long twice_mean = (long long)(n) * (long long)(total + 1);
  const long long observed_dev = std::llabs(observed - twice_mean);
  long double hit = 0, all = 0;
  for (int s = 0; s <= max_sum; ++s) {
    const long double c = ways[n][std::size_t(s)];
    if (c == 0) continue;
    all += c;
    if (std::llabs(s - twice_mean) >= observed_dev) hit += c;
  }
  return std::min(1.0, double(hit / all));
}

double wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() + y.size() <= kExactRankSumLimit) return wilcoxon_rank_sum_exact(x, y);
  return wilcoxon_rank_sum_normal(x, y);
}

std::vector<double> bonferroni(const std::vector<double>& p_values, std::size_t m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "bonferroni needs m >= 1");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "p-values must lie in [0, 1]");
    }
    out.push_back(std::min(1.0, double(m) * p));
  }
  return out;
}

std::vector<double> bonferroni(const std::vector<double>& p_values) {
  return bonferroni(p_values, std::max<std::size_t>(1, p_values.size()));
}

}  // namespace drifts
