#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "drifts/volume.hpp"

namespace drifts {

/// 2|A n B| / (|A| + |B|); both empty -> 1, exactly one empty -> 0.
double dice(const LabelMap& pred, const LabelMap& gt, std::int32_t label);

/// Mask voxels of `label` with at least one face neighbour outside the mask;
/// the volume border counts as outside.
std::vector<Eigen::Vector3i> boundary_voxels(const LabelMap& labels, std::int32_t label);

/// Distance (mm) from every point of `from` to its nearest point of `to`,
/// in the order of `from`. Exact Euclidean distance transform with
/// anisotropic spacing.
std::vector<double> directed_distances(const std::vector<Eigen::Vector3i>& from,
                                       const std::vector<Eigen::Vector3i>& to,
                                       const Eigen::Vector3d& spacing);

/// Nearest-rank percentile (q in (0, 100]) of `values`: element
/// ceil(q/100 * n) - 1 of the sorted list.
double nearest_rank_percentile(std::vector<double> values, double q);

/// max of the two directed q-th percentile boundary distances; nullopt when
/// either mask is empty.
std::optional<double> hausdorff_percentile(const LabelMap& pred, const LabelMap& gt,
                                           std::int32_t label, double q,
                                           const Eigen::Vector3d& spacing);

std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, std::int32_t label,
                           const Eigen::Vector3d& spacing);
std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, std::int32_t label);
/// Plain Hausdorff distance.
std::optional<double> hd100(const LabelMap& pred, const LabelMap& gt, std::int32_t label);

struct LabelMetrics {
  std::int32_t label = 0;
  bool present = false;  // in prediction or ground truth
  double dice = 1.0;
  std::optional<double> hd95;
};

struct EvalReport {
  std::string subject;
  std::vector<LabelMetrics> labels;  // FeTA codes 1..7
  std::optional<double> mean_dice;   // over present labels
  std::optional<double> mean_hd95;   // over defined hd95
};

EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, const std::string& subject = "");

struct EvalCase {
  std::string subject;
  LabelMap pred;
  LabelMap gt;
};

struct SummaryStat {
  std::optional<double> mean;
  std::optional<double> std;  // sample std (n - 1); nullopt below 2 values
  int count = 0;
};

struct BatchReport {
  std::vector<EvalReport> subjects;
  std::vector<SummaryStat> label_dice;  // index label - 1
  std::vector<SummaryStat> label_hd95;
  SummaryStat mean_dice;
  SummaryStat mean_hd95;
};

SummaryStat summarize(const std::vector<double>& values);

BatchReport batch_evaluate(const std::vector<EvalCase>& cases);

/// Tab-separated: header "subject label dice hd95", one row per (subject,
/// label) with label "mean" for the subject aggregate, then rows with
/// subject "summary_mean" and "summary_std". Undefined values print "NA".
std::string format_report(const BatchReport& report);

/// Two-sided rank-sum p-value, normal approximation with midranks,
/// tie-corrected variance and 0.5 continuity correction.
double wilcoxon_rank_sum_normal(const std::vector<double>& x, const std::vector<double>& y);
/// Two-sided exact permutation p-value over all splits of the pooled
/// midranks: P(|W - E W| >= |w - E W|).
double wilcoxon_rank_sum_exact(const std::vector<double>& x, const std::vector<double>& y);
/// Exact below n + m <= 12, normal approximation above.
double wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr std::size_t kExactRankSumLimit = 12;

/// min(1, m * p) per entry.
std::vector<double> bonferroni(const std::vector<double>& p_values, std::size_t m);
std::vector<double> bonferroni(const std::vector<double>& p_values);

}  // namespace drifts
