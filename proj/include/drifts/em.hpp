#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drifts/volume.hpp"

namespace drifts {

/// 1D Gaussian mixture: components are ordered by ascending mean.
struct GmmFit {
  int k = 0;
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> weights;
  double log_likelihood = 0.0;
  /// Log-likelihood after initialisation and after every M-step.
  std::vector<double> log_likelihood_trace;
  double variance_floor = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct EmOptions {
  int max_iterations = 50;
  double tolerance = 1e-4;  // relative log-likelihood change
  double variance_floor_ratio = 1e-6;
  /// 0 fits every value exactly; otherwise values are binned into this many
  /// equal-width bins over their range and EM runs on bin centres weighted
  /// by counts.
  int histogram_bins = 0;
};

struct EmResult {
  std::vector<int> assignment;  // component per input value
  GmmFit fit;
};

/// Expectation-maximisation for a 1D Gaussian mixture. Initial means sit at
/// the (i + 0.5)/k quantiles with equal weights and the sample variance;
/// `seed` only separates initial means that coincide on tied data.
EmResult em_cluster(std::span<const float> values, int k, std::uint64_t seed,
                    const EmOptions& options = {});

/// Same, over the voxels of `intensity` listed in `mask`.
EmResult em_cluster(const Volume3D& intensity, std::span<const Index> mask, int k,
                    std::uint64_t seed, const EmOptions& options = {});

}  // namespace drifts
