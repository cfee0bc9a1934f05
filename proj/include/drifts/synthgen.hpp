#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "drifts/augment.hpp"
#include "drifts/epg.hpp"
#include "drifts/labels.hpp"
#include "drifts/rng.hpp"
#include "drifts/types.hpp"
#include "drifts/volume.hpp"

namespace drifts {

enum class GeneratorMode { SynthSeg, FetalSynthSeg, FaBiAN, RandFaBiAN };

/// Whether EM runs on the deformed or the original intensity.
enum class ClusterOrder { AfterDeform, BeforeDeform };

std::string_view to_string(GeneratorMode mode);
GeneratorMode generator_mode_from_string(std::string_view name);
std::string_view to_string(ClusterOrder order);
ClusterOrder cluster_order_from_string(std::string_view name);

/// Per subclass id: mu[id], sigma[id]; id 0 is background with (0, 0).
struct GmmParams {
  std::vector<double> mu;
  std::vector<double> sigma;
  Range mu_range;
  Range sigma_range;

  std::int32_t max_id() const { return std::int32_t(mu.size()) - 1; }
};

struct GenerationConfig {
  GeneratorMode mode = GeneratorMode::FetalSynthSeg;
  Range mu_range{0.0, 255.0};
  Range sigma_range{0.0, 35.0};
  CountRange k_range{1, 9};
  std::optional<CountRange> non_brain_k_range;
  EmOptions em{50, 1e-4, 1e-6, 256};
  ClusterOrder cluster_order = ClusterOrder::AfterDeform;
  AugmentProfile profile = AugmentProfile::SynthSegFull;
  AugmentConfig augment;
  RelaxometryConfig relaxometry;
  EpgSequenceRanges sequence;
  std::uint64_t master_seed = 0;

  void validate() const;
  bool uses_epg() const {
    return mode == GeneratorMode::FaBiAN || mode == GeneratorMode::RandFaBiAN;
  }
  /// Class table feeding the subclass split for this mode.
  MetaClassTable class_table() const;
};

/// One (mu, sigma) draw per subclass id 1..count, mu then sigma per id.
GmmParams sample_gmm_params(std::int32_t subclass_count, const Range& mu_range,
                            const Range& sigma_range, RngStream& rng);
GmmParams sample_gmm_params(const SubclassPartition& partition, const GenerationConfig& cfg,
                            RngStream& rng);

/// Voxel i of id L gets max(0, mu_L + sigma_L * n_i) with n_i the i-th
/// random-access normal of `voxel_stream`; background stays exactly 0.
Volume3D render_intensities(const LabelMap& subclass_map, const GmmParams& params,
                            const RngStream& voxel_stream);

/// Seconds per stage; `total` is the wall time of the whole sample.
struct StageTimings {
  double cluster = 0.0;
  double render = 0.0;
  double augment = 0.0;
  double resample = 0.0;
  double total = 0.0;

  double stage_sum() const { return cluster + render + augment + resample; }
};

struct Provenance {
  std::string subject;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
  GeneratorMode mode = GeneratorMode::FetalSynthSeg;
  ClusterOrder cluster_order = ClusterOrder::AfterDeform;
  ParamRecord params;
  std::vector<std::string> warnings;
};

struct SamplePair {
  Volume3D image;
  LabelMap labels;  // deformed FeTA labels
  Provenance provenance;
  StageTimings timings;
};

/// Intermediate products, filled on request.
struct SampleInternals {
  LabelMap classes;
  SubclassPartition partition;
  GmmParams gmm;
  RelaxometryTable relaxometry;
  EpgSequenceParams sequence;
  Volume3D rendered;  // before any corruption
};

/// Spatial transform -> class partition and EM split -> render -> intensity
/// corruption -> resolution simulation -> [0, 1] rescale. A pure function of
/// (inputs, cfg, cfg.master_seed, sample_index).
SamplePair generate_sample(const LabelMap& labels, const Volume3D& intensity,
                           const GenerationConfig& cfg, std::uint64_t sample_index,
                           const std::string& subject = "",
                           SampleInternals* internals = nullptr);

struct Subject {
  std::string id;
  LabelMap labels;
  Volume3D intensity;
};

/// Endless on-the-fly generation; sample i uses subject i mod n.
class SampleStream {
 public:
  SampleStream(std::shared_ptr<const std::vector<Subject>> subjects, GenerationConfig cfg,
               std::uint64_t first_index = 0);

  SamplePair next();
  std::uint64_t position() const { return next_index_; }
  const Subject& subject_for(std::uint64_t index) const;

 private:
  std::shared_ptr<const std::vector<Subject>> subjects_;
  GenerationConfig cfg_;
  std::uint64_t next_index_;
};

}  // namespace drifts
