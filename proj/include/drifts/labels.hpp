#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "drifts/em.hpp"
#include "drifts/rng.hpp"
#include "drifts/types.hpp"
#include "drifts/volume.hpp"

namespace drifts {

/// FeTA tissue codes.
namespace feta {
inline constexpr std::int32_t kBackground = 0;
inline constexpr std::int32_t kCsf = 1;
inline constexpr std::int32_t kGm = 2;
inline constexpr std::int32_t kWm = 3;
inline constexpr std::int32_t kLv = 4;
inline constexpr std::int32_t kCbm = 5;
inline constexpr std::int32_t kSgm = 6;
inline constexpr std::int32_t kBsm = 7;
inline constexpr int kLabelCount = 7;
}  // namespace feta

/// Meta-class codes.
namespace meta {
inline constexpr std::int32_t kWhiteMatter = 1;
inline constexpr std::int32_t kGrayMatter = 2;
inline constexpr std::int32_t kCsf = 3;
inline constexpr std::int32_t kNonBrain = 4;
}  // namespace meta

/// Draw-EM (dHCP) code -> FeTA code, indexed by Draw-EM code 0..9.
/// Hippocampi/amygdala (9) merge into WM, skull (4) into background.
inline constexpr std::array<std::int32_t, 10> kDrawEmToFeta{0, 1, 2, 3, 0, 4, 5, 6, 7, 3};

LabelMap remap_drawem_to_feta(const LabelMap& drawem);

/// Grouping of FeTA labels into generation classes. `non_brain` adds the
/// class for unlabeled voxels with nonzero intensity.
struct MetaClassTable {
  std::array<std::int32_t, 8> class_of_label{};
  bool non_brain = false;
  std::int32_t non_brain_class = meta::kNonBrain;
  LabelScheme output_scheme = LabelScheme::Meta4;

  /// WM/CBM/BSM -> 1, GM/SGM -> 2, CSF/LV -> 3, plus non-brain 4.
  static MetaClassTable fetal();
  /// Every FeTA label is its own class; no non-brain class.
  static MetaClassTable identity();
};

LabelMap build_meta_classes(const LabelMap& labels, const Volume3D& intensity,
                            const MetaClassTable& table = MetaClassTable::fetal());

struct SubclassInfo {
  std::int32_t parent_class = 0;
  int component = 0;
  double mean = 0.0;
  double variance = 0.0;
  double weight = 0.0;
  Index voxels = 0;
};

/// Dense subclass ids 1..K over a class map; 0 stays background.
struct SubclassPartition {
  LabelMap subclass_map;
  std::map<std::int32_t, int> k_per_class;
  std::vector<SubclassInfo> subclasses;  // subclasses[id - 1]

  std::int32_t total() const { return std::int32_t(subclasses.size()); }
  const SubclassInfo& info(std::int32_t id) const { return subclasses.at(std::size_t(id - 1)); }
};

struct SplitOptions {
  CountRange k_range{1, 9};
  /// Separate range for the non-brain class (code meta::kNonBrain in META4 maps).
  std::optional<CountRange> non_brain_k_range;
  EmOptions em;
};

/// Splits every nonzero class of `classes` into k ~ U{lo..hi} intensity
/// subclasses with EM. Classes are visited in ascending code order and draw
/// their k from `rng` in that order.
SubclassPartition split_meta_classes(const LabelMap& classes, const Volume3D& intensity,
                                     const SplitOptions& options, RngStream& rng);

}  // namespace drifts
