#include "drifts/labels.hpp"

#include <string>

namespace drifts {

LabelMap remap_drawem_to_feta(const LabelMap& drawem) {
  LabelMap out(drawem.geometry(), LabelScheme::Feta7);
  for (Index i = 0; i < drawem.size(); ++i) {
    const std::int32_t code = drawem[i];
    if (code < 0 || code >= std::int32_t(kDrawEmToFeta.size())) {
      throw Error(ErrorCode::UnknownLabel,
                  "Draw-EM code " + std::to_string(code) + " has no FeTA counterpart");
    }
    out[i] = kDrawEmToFeta[std::size_t(code)];
  }
  return out;
}

MetaClassTable MetaClassTable::fetal() {
  MetaClassTable t;
  t.class_of_label = {0,
                      meta::kCsf,           // CSF
                      meta::kGrayMatter,    // GM
                      meta::kWhiteMatter,   // WM
                      meta::kCsf,           // LV
                      meta::kWhiteMatter,   // CBM
                      meta::kGrayMatter,    // SGM
                      meta::kWhiteMatter};  // BSM
  t.non_brain = true;
  t.non_brain_class = meta::kNonBrain;
  t.output_scheme = LabelScheme::Meta4;
  return t;
}

MetaClassTable MetaClassTable::identity() {
  MetaClassTable t;
  t.class_of_label = {0, 1, 2, 3, 4, 5, 6, 7};
  t.non_brain = false;
  t.output_scheme = LabelScheme::Feta7;
  return t;
}

LabelMap build_meta_classes(const LabelMap& labels, const Volume3D& intensity,
                            const MetaClassTable& table) {
  require_same_grid(labels.geometry(), intensity.geometry(), "build_meta_classes");
  LabelMap out(labels.geometry(), table.output_scheme);
  for (Index i = 0; i < labels.size(); ++i) {
    const std::int32_t code = labels[i];
    if (code < 0 || code > feta::kLabelCount) {
      throw Error(ErrorCode::UnknownLabel,
                  "FeTA code " + std::to_string(code) + " out of range");
    }
    if (code != feta::kBackground) {
      out[i] = table.class_of_label[std::size_t(code)];
    } else if (table.non_brain && intensity[i] > 0.0f) {
      out[i] = table.non_brain_class;
    }
  }
  return out;
}

SubclassPartition split_meta_classes(const LabelMap& classes, const Volume3D& intensity,
                                     const SplitOptions& options, RngStream& rng) {
  require_same_grid(classes.geometry(), intensity.geometry(), "split_meta_classes");
  auto check_range = [](const CountRange& r) {
    if (r.lo < 1 || r.hi < r.lo) {
      throw Error(ErrorCode::InvalidRange,
                  "subclass range must satisfy 1 <= lo <= hi");
    }
  };
  check_range(options.k_range);
  if (options.non_brain_k_range) check_range(*options.non_brain_k_range);

  std::map<std::int32_t, std::vector<Index>> members;
  for (Index i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0) {
      throw Error(ErrorCode::UnknownLabel, "negative class code");
    }
    if (classes[i] != 0) members[classes[i]].push_back(i);
  }

  SubclassPartition part;
  part.subclass_map = LabelMap(classes.geometry(), LabelScheme::Subclass);
  std::int32_t next_id = 1;
  for (const auto& [code, voxels] : members) {
    const bool non_brain = classes.scheme() == LabelScheme::Meta4 &&
                           code == meta::kNonBrain && options.non_brain_k_range;
    const CountRange range = non_brain ? *options.non_brain_k_range : options.k_range;
    const int drawn = rng.uniform_int(range.lo, range.hi);
    const int k = std::min<Index>(drawn, Index(voxels.size()));
    const std::uint64_t em_seed = rng.next_u64();
    const EmResult em = em_cluster(intensity, voxels, k, em_seed, options.em);
    part.k_per_class[code] = k;
    std::vector<Index> counts(std::size_t(k), 0);
    for (std::size_t v = 0; v < voxels.size(); ++v) {
      const int comp = em.assignment[v];
      part.subclass_map[voxels[v]] = next_id + comp;
      ++counts[std::size_t(comp)];
    }
    for (int c = 0; c < k; ++c) {
      SubclassInfo info;
      info.parent_class = code;
      info.component = c;
      info.mean = em.fit.means[std::size_t(c)];
      info.variance = em.fit.variances[std::size_t(c)];
      info.weight = em.fit.weights[std::size_t(c)];
      info.voxels = counts[std::size_t(c)];
      part.subclasses.push_back(info);
    }
    next_id += k;
  }
  return part;
}

}  // namespace drifts
