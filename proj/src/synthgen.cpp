#include "drifts/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace drifts {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(GeneratorMode mode) {
  switch (mode) {
    case GeneratorMode::SynthSeg: return "synthseg";
    case GeneratorMode::FetalSynthSeg: return "fetalsynthseg";
    case GeneratorMode::FaBiAN: return "fabian";
    case GeneratorMode::RandFaBiAN: return "randfabian";
  }
  return "?";
}

GeneratorMode generator_mode_from_string(std::string_view name) {
  if (name == "synthseg") return GeneratorMode::SynthSeg;
  if (name == "fetalsynthseg") return GeneratorMode::FetalSynthSeg;
  if (name == "fabian") return GeneratorMode::FaBiAN;
  if (name == "randfabian") return GeneratorMode::RandFaBiAN;
  throw Error(ErrorCode::ConfigError, "unknown generator mode '" + std::string(name) + "'");
}

std::string_view to_string(ClusterOrder order) {
  return order == ClusterOrder::AfterDeform ? "after_deform" : "before_deform";
}

ClusterOrder cluster_order_from_string(std::string_view name) {
  if (name == "after_deform") return ClusterOrder::AfterDeform;
  if (name == "before_deform") return ClusterOrder::BeforeDeform;
  throw Error(ErrorCode::ConfigError, "unknown cluster order '" + std::string(name) + "'");
}

void GenerationConfig::validate() const {
  mu_range.validate("mu_range");
  sigma_range.validate("sigma_range");
  if (sigma_range.lo < 0.0) throw Error(ErrorCode::InvalidRange, "sigma_range must be >= 0");
  auto check = [](const CountRange& r, const char* what) {
    if (r.lo < 1 || r.hi < r.lo) {
      throw Error(ErrorCode::InvalidRange, std::string(what) + " must satisfy 1 <= lo <= hi");
    }
  };
  check(k_range, "k_range");
  if (non_brain_k_range) check(*non_brain_k_range, "non_brain_k_range");
}

MetaClassTable GenerationConfig::class_table() const {
  return mode == GeneratorMode::SynthSeg ? MetaClassTable::identity() : MetaClassTable::fetal();
}

GmmParams sample_gmm_params(std::int32_t subclass_count, const Range& mu_range,
                            const Range& sigma_range, RngStream& rng) {
  mu_range.validate("mu_range");
  sigma_range.validate("sigma_range");
  if (sigma_range.lo < 0.0) throw Error(ErrorCode::InvalidRange, "sigma_range must be >= 0");
  if (subclass_count < 1) throw Error(ErrorCode::EmptyMask, "no subclasses to parameterise");
  GmmParams p;
  p.mu_range = mu_range;
  p.sigma_range = sigma_range;
  p.mu.assign(std::size_t(subclass_count) + 1, 0.0);
  p.sigma.assign(std::size_t(subclass_count) + 1, 0.0);
  for (std::int32_t id = 1; id <= subclass_count; ++id) {
    p.mu[std::size_t(id)] = rng.uniform(mu_range.lo, mu_range.hi);
    p.sigma[std::size_t(id)] = rng.uniform(sigma_range.lo, sigma_range.hi);
  }
  return p;
}

GmmParams sample_gmm_params(const SubclassPartition& partition, const GenerationConfig& cfg,
                            RngStream& rng) {
  return sample_gmm_params(partition.total(), cfg.mu_range, cfg.sigma_range, rng);
}

Volume3D render_intensities(const LabelMap& subclass_map, const GmmParams& params,
                            const RngStream& voxel_stream) {
  if (params.mu.size() != params.sigma.size()) {
    throw Error(ErrorCode::MissingParams, "GMM parameter lists differ in length");
  }
  Volume3D out(subclass_map.geometry());
  const std::int32_t max_id = params.max_id();
  for (Index i = 0; i < subclass_map.size(); ++i) {
    const std::int32_t id = subclass_map[i];
    if (id == 0) continue;
    if (id < 0 || id > max_id) {
      throw Error(ErrorCode::MissingParams, "no GMM parameters for subclass " + std::to_string(id));
    }
    const double v = params.mu[std::size_t(id)] +
                     params.sigma[std::size_t(id)] * voxel_stream.gaussian_at(std::uint64_t(i));
    out[i] = float(std::max(0.0, v));
  }
  return out;
}

SamplePair generate_sample(const LabelMap& labels, const Volume3D& intensity,
                           const GenerationConfig& cfg, std::uint64_t sample_index,
                           const std::string& subject, SampleInternals* internals) {
  const auto t_start = Clock::now();
  cfg.validate();
  require_same_grid(labels.geometry(), intensity.geometry(), "generate_sample");
  if (labels.scheme() != LabelScheme::Feta7) {
    throw Error(ErrorCode::InvalidArgument, "generate_sample expects FeTA labels");
  }
  labels.validate_codes();

  const SampleRng rng(cfg.master_seed, sample_index);
  SamplePair out;
  Provenance& prov = out.provenance;
  prov.subject = subject;
  prov.seed = cfg.master_seed;
  prov.sample_index = sample_index;
  prov.mode = cfg.mode;
  prov.cluster_order = cfg.cluster_order;
  ParamRecord& record = prov.params;
  StageTimings& tm = out.timings;

  const MetaClassTable table = cfg.class_table();
  SplitOptions split;
  split.k_range = cfg.k_range;
  split.non_brain_k_range = cfg.non_brain_k_range;
  split.em = cfg.em;
  auto partition_of = [&](const LabelMap& lm, const Volume3D& img, LabelMap& classes) {
    classes = build_meta_classes(lm, img, table);
    RngStream ps = rng.stream(Stage::Partition);
    return split_meta_classes(classes, img, split, ps);
  };

  // (1) spatial transform, (2) partition
  auto t0 = Clock::now();
  const SpatialTransform spatial =
      draw_spatial(labels.geometry(), cfg.profile, cfg.augment, rng, &record);
  LabelMap warped_labels = apply_spatial(labels, spatial, InterpKind::NearestNeighbor);
  tm.augment += seconds_since(t0);

  LabelMap classes;
  SubclassPartition partition;
  if (cfg.cluster_order == ClusterOrder::AfterDeform) {
    t0 = Clock::now();
    const Volume3D warped_intensity = apply_spatial(intensity, spatial, InterpKind::Trilinear);
    tm.augment += seconds_since(t0);
    t0 = Clock::now();
    partition = partition_of(warped_labels, warped_intensity, classes);
    tm.cluster += seconds_since(t0);
  } else {
    t0 = Clock::now();
    partition = partition_of(labels, intensity, classes);
    tm.cluster += seconds_since(t0);
    t0 = Clock::now();
    partition.subclass_map = apply_spatial(partition.subclass_map, spatial);
    classes = apply_spatial(classes, spatial);
    tm.augment += seconds_since(t0);
  }
  {
    std::vector<double> k;
    for (const auto& [code, count] : partition.k_per_class) {
      k.push_back(double(code));
      k.push_back(double(count));
    }
    record["partition.class_k"] = k;
  }

  // (3) render
  t0 = Clock::now();
  Volume3D image;
  GmmParams gmm;
  RelaxometryTable relax;
  EpgSequenceParams seq;
  if (!cfg.uses_epg()) {
    RngStream gs = rng.stream(Stage::GmmParams);
    gmm = sample_gmm_params(partition, cfg, gs);
    record["gmm.mu"] = {gmm.mu.begin() + 1, gmm.mu.end()};
    record["gmm.sigma"] = {gmm.sigma.begin() + 1, gmm.sigma.end()};
    image = render_intensities(partition.subclass_map, gmm, rng.stream(Stage::RenderVoxels));
  } else {
    RngStream ss = rng.stream(Stage::EpgSequence);
    seq = draw_sequence(cfg.sequence, ss);
    RelaxometryConfig rc = cfg.relaxometry;
    rc.mode = cfg.mode == GeneratorMode::FaBiAN ? RelaxometryMode::Reference
                                                : RelaxometryMode::Randomized;
    std::map<std::int32_t, std::int32_t> key_of;
    for (std::int32_t id = 1; id <= partition.total(); ++id) {
      key_of[id] = partition.info(id).parent_class;
    }
    RngStream rs = rng.stream(Stage::Relaxometry);
    relax = sample_relaxometry(rc, key_of, rs, &prov.warnings);
    image = render_epg_volume(partition.subclass_map, relax, seq);
    record["epg.refocusing_deg"] = {seq.refocusing_deg.empty() ? 0.0 : seq.refocusing_deg[0]};
    record["epg.te_eff"] = {seq.te_eff};
    std::vector<double> t1, t2, pd;
    for (const auto& [id, t] : relax) {
      t1.push_back(t.t1);
      t2.push_back(t.t2);
      pd.push_back(t.pd);
    }
    record["epg.t1"] = t1;
    record["epg.t2"] = t2;
    record["epg.pd"] = pd;
  }
  tm.render += seconds_since(t0);
  if (internals != nullptr) {
    internals->classes = classes;
    internals->partition = partition;
    internals->gmm = gmm;
    internals->relaxometry = relax;
    internals->sequence = seq;
    internals->rendered = image;
  }

  // (4) corruption
  t0 = Clock::now();
  image = corrupt_intensities(image, cfg.profile, cfg.augment, rng, &record);
  tm.augment += seconds_since(t0);

  // (5) resolution, (6) normalise
  t0 = Clock::now();
  image = simulate_acquisition(image, cfg.profile, cfg.augment, rng, &record);
  out.image = rescale_unit(image);
  tm.resample += seconds_since(t0);

  out.labels = std::move(warped_labels);
  tm.total = seconds_since(t_start);
  return out;
}

SampleStream::SampleStream(std::shared_ptr<const std::vector<Subject>> subjects,
                           GenerationConfig cfg, std::uint64_t first_index)
    : subjects_(std::move(subjects)), cfg_(std::move(cfg)), next_index_(first_index) {
  if (!subjects_ || subjects_->empty()) {
    throw Error(ErrorCode::InvalidArgument, "SampleStream needs at least one subject");
  }
  cfg_.validate();
}

const Subject& SampleStream::subject_for(std::uint64_t index) const {
  return (*subjects_)[std::size_t(index % subjects_->size())];
}

SamplePair SampleStream::next() {
  const std::uint64_t index = next_index_++;
  const Subject& s = subject_for(index);
  return generate_sample(s.labels, s.intensity, cfg_, index, s.id);
}

}  // namespace drifts
