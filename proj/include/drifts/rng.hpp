#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>

namespace drifts {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Pipeline stages; each gets its own stream so adding draws in one stage
/// never shifts another.
enum class Stage : std::uint32_t {
  Generic = 0,
  Affine = 1,
  Svf = 2,
  Partition = 3,
  GmmParams = 4,
  RenderVoxels = 5,
  BiasField = 6,
  Gamma = 7,
  Noise = 8,
  NoiseVoxels = 9,
  Blur = 10,
  Resolution = 11,
  ProfileDecisions = 12,
  Relaxometry = 13,
  EpgSequence = 14,
  Phantom = 15,
};

/// Counter-based random stream keyed by (seed, sample index, stage,
/// substream). Identical keys replay identical sequences in any thread
/// order. Satisfies UniformRandomBitGenerator for sequential use; the
/// *_at() members give random access into a disjoint counter range.
class RngStream {
 public:
  using result_type = std::uint32_t;

  RngStream() : RngStream(0, 0, Stage::Generic) {}
  RngStream(std::uint64_t seed, std::uint64_t sample_index, Stage stage,
            std::uint32_t substream = 0);

  /// Independent child stream (substream ids below 2^31).
  RngStream substream(std::uint32_t id) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform01();                    // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi]; lo when lo == hi
  int uniform_int(int lo, int hi);       // inclusive
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);
  std::uint64_t next_u64();

  /// Two independent standard normals for random-access block `j`.
  std::pair<double, double> gaussian_pair_at(std::uint64_t j) const;

  /// Standard normal number `i` of the random-access sequence.
  double gaussian_at(std::uint64_t i) const {
    const auto p = gaussian_pair_at(i >> 1);
    return (i & 1u) ? p.second : p.first;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_index() const { return index_; }
  Stage stage() const { return stage_; }

 private:
  std::array<std::uint32_t, 4> block_at(std::uint64_t counter, bool random_access) const;

  std::uint64_t seed_;
  std::uint64_t index_;
  Stage stage_;
  std::uint32_t substream_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Stream factory for one generated sample.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t sample_index)
      : seed_(seed), index_(sample_index) {}

  RngStream stream(Stage stage, std::uint32_t substream = 0) const {
    return RngStream(seed_, index_, stage, substream);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
};

}  // namespace drifts
