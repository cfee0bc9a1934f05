#include "drifts/rng.hpp"

namespace drifts {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kRandomAccessBit = 0x80000000u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// 53 random bits to a double in [0, 1).
double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
  return double(bits & ((1ull << 53) - 1)) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t sample_index, Stage stage,
                     std::uint32_t substream)
    : seed_(seed), index_(sample_index), stage_(stage), substream_(substream) {
  const std::uint64_t k =
      splitmix64(seed ^ splitmix64((std::uint64_t(stage) << 32) ^ (sample_index >> 32)));
  key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
}

RngStream RngStream::substream(std::uint32_t id) const {
  return RngStream(seed_, index_, stage_, id & ~kRandomAccessBit);
}

std::array<std::uint32_t, 4> RngStream::block_at(std::uint64_t counter,
                                                  bool random_access) const {
  const std::uint32_t hi =
      (std::uint32_t(counter >> 32) & ~kRandomAccessBit) | (random_access ? kRandomAccessBit : 0u);
  return philox4x32({std::uint32_t(counter), hi, substream_, std::uint32_t(index_)}, key_);
}

RngStream::result_type RngStream::operator()() {
  if (buffered_ == 0) {
    buffer_ = block_at(counter_++, false);
    buffered_ = 4;
  }
  return buffer_[4 - buffered_--];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t hi = (*this)();
  return (hi << 32) | (*this)();
}

double RngStream::uniform01() {
  const std::uint32_t hi = (*this)();
  const std::uint32_t lo = (*this)();
  return to_unit(hi, lo);
}

double RngStream::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  const double v = lo + (hi - lo) * uniform01();
  return v > hi ? hi : v;
}

int RngStream::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  const std::uint64_t span = std::uint64_t(std::int64_t(hi) - lo) + 1;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = (std::numeric_limits<std::uint64_t>::max() / span) * span;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return int(std::int64_t(lo) + std::int64_t(r % span));
}

bool RngStream::bernoulli(double p) { return uniform01() < p; }

double RngStream::normal(double mean, double stddev) {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return mean + stddev * spare_normal_;
  }
  const std::uint32_t a = (*this)(), b = (*this)(), c = (*this)(), d = (*this)();
  const double u1 = 1.0 - to_unit(a, b);  // (0, 1]
  const double u2 = to_unit(c, d);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(t);
  has_spare_normal_ = true;
  return mean + stddev * r * std::cos(t);
}

std::pair<double, double> RngStream::gaussian_pair_at(std::uint64_t j) const {
  const auto w = block_at(j, true);
  const double u1 = 1.0 - to_unit(w[0], w[1]);
  const double u2 = to_unit(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace drifts
