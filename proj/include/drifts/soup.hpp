#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drifts/error.hpp"

namespace drifts {

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::uint64_t element_count() const;
};

/// Ordered named float32 tensors plus ordered string metadata.
struct Checkpoint {
  std::vector<Tensor> tensors;
  std::vector<std::pair<std::string, std::string>> metadata;

  /// Throws DuplicateTensor / FormatError when an invariant is broken.
  void validate() const;
  const Tensor* find(const std::string& name) const;
  /// Value of the first metadata entry with `key`, or empty.
  std::string meta(const std::string& key) const;
};

/// "WSOUP1\0\0" format, little endian throughout.
std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

Checkpoint read_checkpoint(const std::string& path);
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// (1 - alpha) * a + alpha * b per element in float32, with metadata naming
/// both sources and alpha. alpha 0 and 1 return exact copies (metadata
/// included) of a and b.
Checkpoint interpolate(const Checkpoint& a, const Checkpoint& b, double alpha);

/// True when both hold the same names, order and shapes.
bool compatible(const Checkpoint& a, const Checkpoint& b);

}  // namespace drifts
