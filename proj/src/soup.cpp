#include "drifts/soup.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <set>
#include <sstream>

#include "drifts/io.hpp"

namespace drifts {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'W', 'S', 'O', 'U', 'P', '1', '\0', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::FormatError, "checkpoint string too long");
    }
    put(std::uint32_t(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const unsigned char* take(std::uint64_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::TruncatedFile, "checkpoint ends before its declared contents");
    }
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += std::size_t(n);
    return p;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const unsigned char* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

std::string format_alpha(double alpha) {
  std::ostringstream os;
  os.precision(17);
  os << alpha;
  return os.str();
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : shape) n *= d;
  return n;
}

void Checkpoint::validate() const {
  std::set<std::string> names;
  for (const Tensor& t : tensors) {
    if (!names.insert(t.name).second) {
      throw Error(ErrorCode::DuplicateTensor, "duplicate tensor '" + t.name + "'");
    }
    if (t.shape.size() > 255) {
      throw Error(ErrorCode::FormatError, "tensor '" + t.name + "' has rank > 255");
    }
    if (t.element_count() != t.data.size()) {
      throw Error(ErrorCode::FormatError, "tensor '" + t.name + "' shape does not match data");
    }
  }
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const Tensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string Checkpoint::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return {};
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.validate();
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(std::uint32_t(ckpt.tensors.size()));
  for (const Tensor& t : ckpt.tensors) {
    w.put_string(t.name);
    w.put(std::uint8_t(t.shape.size()));
    for (std::uint64_t d : t.shape) w.put(d);
    w.put_bytes(t.data.data(), t.data.size() * sizeof(float));
  }
  w.put(std::uint32_t(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.put_string(k);
    w.put_string(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::FormatError, "not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.take(sizeof(kMagic));
  Checkpoint ckpt;
  std::set<std::string> names;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.get_string();
    if (!names.insert(t.name).second) {
      throw Error(ErrorCode::DuplicateTensor, "duplicate tensor '" + t.name + "'");
    }
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t n = 1;
    for (int d = 0; d < rank; ++d) {
      const auto dim = r.get<std::uint64_t>();
      if (dim != 0 && n > std::numeric_limits<std::uint64_t>::max() / sizeof(float) / dim) {
        throw Error(ErrorCode::FormatError, "tensor '" + t.name + "' is too large");
      }
      n *= dim;
      t.shape.push_back(dim);
    }
    const unsigned char* p = r.take(n * sizeof(float));
    t.data.resize(std::size_t(n));
    std::memcpy(t.data.data(), p, std::size_t(n) * sizeof(float));
    ckpt.tensors.push_back(std::move(t));
  }
  const auto entries = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.get_string();
    std::string v = r.get_string();
    ckpt.metadata.emplace_back(std::move(k), std::move(v));
  }
  if (!r.done()) throw Error(ErrorCode::FormatError, "trailing bytes after checkpoint");
  return ckpt;
}

Checkpoint read_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file_bytes(path));
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file_atomic(path, encode_checkpoint(ckpt), false);
}

bool compatible(const Checkpoint& a, const Checkpoint& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (a.tensors[i].name != b.tensors[i].name || a.tensors[i].shape != b.tensors[i].shape) {
      return false;
    }
  }
  return true;
}

Checkpoint interpolate(const Checkpoint& a, const Checkpoint& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must lie in [0, 1]");
  }
  a.validate();
  b.validate();
  if (!compatible(a, b)) {
    throw Error(ErrorCode::IncompatibleCheckpoints,
                "checkpoints differ in tensor names, order or shapes");
  }
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;

  const float wa = float(1.0 - alpha), wb = float(alpha);
  Checkpoint out;
  out.tensors.reserve(a.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const Tensor& ta = a.tensors[i];
    const Tensor& tb = b.tensors[i];
    Tensor t{ta.name, ta.shape, std::vector<float>(ta.data.size())};
    for (std::size_t j = 0; j < t.data.size(); ++j) {
      t.data[j] = wa * ta.data[j] + wb * tb.data[j];
    }
    out.tensors.push_back(std::move(t));
  }
  out.metadata = {{"alpha", format_alpha(alpha)},
                  {"source_a", a.meta("source")},
                  {"source_b", b.meta("source")}};
  return out;
}

}  // namespace drifts
