#include "drifts/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <optional>
#include <limits>
#include <string>

#include <Eigen/Geometry>

#include "drifts/io.hpp"

namespace drifts {

namespace {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kIntentLabel = 1002;
constexpr std::size_t kDataOffset = 352;

int bytes_per_voxel(std::int16_t datatype) {
  switch (static_cast<NiftiDatatype>(datatype)) {
    case NiftiDatatype::UInt8: return 1;
    case NiftiDatatype::Int16: return 2;
    case NiftiDatatype::Int32: return 4;
    case NiftiDatatype::Float32: return 4;
    case NiftiDatatype::Float64: return 8;
  }
  return 0;
}

bool is_integer_type(std::int16_t datatype) {
  const auto t = static_cast<NiftiDatatype>(datatype);
  return t == NiftiDatatype::UInt8 || t == NiftiDatatype::Int16 ||
         t == NiftiDatatype::Int32;
}

struct RawNifti {
  NiftiHeader header;
  Geometry geometry;
  const unsigned char* voxels = nullptr;
  std::vector<unsigned char> bytes;
};

Eigen::Matrix4d qform_affine(const NiftiHeader& h) {
  const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  const Eigen::Matrix3d rot = Eigen::Quaterniond(a, b, c, d).toRotationMatrix();
  const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
  const Eigen::Vector3d scale(std::abs(h.pixdim[1]), std::abs(h.pixdim[2]),
                              qfac * std::abs(h.pixdim[3]));
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rot * scale.asDiagonal();
  m(0, 3) = h.qoffset_x;
  m(1, 3) = h.qoffset_y;
  m(2, 3) = h.qoffset_z;
  return m;
}

RawNifti parse(const std::filesystem::path& path) {
  RawNifti raw;
  raw.bytes = read_file_bytes(path);
  if (raw.bytes.size() < sizeof(NiftiHeader)) {
    throw Error(ErrorCode::FormatError, path.string() + ": shorter than a NIfTI-1 header");
  }
  std::memcpy(&raw.header, raw.bytes.data(), sizeof(NiftiHeader));
  const NiftiHeader& h = raw.header;
  if (h.sizeof_hdr != 348) {
    throw Error(ErrorCode::FormatError,
                path.string() + ": sizeof_hdr is not 348 (big-endian or not NIfTI-1)");
  }
  const bool magic_single = std::memcmp(h.magic, "n+1\0", 4) == 0;
  const bool magic_pair = std::memcmp(h.magic, "ni1\0", 4) == 0;
  if (!magic_single && !magic_pair) {
    throw Error(ErrorCode::FormatError, path.string() + ": bad NIfTI-1 magic");
  }
  if (magic_pair) {
    throw Error(ErrorCode::FormatError,
                path.string() + ": split .hdr/.img pairs are not supported");
  }
  const int ndim = h.dim[0];
  if (!(ndim == 3 || (ndim == 4 && h.dim[4] == 1))) {
    throw Error(ErrorCode::UnsupportedShape,
                path.string() + ": only 3D volumes (or 4D with nt=1) are supported");
  }
  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) {
    throw Error(ErrorCode::UnsupportedDatatype,
                path.string() + ": datatype code " + std::to_string(h.datatype));
  }
  Geometry g;
  g.dims = Eigen::Vector3i(h.dim[1], h.dim[2], h.dim[3]);
  if ((g.dims.array() < 1).any()) {
    throw Error(ErrorCode::FormatError, path.string() + ": non-positive dim");
  }
  g.spacing = Eigen::Vector3d(std::abs(h.pixdim[1]), std::abs(h.pixdim[2]),
                              std::abs(h.pixdim[3]));
  if (!(g.spacing.array() > 0.0).all()) {
    throw Error(ErrorCode::FormatError, path.string() + ": non-positive pixdim");
  }
  if (h.sform_code > 0) {
    g.affine.setIdentity();
    for (int c = 0; c < 4; ++c) {
      g.affine(0, c) = h.srow_x[c];
      g.affine(1, c) = h.srow_y[c];
      g.affine(2, c) = h.srow_z[c];
    }
  } else if (h.qform_code > 0) {
    g.affine = qform_affine(h);
  } else {
    g.affine.setIdentity();
    g.affine.topLeftCorner<3, 3>() = g.spacing.asDiagonal();
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  const double offset = h.vox_offset;
  if (!(offset >= 348.0) || offset != std::floor(offset)) {
    throw Error(ErrorCode::FormatError, path.string() + ": invalid vox_offset");
  }
  const std::size_t need =
      static_cast<std::size_t>(offset) + std::size_t(g.voxel_count()) * std::size_t(bpv);
  if (raw.bytes.size() < need) {
    throw Error(ErrorCode::FormatError, path.string() + ": truncated voxel data");
  }
  raw.geometry = g;
  raw.voxels = raw.bytes.data() + static_cast<std::size_t>(offset);
  return raw;
}

template <typename Out>
void decode(const RawNifti& raw, Eigen::Array<Out, Eigen::Dynamic, 1>& out) {
  const Index n = raw.geometry.voxel_count();
  out.resize(n);
  auto copy_as = [&](auto tag) {
    using In = decltype(tag);
    for (Index i = 0; i < n; ++i) {
      In v;
      std::memcpy(&v, raw.voxels + i * sizeof(In), sizeof(In));
      out[i] = static_cast<Out>(v);
    }
  };
  switch (static_cast<NiftiDatatype>(raw.header.datatype)) {
    case NiftiDatatype::UInt8: copy_as(std::uint8_t{}); break;
    case NiftiDatatype::Int16: copy_as(std::int16_t{}); break;
    case NiftiDatatype::Int32: copy_as(std::int32_t{}); break;
    case NiftiDatatype::Float32:
      if constexpr (std::is_same_v<Out, float>) {
        std::memcpy(out.data(), raw.voxels, std::size_t(n) * sizeof(float));
      } else {
        copy_as(float{});
      }
      break;
    case NiftiDatatype::Float64: copy_as(double{}); break;
  }
}

bool has_scaling(const NiftiHeader& h) {
  return h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
         !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
}

Volume3D to_image(const RawNifti& raw) {
  Volume3D::Data data;
  decode(raw, data);
  if (has_scaling(raw.header)) {
    data = data * raw.header.scl_slope + raw.header.scl_inter;
  }
  return Volume3D(raw.geometry, std::move(data));
}

std::optional<LabelScheme> declared_scheme(const NiftiHeader& h) {
  if (h.intent_code != kIntentLabel || !is_integer_type(h.datatype) || has_scaling(h)) {
    return std::nullopt;
  }
  const std::string name(h.intent_name, strnlen(h.intent_name, sizeof(h.intent_name)));
  try {
    return label_scheme_from_string(name);
  } catch (const Error&) {
    return LabelScheme::Feta7;
  }
}

NiftiHeader base_header(const Geometry& g, NiftiDatatype type) {
  NiftiHeader h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorCode::UnsupportedShape, "dimension exceeds NIfTI-1 limit");
    }
    h.dim[a + 1] = static_cast<std::int16_t>(g.dims[a]);
    h.pixdim[a + 1] = static_cast<float>(g.spacing[a]);
  }
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.pixdim[0] = 1.0f;
  h.datatype = static_cast<std::int16_t>(type);
  h.bitpix = static_cast<std::int16_t>(8 * bytes_per_voxel(h.datatype));
  h.vox_offset = static_cast<float>(kDataOffset);
  h.xyzt_units = 2;  // mm
  h.sform_code = 2;
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(g.affine(0, c));
    h.srow_y[c] = static_cast<float>(g.affine(1, c));
    h.srow_z[c] = static_cast<float>(g.affine(2, c));
  }
  std::memcpy(h.magic, "n+1\0", 4);
  return h;
}

template <typename Disk, typename Src>
std::vector<unsigned char> emit(NiftiHeader h, const Eigen::Array<Src, Eigen::Dynamic, 1>& data) {
  std::vector<unsigned char> bytes(kDataOffset + std::size_t(data.size()) * sizeof(Disk), 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  unsigned char* dst = bytes.data() + kDataOffset;
  if constexpr (std::is_same_v<Disk, Src>) {
    std::memcpy(dst, data.data(), std::size_t(data.size()) * sizeof(Disk));
  } else {
    for (Index i = 0; i < data.size(); ++i) {
      const Disk v = static_cast<Disk>(data[i]);
      std::memcpy(dst + i * sizeof(Disk), &v, sizeof(Disk));
    }
  }
  return bytes;
}

}  // namespace

bool is_gzip_path(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

AnyVolume read_nifti(const std::filesystem::path& path) {
  const RawNifti raw = parse(path);
  if (const auto scheme = declared_scheme(raw.header)) {
    LabelMap::Data data;
    decode(raw, data);
    LabelMap labels(raw.geometry, std::move(data), *scheme);
    try {
      labels.validate_codes();
    } catch (const Error& e) {
      throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    return labels;
  }
  return to_image(raw);
}

Volume3D read_image(const std::filesystem::path& path) {
  return to_image(parse(path));
}

LabelMap read_labels(const std::filesystem::path& path, LabelScheme scheme) {
  const Volume3D values = read_image(path);
  LabelMap::Data codes(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!(v == std::nearbyint(v)) || std::abs(v) > 2e9f) {
      throw Error(ErrorCode::FormatError,
                  path.string() + ": label file holds non-integral value " +
                      std::to_string(v));
    }
    codes[i] = static_cast<std::int32_t>(v);
  }
  LabelMap labels(values.geometry(), std::move(codes), scheme);
  labels.validate_codes();
  return labels;
}

void write_nifti(const Volume3D& volume, const std::filesystem::path& path,
                 bool compress) {
  const NiftiHeader h = base_header(volume.geometry(), NiftiDatatype::Float32);
  write_file_atomic(path, emit<float>(h, volume.data()), compress);
}

void write_nifti(const LabelMap& labels, const std::filesystem::path& path,
                 bool compress) {
  const auto& d = labels.data();
  const bool fits16 =
      d.size() == 0 || (d.minCoeff() >= std::numeric_limits<std::int16_t>::min() &&
                        d.maxCoeff() <= std::numeric_limits<std::int16_t>::max());
  NiftiHeader h = base_header(
      labels.geometry(), fits16 ? NiftiDatatype::Int16 : NiftiDatatype::Int32);
  h.intent_code = kIntentLabel;
  const auto name = to_string(labels.scheme());
  std::memcpy(h.intent_name, name.data(), std::min(name.size(), sizeof(h.intent_name) - 1));
  h.cal_min = static_cast<float>(d.minCoeff());
  h.cal_max = static_cast<float>(d.maxCoeff());
  auto bytes = fits16 ? emit<std::int16_t>(h, d) : emit<std::int32_t>(h, d);
  write_file_atomic(path, bytes, compress);
}

}  // namespace drifts
