#pragma once

#include <filesystem>
#include <variant>

#include "drifts/volume.hpp"

namespace drifts {

/// Result of reading a NIfTI-1 file whose kind is decided by the header:
/// integer data declared as labels (intent_code 1002, scheme name in
/// intent_name) yields a LabelMap, everything else a Volume3D.
using AnyVolume = std::variant<Volume3D, LabelMap>;

/// NIfTI-1 datatype codes the reader accepts.
enum class NiftiDatatype : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
};

AnyVolume read_nifti(const std::filesystem::path& path);

/// Reads any supported file as float intensities (scl_slope/scl_inter applied).
Volume3D read_image(const std::filesystem::path& path);

/// Reads any supported file as labels of the given scheme. Float files are
/// accepted when every value is integral (common for exported segmentations).
LabelMap read_labels(const std::filesystem::path& path, LabelScheme scheme);

/// Writes `.nii` or, with `compress`, a gzip stream. The file appears
/// atomically (temp file + rename).
void write_nifti(const Volume3D& volume, const std::filesystem::path& path,
                 bool compress);
void write_nifti(const LabelMap& labels, const std::filesystem::path& path,
                 bool compress);

/// True for names ending in ".gz".
bool is_gzip_path(const std::filesystem::path& path);

}  // namespace drifts
