#pragma once

#include <filesystem>

#include "sparsect/volume.hpp"

namespace sparsect {

/// On-disk format version written into every sidecar.
inline constexpr const char* kFormatVersion = "sparsect-1";

/// Writes `<base>.f32` (little-endian float32, x fastest) and `<base>.json`.
/// A trailing `.f32` or `.json` extension on `base` is ignored.
void save_volume(const Volume3& v, const std::filesystem::path& base);
Volume3 load_volume(const std::filesystem::path& base);

/// Writes `<base>.u16` (little-endian uint16) and `<base>.json` with the label table.
void save_labels(const LabelVolume& lv, const std::filesystem::path& base);
LabelVolume load_labels(const std::filesystem::path& base);

/// Strips a known payload/sidecar extension so callers may pass either form.
std::filesystem::path artifact_base(const std::filesystem::path& p);

}  // namespace sparsect
