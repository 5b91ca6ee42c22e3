#pragma once

/**
 * Weight files: a UTF-8 text manifest plus a flat blob of little-endian
 * float32 values, row-major.
 *
 * Manifest lines:
 *   # key value            metadata (kind, layer count, blob file name, ...)
 *   name d0 d1 ... offset  one tensor: its shape, then its byte offset in the blob
 *
 * Tensors are laid out back to back in manifest order starting at offset 0.
 */

#include "glr/model.hpp"

#include <filesystem>
#include <memory>

namespace glr {

void write_weight_files(const std::filesystem::path& manifest, const WeightBundle& bundle);
WeightBundle read_weight_files(const std::filesystem::path& manifest);

void save_weights(const Model& model, const std::filesystem::path& manifest);
std::unique_ptr<Model> load_weights(const std::filesystem::path& manifest);

/// Blob path used by save_weights: the manifest path with extension ".bin".
std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

} // namespace glr
