#pragma once

#include "ava/tensor.hpp"

#include <filesystem>
#include <map>

namespace ava {

// Single binary container of named float32 tensors: a JSON header with
// names, shapes, and byte offsets, followed by raw little-endian data.
// Shared checkpoint format for all trainable modules.
struct TensorStoreMeta {
  std::map<std::string, std::string> entries;
};

void save_tensors(const std::map<std::string, Tensor>& tensors,
                  const std::filesystem::path& path,
                  const TensorStoreMeta& meta = {});

std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path,
                                           TensorStoreMeta* meta = nullptr);

// FNV-1a hash of a file's bytes, hex-encoded; used to pin checkpoints in
// reconstruction metadata.
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace ava
