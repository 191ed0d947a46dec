#pragma once

#include "ava/mesh.hpp"

#include <filesystem>

namespace ava {

// ASCII OBJ: v / vn / f lines.
void save_obj(const TriMesh& m, const std::filesystem::path& path);
TriMesh load_obj(const std::filesystem::path& path);

// Binary little-endian PLY with float32 positions (and normals when
// present); round-trip exact for float32 data.
void save_ply(const TriMesh& m, const std::filesystem::path& path);
TriMesh load_ply(const std::filesystem::path& path);

void save_mesh(const TriMesh& m, const std::filesystem::path& path);  // by extension
TriMesh load_mesh(const std::filesystem::path& path);

// Raw row-major vertex x K float32 little-endian weight block.
void save_skin_weights(const std::vector<SkinWeights>& skin,
                       const std::filesystem::path& path);
std::vector<SkinWeights> load_skin_weights(const std::filesystem::path& path);

}  // namespace ava
