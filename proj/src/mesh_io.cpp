#include "ava/mesh_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace ava {

namespace {
std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  return f;
}
}  // namespace

void save_obj(const TriMesh& m, const std::filesystem::path& path) {
  auto f = open_out(path, false);
  f.precision(9);
  for (const auto& v : m.vertices) f << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& n : m.normals) f << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  const bool vn = m.has_normals();
  for (const auto& face : m.faces) {
    f << 'f';
    for (int i : face) {
      f << ' ' << i + 1;
      if (vn) f << "//" << i + 1;
    }
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

TriMesh load_obj(const std::filesystem::path& path) {
  auto f = open_in(path, false);
  TriMesh m;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      m.vertices.push_back(v);
    } else if (tag == "vn") {
      Vec3 n;
      ss >> n.x() >> n.y() >> n.z();
      m.normals.push_back(n);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/t", "i//n", "i/t/n" all start with the vertex index.
        idx.push_back(std::stoi(tok) - 1);
      }
      for (size_t i = 2; i < idx.size(); ++i)  // fan-triangulate
        m.faces.push_back({idx[0], int(idx[i - 1]), int(idx[i])});
    }
  }
  if (m.normals.size() != m.vertices.size()) m.normals.clear();
  return m;
}

namespace {
template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
}  // namespace

void save_ply(const TriMesh& m, const std::filesystem::path& path) {
  auto f = open_out(path, true);
  const bool vn = m.has_normals();
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "element vertex " << m.vertices.size() << "\n";
  f << "property float x\nproperty float y\nproperty float z\n";
  if (vn) f << "property float nx\nproperty float ny\nproperty float nz\n";
  f << "element face " << m.faces.size() << "\n";
  f << "property list uchar int vertex_indices\nend_header\n";
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    for (int a = 0; a < 3; ++a) put<float>(f, float(m.vertices[i][a]));
    if (vn)
      for (int a = 0; a < 3; ++a) put<float>(f, float(m.normals[i][a]));
  }
  for (const auto& face : m.faces) {
    put<uint8_t>(f, 3);
    for (int i : face) put<int32_t>(f, i);
  }
  if (!f) throw IoError("write failed: " + path.string());
}

TriMesh load_ply(const std::filesystem::path& path) {
  auto f = open_in(path, true);
  std::string line;
  std::getline(f, line);
  if (line != "ply") throw IoError("not a PLY file: " + path.string());
  size_t n_verts = 0, n_faces = 0;
  std::vector<std::string> vertex_props;
  std::string element;
  bool binary_le = false;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (tag == "element") {
      size_t count;
      ss >> element >> count;
      if (element == "vertex") n_verts = count;
      if (element == "face") n_faces = count;
    } else if (tag == "property" && element == "vertex") {
      std::string type, name;
      ss >> type >> name;
      if (type != "float") throw IoError("unsupported vertex property type: " + type);
      vertex_props.push_back(name);
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!binary_le) throw IoError("only binary little-endian PLY supported");

  TriMesh m;
  m.vertices.resize(n_verts);
  const bool vn = std::find(vertex_props.begin(), vertex_props.end(), "nx") !=
                  vertex_props.end();
  if (vn) m.normals.resize(n_verts);
  for (size_t i = 0; i < n_verts; ++i) {
    Vec3 v = Vec3::Zero(), n = Vec3::Zero();
    for (const auto& prop : vertex_props) {
      const float val = get<float>(f);
      if (prop == "x") v.x() = val;
      else if (prop == "y") v.y() = val;
      else if (prop == "z") v.z() = val;
      else if (prop == "nx") n.x() = val;
      else if (prop == "ny") n.y() = val;
      else if (prop == "nz") n.z() = val;
    }
    m.vertices[i] = v;
    if (vn) m.normals[i] = n;
  }
  m.faces.reserve(n_faces);
  for (size_t i = 0; i < n_faces; ++i) {
    const int count = get<uint8_t>(f);
    std::vector<int> idx(static_cast<size_t>(count));
    for (auto& ix : idx) ix = get<int32_t>(f);
    for (size_t j = 2; j < idx.size(); ++j)
      m.faces.push_back({idx[0], idx[j - 1], idx[j]});
  }
  if (!f) throw IoError("truncated PLY: " + path.string());
  return m;
}

void save_mesh(const TriMesh& m, const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".obj") save_obj(m, path);
  else if (ext == ".ply") save_ply(m, path);
  else throw IoError("unknown mesh extension: " + path.string());
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  throw IoError("unknown mesh extension: " + path.string());
}

void save_skin_weights(const std::vector<SkinWeights>& skin,
                       const std::filesystem::path& path) {
  auto f = open_out(path, true);
  for (const auto& s : skin)
    for (int k = 0; k < kJoints; ++k) put<float>(f, float(s.w[k]));
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<SkinWeights> load_skin_weights(const std::filesystem::path& path) {
  auto f = open_in(path, true);
  f.seekg(0, std::ios::end);
  const auto bytes = size_t(f.tellg());
  f.seekg(0);
  if (bytes % (kJoints * sizeof(float)) != 0)
    throw IoError("skin weight file size not a multiple of K floats");
  std::vector<SkinWeights> skin(bytes / (kJoints * sizeof(float)));
  for (auto& s : skin) {
    Eigen::Matrix<double, kJoints, 1> raw;
    for (int k = 0; k < kJoints; ++k) raw[k] = double(get<float>(f));
    s = SkinWeights::normalized(raw.cwiseMax(0.0));
  }
  return skin;
}

}  // namespace ava
