#include "ava/tensor_store.hpp"

#include "ava/rng.hpp"

#include <json.hpp>

#include <fstream>

namespace ava {

using nlohmann::json;

static constexpr char kMagic[4] = {'A', 'V', 'T', 'S'};

void save_tensors(const std::map<std::string, Tensor>& tensors,
                  const std::filesystem::path& path, const TensorStoreMeta& meta) {
  json header;
  header["schema"] = 1;
  json jt = json::object();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    jt[name] = {{"shape", t.shape},
                {"offset", offset},
                {"bytes", uint64_t(t.size()) * 4}};
    offset += uint64_t(t.size()) * 4;
  }
  header["tensors"] = jt;
  header["meta"] = meta.entries;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(kMagic, 4);
  const uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& [name, t] : tensors) {
    std::vector<float> buf(t.data.begin(), t.data.end());
    f.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size() * 4));
  }
  if (!f) throw IoError("write failed: " + path.string());
}

std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path,
                                           TensorStoreMeta* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a tensor container: " + path.string());
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  f.read(hs.data(), std::streamsize(hlen));
  const json header = json::parse(hs);
  if (meta) {
    meta->entries.clear();
    if (header.contains("meta"))
      for (const auto& [k, v] : header["meta"].items())
        meta->entries[k] = v.get<std::string>();
  }
  const auto base = std::streamoff(12 + hlen);
  std::map<std::string, Tensor> out;
  for (const auto& [name, jt] : header["tensors"].items()) {
    const std::vector<int> shape = jt["shape"].get<std::vector<int>>();
    const uint64_t offset = jt["offset"].get<uint64_t>();
    Tensor t(shape);
    std::vector<float> buf(static_cast<size_t>(t.size()));
    f.seekg(base + std::streamoff(offset));
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * 4));
    if (!f) throw IoError("truncated tensor container: " + path.string());
    std::copy(buf.begin(), buf.end(), t.data.begin());
    out.emplace(name, std::move(t));
  }
  return out;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for hashing: " + path.string());
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof buf);
    h = fnv1a(buf, size_t(f.gcount()), h);
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", (unsigned long long)h);
  return out;
}

}  // namespace ava
