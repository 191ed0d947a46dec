#pragma once

#include "ava/common.hpp"

#include <filesystem>
#include <map>

namespace ava {

// Minimal store-only (uncompressed) ZIP reader/writer, enough for the
// view containers: named binary entries, deterministic layout.
class ZipWriter {
 public:
  explicit ZipWriter(const std::filesystem::path& path);
  ~ZipWriter();
  void add(const std::string& name, const void* data, size_t size);
  void add(const std::string& name, const std::string& text) {
    add(name, text.data(), text.size());
  }
  void add_f32(const std::string& name, const std::vector<float>& values) {
    add(name, values.data(), values.size() * sizeof(float));
  }
  void close();

 private:
  struct Entry {
    std::string name;
    uint32_t crc, size, offset;
  };
  std::filesystem::path path_;
  FILE* f_ = nullptr;
  std::vector<Entry> entries_;
  bool closed_ = false;
};

class ZipReader {
 public:
  explicit ZipReader(const std::filesystem::path& path);
  std::vector<std::string> names() const;
  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  std::vector<char> read(const std::string& name) const;
  std::string read_text(const std::string& name) const;
  std::vector<float> read_f32(const std::string& name) const;

 private:
  std::filesystem::path path_;
  std::map<std::string, std::pair<uint32_t, uint32_t>> entries_;  // offset, size
};

uint32_t crc32(const void* data, size_t n, uint32_t crc = 0);

}  // namespace ava
