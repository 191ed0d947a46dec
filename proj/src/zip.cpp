#include "ava/zip.hpp"

#include <cstdio>
#include <cstring>

namespace ava {

uint32_t crc32(const void* data, size_t n, uint32_t crc) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(data);
  crc = ~crc;
  for (size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xff] ^ (crc >> 8);
  return ~crc;
}

namespace {
void w16(FILE* f, uint16_t v) { fwrite(&v, 2, 1, f); }
void w32(FILE* f, uint32_t v) { fwrite(&v, 4, 1, f); }
}  // namespace

ZipWriter::ZipWriter(const std::filesystem::path& path) : path_(path) {
  f_ = std::fopen(path.string().c_str(), "wb");
  if (!f_) throw IoError("cannot open for writing: " + path.string());
}

ZipWriter::~ZipWriter() {
  if (!closed_ && f_) {
    std::fclose(f_);
  }
}

void ZipWriter::add(const std::string& name, const void* data, size_t size) {
  Entry e;
  e.name = name;
  e.crc = crc32(data, size);
  e.size = uint32_t(size);
  e.offset = uint32_t(std::ftell(f_));
  // Local file header.
  w32(f_, 0x04034b50u);
  w16(f_, 20);      // version needed
  w16(f_, 0);       // flags
  w16(f_, 0);       // method: store
  w16(f_, 0);       // mod time (fixed for determinism)
  w16(f_, 0x21);    // mod date (1980-01-01)
  w32(f_, e.crc);
  w32(f_, e.size);  // compressed
  w32(f_, e.size);  // uncompressed
  w16(f_, uint16_t(name.size()));
  w16(f_, 0);  // extra len
  fwrite(name.data(), 1, name.size(), f_);
  fwrite(data, 1, size, f_);
  entries_.push_back(e);
}

void ZipWriter::close() {
  if (closed_) return;
  const uint32_t cd_start = uint32_t(std::ftell(f_));
  for (const auto& e : entries_) {
    w32(f_, 0x02014b50u);
    w16(f_, 20);  // made by
    w16(f_, 20);  // needed
    w16(f_, 0);
    w16(f_, 0);
    w16(f_, 0);
    w16(f_, 0x21);
    w32(f_, e.crc);
    w32(f_, e.size);
    w32(f_, e.size);
    w16(f_, uint16_t(e.name.size()));
    w16(f_, 0);
    w16(f_, 0);
    w16(f_, 0);
    w16(f_, 0);
    w32(f_, 0);
    w32(f_, e.offset);
    fwrite(e.name.data(), 1, e.name.size(), f_);
  }
  const uint32_t cd_size = uint32_t(std::ftell(f_)) - cd_start;
  w32(f_, 0x06054b50u);
  w16(f_, 0);
  w16(f_, 0);
  w16(f_, uint16_t(entries_.size()));
  w16(f_, uint16_t(entries_.size()));
  w32(f_, cd_size);
  w32(f_, cd_start);
  w16(f_, 0);
  const bool ok = std::fflush(f_) == 0;
  std::fclose(f_);
  closed_ = true;
  if (!ok) throw IoError("write failed: " + path_.string());
}

ZipReader::ZipReader(const std::filesystem::path& path) : path_(path) {
  FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open for reading: " + path.string());
  // Find end-of-central-directory (no comment: last 22 bytes).
  std::fseek(f, -22, SEEK_END);
  unsigned char eocd[22];
  if (std::fread(eocd, 1, 22, f) != 22 || std::memcmp(eocd, "PK\x05\x06", 4) != 0) {
    std::fclose(f);
    throw IoError("not a supported zip (missing EOCD): " + path.string());
  }
  uint16_t count;
  uint32_t cd_start;
  std::memcpy(&count, eocd + 10, 2);
  std::memcpy(&cd_start, eocd + 16, 4);
  std::fseek(f, long(cd_start), SEEK_SET);
  for (int i = 0; i < count; ++i) {
    unsigned char h[46];
    if (std::fread(h, 1, 46, f) != 46 || std::memcmp(h, "PK\x01\x02", 4) != 0) {
      std::fclose(f);
      throw IoError("corrupt central directory: " + path.string());
    }
    uint16_t name_len, extra_len, comment_len;
    uint32_t size, offset;
    std::memcpy(&size, h + 24, 4);
    std::memcpy(&name_len, h + 28, 2);
    std::memcpy(&extra_len, h + 30, 2);
    std::memcpy(&comment_len, h + 32, 2);
    std::memcpy(&offset, h + 42, 4);
    std::string name(name_len, '\0');
    if (std::fread(name.data(), 1, name_len, f) != name_len) {
      std::fclose(f);
      throw IoError("corrupt zip entry name: " + path.string());
    }
    std::fseek(f, extra_len + comment_len, SEEK_CUR);
    entries_[name] = {offset, size};
  }
  std::fclose(f);
}

std::vector<std::string> ZipReader::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<char> ZipReader::read(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end())
    throw IoError("zip entry not found: " + name + " in " + path_.string());
  FILE* f = std::fopen(path_.string().c_str(), "rb");
  if (!f) throw IoError("cannot open for reading: " + path_.string());
  std::fseek(f, long(it->second.first), SEEK_SET);
  unsigned char h[30];
  if (std::fread(h, 1, 30, f) != 30 || std::memcmp(h, "PK\x03\x04", 4) != 0) {
    std::fclose(f);
    throw IoError("corrupt local header: " + path_.string());
  }
  uint16_t name_len, extra_len;
  std::memcpy(&name_len, h + 26, 2);
  std::memcpy(&extra_len, h + 28, 2);
  std::fseek(f, name_len + extra_len, SEEK_CUR);
  std::vector<char> data(it->second.second);
  if (!data.empty() && std::fread(data.data(), 1, data.size(), f) != data.size()) {
    std::fclose(f);
    throw IoError("truncated zip entry: " + name);
  }
  std::fclose(f);
  return data;
}

std::string ZipReader::read_text(const std::string& name) const {
  const auto data = read(name);
  return std::string(data.begin(), data.end());
}

std::vector<float> ZipReader::read_f32(const std::string& name) const {
  const auto data = read(name);
  if (data.size() % 4 != 0) throw IoError("f32 entry size not multiple of 4: " + name);
  std::vector<float> out(data.size() / 4);
  std::memcpy(out.data(), data.data(), data.size());
  return out;
}

}  // namespace ava
