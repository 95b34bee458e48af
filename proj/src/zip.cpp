#include "chainaudit/zip.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;
constexpr std::uint32_t kMaxEntrySize = 1u << 30;

[[noreturn]] void bad(const std::string& what, std::size_t offset) {
  throw Error(ErrorCode::MalformedArchive, what + " at byte offset " + std::to_string(offset));
}

struct Cursor {
  std::span<const std::uint8_t> data;

  std::uint32_t le(std::size_t pos, std::size_t n) const {
    if (pos > data.size() || n > data.size() - pos) bad("read past end of archive", pos);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    return v;
  }
};

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t expected, std::size_t offset) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) bad("inflate initialisation failed", offset);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) bad("corrupt deflate stream", offset);
  return out;
}

}  // namespace

std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> archive) {
  Cursor c{archive};
  if (archive.size() < 22) bad("too short for a zip archive", archive.size());

  std::size_t eocd = std::string::npos;
  const std::size_t lowest = archive.size() > 22 + 0xFFFF ? archive.size() - 22 - 0xFFFF : 0;
  for (std::size_t pos = archive.size() - 22 + 1; pos-- > lowest;) {
    if (c.le(pos, 4) == kEndOfCentralDir) {
      eocd = pos;
      break;
    }
  }
  if (eocd == std::string::npos) bad("no end-of-central-directory record", archive.size());

  const std::uint32_t count = c.le(eocd + 10, 2);
  const std::uint32_t dir_offset = c.le(eocd + 16, 4);
  if (dir_offset == 0xFFFFFFFF || count == 0xFFFF) bad("zip64 archives are not supported", eocd);

  std::vector<ZipEntry> entries;
  std::size_t pos = dir_offset;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (c.le(pos, 4) != kCentralHeader) bad("bad central directory header", pos);
    const std::uint32_t flags = c.le(pos + 8, 2);
    const std::uint32_t method = c.le(pos + 10, 2);
    const std::uint32_t comp_size = c.le(pos + 20, 4);
    const std::uint32_t size = c.le(pos + 24, 4);
    const std::uint32_t name_len = c.le(pos + 28, 2);
    const std::uint32_t extra_len = c.le(pos + 30, 2);
    const std::uint32_t comment_len = c.le(pos + 32, 2);
    const std::uint32_t local = c.le(pos + 42, 4);
    if (pos + 46 + name_len > archive.size()) bad("entry name past end", pos);

    ZipEntry entry;
    entry.name.assign(reinterpret_cast<const char*>(archive.data() + pos + 46), name_len);
    entry.is_directory = !entry.name.empty() && entry.name.back() == '/';
    if (flags & 0x1) bad("encrypted entry " + entry.name, pos);
    if (comp_size == 0xFFFFFFFF || size == 0xFFFFFFFF) bad("zip64 entry " + entry.name, pos);
    if (size > kMaxEntrySize) bad("entry too large " + entry.name, pos);

    if (c.le(local, 4) != kLocalHeader) bad("bad local header", local);
    const std::size_t data_at = local + 30 + c.le(local + 26, 2) + c.le(local + 28, 2);
    if (data_at > archive.size() || comp_size > archive.size() - data_at) bad("entry data past end", local);
    auto body = archive.subspan(data_at, comp_size);
    if (method == 0) {
      if (comp_size != size) bad("stored entry size mismatch", local);
      entry.contents.assign(body.begin(), body.end());
    } else if (method == 8) {
      entry.contents = inflate_raw(body, size, data_at);
    } else {
      bad("unsupported compression method " + std::to_string(method), pos);
    }
    entries.push_back(std::move(entry));
    pos += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

void extract_zip(const std::filesystem::path& archive, const std::filesystem::path& destination) {
  namespace fs = std::filesystem;
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + archive.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  for (const auto& entry : read_zip(bytes)) {
    fs::path rel = fs::path(entry.name).lexically_normal();
    if (rel.empty() || rel.is_absolute() || rel.has_root_name() || *rel.begin() == "..") {
      throw Error(ErrorCode::MalformedArchive, "entry escapes destination: " + entry.name);
    }
    fs::path target = destination / rel;
    std::error_code ec;
    if (entry.is_directory) {
      fs::create_directories(target, ec);
      continue;
    }
    fs::create_directories(target.parent_path(), ec);
    std::ofstream out(target, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + target.string());
    out.write(reinterpret_cast<const char*>(entry.contents.data()), static_cast<std::streamsize>(entry.contents.size()));
  }
}

}  // namespace chainaudit
