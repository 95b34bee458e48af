#include "chainaudit/spec_index.hpp"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <thread>

#include "chainaudit/digest.hpp"
#include "chainaudit/error.hpp"
#include "chainaudit/version.hpp"

namespace chainaudit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "CSIX";
constexpr std::size_t kHeaderSize = 4 + 2 + 8;
constexpr std::size_t kDigestSize = 32;
constexpr std::string_view kPodspecSuffix = ".podspec.json";

std::optional<std::string> read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) return std::nullopt;
  return s;
}

std::optional<std::string> scalar_text(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
  if (it->is_number_float()) return it->dump();
  return std::nullopt;
}

json optional_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> optional_from(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

json version_to_json(const PodVersionSpec& v) {
  return json{{"version", v.version},
              {"source_kind", std::string(to_string(v.source_kind))},
              {"source_url", v.source_url},
              {"git_tag", optional_json(v.git_tag)},
              {"git_commit", optional_json(v.git_commit)},
              {"archive_sha", optional_json(v.archive_sha)},
              {"module_name", optional_json(v.module_name)},
              {"header_dir", optional_json(v.header_dir)},
              {"has_prepare_command", v.has_prepare_command}};
}

SourceKind source_kind_from(std::string_view s) {
  if (s == "git") return SourceKind::git;
  if (s == "http_archive") return SourceKind::http_archive;
  if (s == "other") return SourceKind::other;
  throw std::invalid_argument("unknown source kind");
}

PodVersionSpec version_from_json(const json& j) {
  PodVersionSpec v;
  v.version = j.at("version").get<std::string>();
  v.source_kind = source_kind_from(j.at("source_kind").get<std::string>());
  v.source_url = j.at("source_url").get<std::string>();
  v.git_tag = optional_from(j, "git_tag");
  v.git_commit = optional_from(j, "git_commit");
  v.archive_sha = optional_from(j, "archive_sha");
  v.module_name = optional_from(j, "module_name");
  v.header_dir = optional_from(j, "header_dir");
  v.has_prepare_command = j.at("has_prepare_command").get<bool>();
  return v;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> deflate_bytes(std::string_view text) {
  uLongf bound = compressBound(static_cast<uLong>(text.size()));
  std::vector<std::uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, reinterpret_cast<const Bytef*>(text.data()), static_cast<uLong>(text.size()),
                     Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw Error(ErrorCode::IoError, "zlib compression failed");
  out.resize(bound);
  return out;
}

std::string inflate_bytes(std::span<const std::uint8_t> in, std::size_t offset) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw IoErrorAt(offset, "zlib initialisation failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;
  }
  const auto consumed = zs.total_in;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoErrorAt(offset + consumed, "corrupt compressed record stream");
  return out;
}

struct ParsedFile {
  std::string rel;
  std::string pod;
  std::string file_digest;
  std::optional<PodVersionSpec> spec;
  std::vector<std::string> warnings;
};

}  // namespace

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::git: return "git";
    case SourceKind::http_archive: return "http_archive";
    case SourceKind::other: return "other";
  }
  return "other";
}

std::string_view to_string(IntegrityProfile p) {
  switch (p) {
    case IntegrityProfile::all_versions_pinned: return "all_versions_pinned";
    case IntegrityProfile::some_versions_pinned: return "some_versions_pinned";
    case IntegrityProfile::never_pinned: return "never_pinned";
  }
  return "never_pinned";
}

bool is_pinned(const PodVersionSpec& v) { return v.git_commit.has_value() || v.archive_sha.has_value(); }

std::set<std::string> effective_framework_names(const PodRecord& record) {
  std::set<std::string> names;
  for (const auto& v : record.versions) {
    if (v.module_name && !v.module_name->empty()) names.insert(*v.module_name);
    else if (v.header_dir && !v.header_dir->empty()) names.insert(*v.header_dir);
    else names.insert(record.name);
  }
  if (record.versions.empty()) names.insert(record.name);
  return names;
}

PodRecord make_pod_record(std::string name, std::vector<PodVersionSpec> versions) {
  std::stable_sort(versions.begin(), versions.end(), [](const PodVersionSpec& a, const PodVersionSpec& b) {
    return version_text_less(a.version, b.version);
  });
  auto dup = std::unique(versions.begin(), versions.end(),
                         [](const PodVersionSpec& a, const PodVersionSpec& b) { return a.version == b.version; });
  versions.erase(dup, versions.end());
  PodRecord r{std::move(name), std::move(versions), {}};
  r.effective_framework_names = effective_framework_names(r);
  return r;
}

IntegrityProfile integrity_profile(const PodRecord& record) {
  std::size_t pinned = std::count_if(record.versions.begin(), record.versions.end(), is_pinned);
  if (pinned == 0) return IntegrityProfile::never_pinned;
  if (pinned == record.versions.size()) return IntegrityProfile::all_versions_pinned;
  return IntegrityProfile::some_versions_pinned;
}

SpecIndex make_index(std::vector<PodRecord> records, Timestamp built_at, std::string source_tree_digest) {
  SpecIndex index;
  index.built_at = built_at;
  index.source_tree_digest = std::move(source_tree_digest);
  for (auto& r : records) {
    for (const auto& fw : r.effective_framework_names) index.framework_name_index[fw].insert(r.name);
    std::string key = r.name;
    index.pods.insert_or_assign(std::move(key), std::move(r));
  }
  return index;
}

bool framework_index_consistent(const SpecIndex& index) {
  std::map<std::string, std::set<std::string>> expected;
  for (const auto& [name, record] : index.pods) {
    if (record.effective_framework_names != effective_framework_names(record)) return false;
    for (const auto& fw : record.effective_framework_names) expected[fw].insert(name);
  }
  return expected == index.framework_name_index;
}

std::set<std::string> lookup_framework(const SpecIndex& index, std::string_view framework_name) {
  auto it = index.framework_name_index.find(std::string(framework_name));
  return it == index.framework_name_index.end() ? std::set<std::string>{} : it->second;
}

const PodRecord* find_pod(const SpecIndex& index, std::string_view pod_name) {
  auto it = index.pods.find(std::string(pod_name));
  return it == index.pods.end() ? nullptr : &it->second;
}

PodVersionSpec parse_podspec_json(std::string_view text, std::vector<std::string>* warnings) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedJson, "podspec is not a JSON object");
  PodVersionSpec v;
  auto version = scalar_text(doc, "version");
  if (!version || version->empty()) throw Error(ErrorCode::MalformedJson, "podspec has no version");
  v.version = *version;

  if (auto src = doc.find("source"); src != doc.end() && src->is_object()) {
    if (auto git = scalar_text(*src, "git")) {
      v.source_kind = SourceKind::git;
      v.source_url = *git;
      v.git_tag = scalar_text(*src, "tag");
      if (auto commit = scalar_text(*src, "commit")) {
        if (is_commit_hash(*commit)) v.git_commit = *commit;
        else if (warnings) warnings->push_back("ignoring malformed commit '" + *commit + "'");
      }
    } else if (auto http = scalar_text(*src, "http")) {
      v.source_kind = SourceKind::http_archive;
      v.source_url = *http;
      if (auto sha = scalar_text(*src, "sha256")) v.archive_sha = *sha;
      else if (auto sha1 = scalar_text(*src, "sha1")) v.archive_sha = *sha1;
    } else {
      for (const char* key : {"svn", "hg", "path"}) {
        if (auto url = scalar_text(*src, key)) {
          v.source_url = *url;
          break;
        }
      }
    }
  }
  if (v.source_kind != SourceKind::other && v.source_url.empty()) {
    throw Error(ErrorCode::MalformedJson, "podspec source URL is empty");
  }
  v.module_name = scalar_text(doc, "module_name");
  v.header_dir = scalar_text(doc, "header_dir");
  auto prep = doc.find("prepare_command");
  v.has_prepare_command = prep != doc.end() && !prep->is_null() && !(prep->is_string() && prep->get<std::string>().empty());
  return v;
}

Timestamp system_now() { return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()); }

IndexBuildResult build_index(const fs::path& specs_tree, const Clock& clock, unsigned threads) {
  std::error_code ec;
  if (!fs::is_directory(specs_tree, ec)) throw Error(ErrorCode::NotADirectory, specs_tree.string() + " is not a directory");
  fs::path root = specs_tree;
  if (fs::is_directory(root / "Specs", ec)) root /= "Specs";

  std::vector<fs::path> files;
  try {
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
         it != fs::recursive_directory_iterator(); ++it) {
      if (it->path().filename() == ".git" && it->is_directory()) {
        it.disable_recursion_pending();
        continue;
      }
      const std::string fname = it->path().filename().string();
      if (it->is_regular_file() && fname.size() > kPodspecSuffix.size() && fname.ends_with(kPodspecSuffix)) {
        files.push_back(it->path());
      }
    }
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
  if (files.empty()) throw Error(ErrorCode::EmptyTree, "no *.podspec.json files under " + root.string());

  std::vector<ParsedFile> parsed(files.size());
  auto work = [&](std::size_t i) {
    ParsedFile& out = parsed[i];
    fs::path rel = files[i].lexically_relative(root);
    out.rel = rel.generic_string();
    auto parent = rel.parent_path();
    if (parent.empty() || parent.parent_path().empty()) {
      out.warnings.push_back(out.rel + ": not in <Pod>/<Version>/ layout");
    } else {
      out.pod = parent.parent_path().filename().string();
    }
    auto text = read_text(files[i]);
    if (!text) {
      out.warnings.push_back(out.rel + ": unreadable");
      return;
    }
    out.file_digest = to_hex(sha256(*text));
    if (out.pod.empty()) return;
    try {
      std::vector<std::string> w;
      PodVersionSpec spec = parse_podspec_json(*text, &w);
      for (auto& s : w) out.warnings.push_back(out.rel + ": " + s);
      const std::string dir_version = parent.filename().string();
      if (spec.version != dir_version) {
        out.warnings.push_back(out.rel + ": version " + spec.version + " differs from directory " + dir_version);
      }
      out.spec = std::move(spec);
    } catch (const Error& e) {
      out.warnings.push_back(out.rel + ": " + e.what());
    }
  };

  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, files.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < files.size(); i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();

  std::sort(parsed.begin(), parsed.end(), [](const ParsedFile& a, const ParsedFile& b) { return a.rel < b.rel; });

  IndexBuildResult result;
  Sha256Hasher tree;
  std::map<std::string, std::vector<PodVersionSpec>> by_pod;
  for (auto& p : parsed) {
    if (!p.file_digest.empty()) {
      tree.update(p.rel);
      tree.update(std::string_view("\0", 1));
      tree.update(p.file_digest);
      tree.update("\n");
    }
    for (auto& w : p.warnings) result.warnings.push_back(std::move(w));
    if (!p.spec) {
      ++result.skipped;
      continue;
    }
    auto& list = by_pod[p.pod];
    bool dup = std::any_of(list.begin(), list.end(), [&](const PodVersionSpec& v) { return v.version == p.spec->version; });
    if (dup) {
      result.warnings.push_back(p.rel + ": duplicate version " + p.spec->version + " skipped");
      ++result.skipped;
      continue;
    }
    list.push_back(std::move(*p.spec));
  }
  if (by_pod.empty()) throw Error(ErrorCode::EmptyTree, "no parseable podspecs under " + root.string());

  std::vector<PodRecord> records;
  for (auto& [name, versions] : by_pod) records.push_back(make_pod_record(name, std::move(versions)));
  result.index = make_index(std::move(records), clock(), to_hex(tree.finish()));
  return result;
}

std::vector<std::uint8_t> serialize_index(const SpecIndex& index) {
  std::string stream;
  json header{{"record", "header"},
              {"built_at", format_timestamp(index.built_at)},
              {"source_tree_digest", index.source_tree_digest},
              {"pod_count", index.pods.size()}};
  stream += header.dump() + "\n";
  for (const auto& [name, record] : index.pods) {
    json versions = json::array();
    for (const auto& v : record.versions) versions.push_back(version_to_json(v));
    json j{{"record", "pod"},
           {"name", record.name},
           {"versions", std::move(versions)},
           {"effective_framework_names", record.effective_framework_names}};
    stream += j.dump() + "\n";
  }

  std::vector<std::uint8_t> payload = deflate_bytes(stream);
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_le(out, kIndexFormatVersion, 2);
  put_le(out, payload.size(), 8);
  out.insert(out.end(), payload.begin(), payload.end());
  Sha256 digest = sha256(out);
  out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

SpecIndex deserialize_index(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size()) throw IoErrorAt(bytes.size(), "truncated before magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::FormatVersionMismatch, "not a spec index (bad magic)");
  }
  if (bytes.size() < kHeaderSize) throw IoErrorAt(bytes.size(), "truncated header");
  const auto version = get_le(bytes, 4, 2);
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::FormatVersionMismatch, "index format version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kIndexFormatVersion));
  }
  const std::uint64_t payload_len = get_le(bytes, 6, 8);
  const std::uint64_t available = bytes.size() - kHeaderSize;
  if (payload_len > available || available - payload_len < kDigestSize) {
    throw IoErrorAt(bytes.size(), "truncated: need " + std::to_string(kHeaderSize + payload_len + kDigestSize) +
                                      " bytes, have " + std::to_string(bytes.size()));
  }
  const std::size_t digest_at = kHeaderSize + payload_len;
  if (bytes.size() != digest_at + kDigestSize) throw IoErrorAt(digest_at + kDigestSize, "trailing bytes after digest");
  Sha256 expect = sha256(bytes.first(digest_at));
  if (!std::equal(expect.begin(), expect.end(), bytes.begin() + digest_at)) {
    throw IoErrorAt(digest_at, "digest mismatch");
  }

  std::string stream = inflate_bytes(bytes.subspan(kHeaderSize, payload_len), kHeaderSize);
  auto lines = split_lines(stream);
  if (lines.empty()) throw IoErrorAt(kHeaderSize, "empty record stream");
  try {
    json header = json::parse(lines[0]);
    if (header.at("record") != "header") throw IoErrorAt(kHeaderSize, "first record is not a header");
    Timestamp built_at;
    if (!parse_timestamp(header.at("built_at").get<std::string>(), built_at)) {
      throw IoErrorAt(kHeaderSize, "bad built_at timestamp");
    }
    std::vector<PodRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      json j = json::parse(lines[i]);
      PodRecord r;
      r.name = j.at("name").get<std::string>();
      for (const auto& v : j.at("versions")) r.versions.push_back(version_from_json(v));
      r.effective_framework_names = j.at("effective_framework_names").get<std::set<std::string>>();
      records.push_back(std::move(r));
    }
    if (records.size() != header.at("pod_count").get<std::size_t>()) {
      throw IoErrorAt(kHeaderSize, "pod count does not match header");
    }
    return make_index(std::move(records), built_at, header.at("source_tree_digest").get<std::string>());
  } catch (const json::exception& e) {
    throw IoErrorAt(kHeaderSize, std::string("malformed record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoErrorAt(kHeaderSize, std::string("malformed record: ") + e.what());
  }
}

void save_index(const SpecIndex& index, const fs::path& path) {
  auto bytes = serialize_index(index);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

SpecIndex load_index(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read error on " + path.string());
  return deserialize_index(bytes);
}

}  // namespace chainaudit
