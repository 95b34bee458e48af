#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chainaudit {

struct ZipEntry {
  std::string name;  // as stored, '/' separated
  std::vector<std::uint8_t> contents;
  bool is_directory = false;
};

/// Reads every entry of a zip archive held in memory. Stored and deflated
/// entries are supported; zip64 and encrypted entries raise
/// Error{MalformedArchive}.
std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> archive);

/// Extracts an `.ipa` (or any zip) below `destination`. Entry names that
/// would escape the destination are rejected.
void extract_zip(const std::filesystem::path& archive, const std::filesystem::path& destination);

}  // namespace chainaudit
