#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mist {

/// Writes `content` to a sibling temp file, then renames it over `path`.
/// The parent directory must already exist.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over `text`.
std::string short_hash(std::string_view text);

}  // namespace mist
