#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pats {

/// Writes to a sibling temp file and renames it over `path`, so readers never see
/// a partial file. Creates missing parent directories. Throws IoError.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Whole-file read. Throws IoError naming the path.
std::string read_text(const std::filesystem::path& path);

} // namespace pats
