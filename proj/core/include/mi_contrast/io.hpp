#pragma once

#include <filesystem>
#include <string>

namespace mic {

// Writes via a temp file in the same directory, then renames, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace mic
