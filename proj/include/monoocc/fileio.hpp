#pragma once

#include <filesystem>
#include <vector>

namespace monoocc {

/// Whole-file read; throws MissingFile / IoFailure naming the path.
std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace monoocc
