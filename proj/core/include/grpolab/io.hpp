#pragma once

#include <string>

namespace grpolab {

std::string read_file(const std::string& path);

/// Write via a sibling temp file plus rename so readers never observe a
/// partial artifact.
void atomic_write_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

void ensure_parent_dir(const std::string& path);

}  // namespace grpolab
