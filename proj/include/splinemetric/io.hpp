#pragma once

#include <string>

namespace splinemetric {

/// Writes via a temp file in the same directory plus an atomic rename, so an
/// error never leaves a partial output behind.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace splinemetric
