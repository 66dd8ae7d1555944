#pragma once

#include <string>
#include <vector>

namespace art {

// Writes content to a temporary file next to `path` and renames it into
// place, so readers never observe a partially written file.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Fixed printf-style formatting keeps emitted files byte-stable across runs.
std::string fmt_g17(double v);  // round-trips doubles exactly
std::string fmt_g9(double v);   // 9 significant digits (point-cloud files)

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

} // namespace art
