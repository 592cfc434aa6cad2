#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace stress {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; returns false on junk or empty input.
bool parse_double(std::string_view text, double& out);

std::vector<std::string_view> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown on the caller's thread (lowest index wins).
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

unsigned default_jobs();

}  // namespace stress
