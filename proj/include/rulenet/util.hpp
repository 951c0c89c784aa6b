#pragma once

#include <cstdint>
#include <string>

namespace rulenet {

// Write to a temp file in the target directory, then rename into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Quote a CSV field when it contains separators/quotes/newlines.
std::string csv_quote(const std::string& field);

// splitmix64 mix; used to derive independent sub-seeds from (seed, tag).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

} // namespace rulenet
