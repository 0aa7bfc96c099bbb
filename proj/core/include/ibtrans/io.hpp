#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ibtrans {

/// Raised on malformed input files; message carries source name and line.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Decimal with 12 significant digits; stable across runs so replay diffs
/// stay meaningful.
std::string format_g12(double v);

/// Quotes a CSV field when it contains commas, quotes or newlines.
std::string csv_escape(const std::string& field);

/// FNV-1a 64-bit content hash, as fixed-width hex.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes every staged file (name -> bytes) into `dir`, creating it if
/// needed. Files land via temp-and-rename, and nothing is written until this
/// call, so failed runs leave no partial outputs.
void commit_outputs(const std::filesystem::path& dir,
                    const std::map<std::string, std::string>& outputs);

}  // namespace ibtrans
