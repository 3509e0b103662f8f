#pragma once

#include <string>
#include <string_view>

namespace linkage {

/// FIPS 180-4 SHA-256, hex digest. Used for the run manifest so third
/// parties can verify outputs without extra tooling.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace linkage
