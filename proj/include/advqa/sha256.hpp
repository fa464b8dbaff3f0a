#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace advqa {

// FIPS 180-4 SHA-256. Lowercase hex digest of the input bytes.
std::string sha256_hex(std::string_view data);

}  // namespace advqa
