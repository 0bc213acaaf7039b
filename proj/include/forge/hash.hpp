#pragma once

#include <string>
#include <string_view>

namespace forge {

/// SHA-256 of the input bytes, lowercase hex (64 chars).
std::string sha256_hex(std::string_view data);

/// Hash of several fields, each length-prefixed so that field boundaries
/// cannot be shifted to produce collisions.
std::string digest_fields(std::initializer_list<std::string_view> fields);

}  // namespace forge
