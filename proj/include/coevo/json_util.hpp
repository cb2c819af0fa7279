#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace coevo {

using Json = nlohmann::json;

// Canonical form: object keys sorted, every floating-point number rounded to
// nine significant digits. Integers are untouched.
Json canonicalize(const Json& value);
std::string canonical_dump(const Json& value);

std::string sha256_hex(std::string_view bytes);

// Content hash of the canonical bytes of a JSON value.
std::string content_hash(const Json& value);

std::string hex_encode(std::string_view bytes);
std::string hex_decode(std::string_view hex);

// Helpers that raise ErrorCode::ParseError with the offending field name.
const Json& require(const Json& obj, std::string_view key);
double require_number(const Json& obj, std::string_view key);
long long require_integer(const Json& obj, std::string_view key);
std::string require_string(const Json& obj, std::string_view key);
Json parse_json(std::string_view text);

}  // namespace coevo
