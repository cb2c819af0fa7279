#include "coevo/json_util.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <openssl/evp.h>

#include "coevo/error.hpp"

namespace coevo {

namespace {

double round_significant(double v) {
    if (!std::isfinite(v)) return v;
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.9g", v);
    return std::strtod(buf.data(), nullptr);
}

}  // namespace

Json canonicalize(const Json& value) {
    switch (value.type()) {
    case Json::value_t::object: {
        Json out = Json::object();
        for (const auto& [k, v] : value.items()) out[k] = canonicalize(v);
        return out;
    }
    case Json::value_t::array: {
        Json out = Json::array();
        for (const auto& v : value) out.push_back(canonicalize(v));
        return out;
    }
    case Json::value_t::number_float:
        return round_significant(value.get<double>());
    default:
        return value;
    }
}

std::string canonical_dump(const Json& value) { return canonicalize(value).dump(); }

std::string hex_encode(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0xF]);
    }
    return out;
}

std::string hex_decode(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex string");
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::ParseError, "invalid hex digit");
        out.push_back(static_cast<char>(hi << 4 | lo));
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::IoError, "sha256 failed");
    return hex_encode({reinterpret_cast<const char*>(digest.data()), len});
}

std::string content_hash(const Json& value) { return sha256_hex(canonical_dump(value)); }

const Json& require(const Json& obj, std::string_view key) {
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, "expected a JSON object");
    auto it = obj.find(key);
    if (it == obj.end())
        throw Error(ErrorCode::ParseError, "missing field '" + std::string(key) + "'");
    return *it;
}

double require_number(const Json& obj, std::string_view key) {
    const Json& v = require(obj, key);
    if (!v.is_number())
        throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

long long require_integer(const Json& obj, std::string_view key) {
    const Json& v = require(obj, key);
    if (!v.is_number_integer())
        throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' must be an integer");
    return v.get<long long>();
}

std::string require_string(const Json& obj, std::string_view key) {
    const Json& v = require(obj, key);
    if (!v.is_string())
        throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

}  // namespace coevo
