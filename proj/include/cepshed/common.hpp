#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cepshed {

using TypeId = int;

// Attribute payload of an event: ordered list of key/value pairs. Small
// enough that linear lookup beats a map.
using AttrValue = std::variant<double, std::string>;
using AttrMap = std::vector<std::pair<std::string, AttrValue>>;

inline const AttrValue* find_attr(const AttrMap& attrs, const std::string& key) {
    for (const auto& [k, v] : attrs)
        if (k == key) return &v;
    return nullptr;
}

inline std::string attr_to_string(const AttrValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v));
    return buf;
}

// FNV-1a, 64 bit. Used wherever a hash must be stable across platforms
// and standard-library implementations (trace type mapping, rng streams).
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent, reproducible rng stream derived from a run seed and a label.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, const std::string& stream) {
    return std::mt19937_64(mix64(seed ^ fnv1a(stream)));
}

struct OverloadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cepshed
