#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace bncred {

// Variable sets are bitmasks over variable indices; the toolkit supports up to
// 63 variables, far beyond the exact-solver capacity anyway.
using mask_t = std::uint64_t;

inline constexpr mask_t bit(int i) { return mask_t{1} << i; }

inline constexpr bool has_bit(mask_t m, int i) { return (m >> i) & mask_t{1}; }

inline int popcount(mask_t m) { return std::popcount(m); }

inline mask_t full_mask(int n) {
    return n >= 64 ? ~mask_t{0} : (mask_t{1} << n) - 1;
}

// Removes variable i's slot from a mask over n variables, producing a compact
// index over the remaining n-1 variables (used for per-variable subset tables).
inline mask_t squeeze_mask(mask_t m, int i) {
    const mask_t low = m & (bit(i) - 1);
    const mask_t high = (m >> (i + 1)) << i;
    return low | high;
}

// Inverse of squeeze_mask: re-inserts a zero slot at position i.
inline mask_t unsqueeze_mask(mask_t m, int i) {
    const mask_t low = m & (bit(i) - 1);
    const mask_t high = (m >> i) << (i + 1);
    return low | high;
}

inline std::vector<int> mask_to_indices(mask_t m) {
    std::vector<int> out;
    for (int i = 0; m != 0; ++i, m >>= 1)
        if (m & 1) out.push_back(i);
    return out;
}

inline mask_t indices_to_mask(const std::vector<int>& idx) {
    mask_t m = 0;
    for (int i : idx) m |= bit(i);
    return m;
}

// ---------------------------------------------------------------------------
// Error taxonomy.  The CLI maps these onto stable exit codes:
//   config_error   -> 2 (usage / configuration)
//   input_error    -> 3 (malformed or unusable input content)
//   capacity_error -> 4 (instance exceeds configured limits)
// ---------------------------------------------------------------------------

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class parse_error : public input_error {
public:
    parse_error(const std::string& msg, std::size_t line)
        : input_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

class lookup_error : public std::runtime_error {
public:
    explicit lookup_error(const std::string& msg) : std::runtime_error(msg) {}
};

class invalid_query : public std::logic_error {
public:
    explicit invalid_query(const std::string& msg) : std::logic_error(msg) {}
};

// ---------------------------------------------------------------------------
// Shortest round-trip decimal formatting.  Equality across a write/read cycle
// must be bit-exact, so all serialized reals go through these two helpers.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw parse_error("malformed real number '" + s + "'", line);
    return v;
}

inline std::uint64_t parse_uint(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw parse_error("malformed integer '" + s + "'", line);
    return v;
}

}  // namespace bncred
