#pragma once

#include "clab/errors.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

// Little-endian stream helpers shared by the checkpoint and dataset formats.
// Byte order is fixed regardless of host endianness.

namespace clab::io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(b), 4);
    if (!os) {
        throw IoError("write failed (u32)");
    }
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(b), 8);
    if (!os) {
        throw IoError("write failed (u64)");
    }
}

inline void write_f64(std::ostream& os, double v) {
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) {
        throw IoError("read failed (u32): truncated file");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) {
        throw IoError("read failed (u64): truncated file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

inline double read_f64(std::istream& is) {
    return std::bit_cast<double>(read_u64(is));
}

inline void write_magic(std::ostream& os, const char magic[4]) {
    os.write(magic, 4);
    if (!os) {
        throw IoError("write failed (magic)");
    }
}

inline void read_magic(std::istream& is, const char expect[4], const char* what) {
    char got[4];
    is.read(got, 4);
    if (!is || got[0] != expect[0] || got[1] != expect[1] || got[2] != expect[2] ||
        got[3] != expect[3]) {
        throw IoError(std::string(what) + ": bad magic");
    }
}

inline std::uint64_t fnv1a(const unsigned char* p, std::size_t n,
                           std::uint64_t h = 14695981039346656037ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace clab::io
