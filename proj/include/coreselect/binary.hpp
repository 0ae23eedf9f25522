#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "coreselect/error.hpp"

namespace coreselect::binary {

// Little-endian primitives shared by the .csel and .cpca sections.

template <typename T>
    requires std::is_integral_v<T>
void write_le(std::ostream& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    out.write(bytes, sizeof(T));
}

inline void write_f64(std::ostream& out, double value) {
    write_le(out, std::bit_cast<std::uint64_t>(value));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
    requires std::is_integral_v<T>
T read_le(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), Errc::format,
            std::string("truncated file while reading ") + what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
    return static_cast<T>(u);
}

inline double read_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(read_le<std::uint64_t>(in, what));
}

inline std::string read_string(std::istream& in, const char* what, std::uint32_t max_len = 1u << 20) {
    const auto len = read_le<std::uint32_t>(in, what);
    require(len <= max_len, Errc::format, std::string("implausible string length in ") + what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    require(in.gcount() == static_cast<std::streamsize>(len), Errc::format,
            std::string("truncated file while reading ") + what);
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4]{};
    in.read(got, 4);
    require(in.gcount() == 4 && std::memcmp(got, magic, 4) == 0, Errc::format,
            std::string("bad magic bytes, expected ") + magic);
}

}  // namespace coreselect::binary
