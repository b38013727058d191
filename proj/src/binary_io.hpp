#pragma once

// Little-endian helpers shared by the persisted model and index formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "tct/error.hpp"

namespace tct::detail {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void write_pod(std::ostream& out, T value)
{
    out.write(reinterpret_cast<char const*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, std::string_view what)
{
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw data_error("truncated file while reading " + std::string(what));
    }
    return value;
}

inline void write_magic(std::ostream& out, std::string_view magic)
{
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic)
{
    std::array<char, 4> buf{};
    if (!in.read(buf.data(), 4) || std::string_view(buf.data(), 4) != magic) {
        throw data_error("bad magic: expected \"" + std::string(magic) + "\"");
    }
}

inline void write_string(std::ostream& out, std::string_view s)
{
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in)
{
    constexpr std::uint32_t max_len = 1u << 20;
    auto len = read_pod<std::uint32_t>(in, "string length");
    if (len > max_len) {
        throw data_error("corrupt file: string length " + std::to_string(len));
    }
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) {
        throw data_error("truncated file while reading string");
    }
    return s;
}

inline void write_f32(std::ostream& out, double value)
{
    write_pod<float>(out, static_cast<float>(value));
}

}  // namespace tct::detail
