#pragma once

// Little-endian raw payloads and JSON sidecars shared by the volume and
// projection formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "sparsect/error.hpp"

namespace sparsect::detail {

template <typename T>
T byteswap_value(T v)
{
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

template <typename T>
void write_raw_le(const std::filesystem::path& path, const T* data, std::size_t n)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            T v = byteswap_value(data[i]);
            out.write(reinterpret_cast<const char*>(&v), sizeof(T));
        }
    }
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

template <typename T>
std::vector<T> read_raw_le(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(T) != 0)
        throw IntegrityError("payload '" + path.string() + "' is not a whole number of elements");
    std::vector<T> data(bytes / sizeof(T));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in)
        throw IoError("read failed for '" + path.string() + "'");
    if constexpr (std::endian::native != std::endian::little)
        for (auto& v : data)
            v = byteswap_value(v);
    return data;
}

inline void write_sidecar(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_sidecar(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("missing sidecar '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("corrupt sidecar '" + path.string() + "': " + e.what());
    }
}

inline std::filesystem::path with_suffix(const std::filesystem::path& base, const char* ext)
{
    return std::filesystem::path(base.string() + ext);
}

}  // namespace sparsect::detail
