#pragma once

// GEMT tensor file format (all integers little-endian):
//   "GEMT" | u8 version (=1) | u8 mode count | u64 extent × modes | f64 IEEE-754 × elements (row-major)

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gemtl/tensor.hpp"

namespace gemtl {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (std::size_t i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) {
        throw FormatError("GEMT: truncated stream");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

inline std::uint8_t get_u8(std::istream& is) {
    char c = 0;
    if (!is.get(c)) {
        throw FormatError("GEMT: truncated stream");
    }
    return static_cast<std::uint8_t>(c);
}

}  // namespace detail

inline constexpr std::uint8_t kGemtVersion = 1;

inline void write_tensor(std::ostream& os, const Tensor& t) {
    if (t.order() > 255) {
        throw FormatError("GEMT: order exceeds 255");
    }
    os.write("GEMT", 4);
    os.put(static_cast<char>(kGemtVersion));
    os.put(static_cast<char>(t.order()));
    for (std::size_t e : t.shape().extents()) {
        detail::put_u64(os, e);
    }
    for (double v : t.data()) {
        detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) {
        throw FormatError("GEMT: write failed");
    }
}

inline Tensor read_tensor(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || std::string(magic.data(), 4) != "GEMT") {
        throw FormatError("GEMT: bad magic");
    }
    const std::uint8_t version = detail::get_u8(is);
    if (version != kGemtVersion) {
        throw FormatError("GEMT: unsupported version " + std::to_string(version));
    }
    const std::uint8_t order = detail::get_u8(is);
    std::vector<std::size_t> ext(order);
    for (auto& e : ext) {
        const std::uint64_t v = detail::get_u64(is);
        if (v == 0 || v > (std::uint64_t{1} << 40)) {
            throw FormatError("GEMT: invalid extent " + std::to_string(v));
        }
        e = static_cast<std::size_t>(v);
    }
    Tensor t{Shape(std::move(ext))};
    for (double& v : t.data()) {
        v = std::bit_cast<double>(detail::get_u64(is));
    }
    return t;
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_tensor(os, t);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw FormatError("cannot open " + path.string());
    }
    return read_tensor(is);
}

}  // namespace gemtl
