#pragma once

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "evq/mlp.hpp"

namespace evq {

// Model file layout (little-endian):
//   "EVQN" | u32 version | u32 layer-size count | u32 sizes... | f64 params...
inline constexpr char kModelMagic[4] = {'E', 'V', 'Q', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError("truncated model file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace detail

inline void write_model(std::ostream& out, const Mlp& net) {
    out.write(kModelMagic, 4);
    detail::write_le<std::uint32_t>(out, kModelVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.sizes().size()));
    for (std::size_t s : net.sizes()) detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
    for (double p : net.params()) detail::write_le<double>(out, p);
}

inline Mlp read_model(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) throw IoError("not an EVQN model file");
    const auto version = detail::read_le<std::uint32_t>(in);
    if (version != kModelVersion) throw IoError("unsupported model version " + std::to_string(version));
    const auto count = detail::read_le<std::uint32_t>(in);
    if (count < 2 || count > 64) throw IoError("implausible layer count in model file");
    std::vector<std::size_t> sizes;
    for (std::uint32_t i = 0; i < count; ++i) sizes.push_back(detail::read_le<std::uint32_t>(in));
    Mlp net(sizes);
    for (double& p : net.params()) p = detail::read_le<double>(in);
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in model file");
    return net;
}

inline void save_model(const std::string& path, const Mlp& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_model(out, net);
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline Mlp load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_model(in);
}

} // namespace evq
