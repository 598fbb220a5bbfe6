#include "eldyn/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace eldyn {
namespace {

constexpr char kMagic[6] = {'E', 'L', 'D', 'Y', 'N', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("ELDYN1: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t to_le_bits(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    if constexpr (std::endian::native == std::endian::big) {
        u = __builtin_bswap64(u);
    }
    return u;
}

double from_le_bits(std::uint64_t u) {
    if constexpr (std::endian::native == std::endian::big) {
        u = __builtin_bswap64(u);
    }
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

}  // namespace

void write_field_record(std::ostream& os, const PeriodicField& f) {
    os.write(kMagic, 6);
    put_u32(os, static_cast<std::uint32_t>(f.grid().d));
    put_u32(os, static_cast<std::uint32_t>(f.grid().n));
    put_u32(os, static_cast<std::uint32_t>(f.rank()));
    for (double x : f.data()) {
        const std::uint64_t u = to_le_bits(x);
        os.write(reinterpret_cast<const char*>(&u), 8);
    }
    if (!os) throw std::runtime_error("ELDYN1: write failed");
}

PeriodicField read_field_record(std::istream& is) {
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, kMagic, 6) != 0)
        throw std::runtime_error("ELDYN1: bad magic");
    const std::uint32_t d = get_u32(is);
    const std::uint32_t n = get_u32(is);
    const std::uint32_t rank_code = get_u32(is);
    if (d != 2 && d != 3) throw std::runtime_error("ELDYN1: bad dimension");
    if (n < 4 || n % 2 != 0 || n > (1u << 16)) throw std::runtime_error("ELDYN1: bad n");
    if (rank_code > 2) throw std::runtime_error("ELDYN1: bad rank code");
    Grid g(static_cast<int>(d), static_cast<int>(n));
    PeriodicField f(g, static_cast<Rank>(rank_code));
    for (double& x : f.data()) {
        std::uint64_t u;
        is.read(reinterpret_cast<char*>(&u), 8);
        if (!is) throw std::runtime_error("ELDYN1: payload size mismatch");
        x = from_le_bits(u);
    }
    return f;
}

void save_field(const std::string& path, const PeriodicField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_field_record(os, f);
}

PeriodicField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    PeriodicField f = read_field_record(is);
    is.peek();
    if (!is.eof()) throw std::runtime_error("ELDYN1: trailing bytes in " + path);
    return f;
}

}  // namespace eldyn
