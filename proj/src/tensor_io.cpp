#include "fognet/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "fognet/errors.hpp"

namespace fognet {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw IoError("fvt: truncated file " + path.string());
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_fvt(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("fvt: cannot open " + path.string() + " for writing");
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(t.ndim()));
    for (const std::size_t d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
    std::vector<float> buf(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) buf[i] = static_cast<float>(t.raw()[i]);
    static_assert(sizeof(float) == 4 && std::endian::native == std::endian::little,
                  "payload is written as raw little-endian IEEE floats");
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!os) throw IoError("fvt: short write to " + path.string());
}

Tensor read_fvt(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("fvt: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("fvt: bad magic in " + path.string());
    }
    const std::uint32_t ndim = get_u32(is, path);
    if (ndim == 0 || ndim > 8) {
        throw IoError("fvt: implausible ndim " + std::to_string(ndim) + " in " + path.string());
    }
    std::vector<std::size_t> shape(ndim);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        shape[i] = get_u32(is, path);
        if (shape[i] == 0) throw IoError("fvt: zero dimension in " + path.string());
        count *= shape[i];
    }
    std::vector<float> buf(count);
    if (!is.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(count * sizeof(float)))) {
        throw IoError("fvt: truncated payload in " + path.string());
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(buf[i]);
    return Tensor(std::move(shape), std::move(data));
}

} // namespace fognet
