#include "beta/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "beta/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "f64 blob I/O assumes a little-endian host");

namespace beta::io {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void atomic_write_bytes(const std::filesystem::path& path, const void* data,
                        std::size_t size) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw parse_error("cannot open for writing: " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw parse_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_text(const std::filesystem::path& path, std::string_view text) {
    atomic_write_bytes(path, text.data(), text.size());
}

void atomic_write_f64_blob(const std::filesystem::path& path,
                           std::span<const double> values) {
    atomic_write_bytes(path, values.data(), values.size() * sizeof(double));
}

std::vector<double> read_f64_blob(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw parse_error("cannot open blob: " + path.string());
    const std::streamsize size = in.tellg();
    if (size % static_cast<std::streamsize>(sizeof(double)) != 0)
        throw parse_error("blob size not a multiple of 8: " + path.string());
    std::vector<double> out(static_cast<std::size_t>(size) / sizeof(double));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(out.data()), size);
    if (!in) throw parse_error("blob read failed: " + path.string());
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace beta::io
