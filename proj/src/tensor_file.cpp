#include "sdgan/tensor_file.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sdgan/errors.hpp"

namespace sdgan::io {

namespace {
constexpr std::uint32_t kMagic = 0x46544453;  // "SDTF"
constexpr std::uint32_t kVersion = 1;

void fail_if_bad(std::istream& is, const char* what) {
    if (!is.good()) throw CorruptFile(std::string("truncated read: ") + what);
}
}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    fail_if_bad(is, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    fail_if_bad(is, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint32_t n = read_u32(is);
    if (n > (1u << 20)) throw CorruptFile("implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    fail_if_bad(is, "string");
    return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
    for (std::int64_t i = 0; i < t.numel(); ++i) write_f64(os, t[i]);
}

Tensor read_tensor(std::istream& is) {
    std::uint32_t nd = read_u32(is);
    if (nd == 0 || nd > 8) throw CorruptFile("implausible tensor rank");
    std::vector<int> shape(nd);
    std::int64_t n = 1;
    for (auto& d : shape) {
        std::uint32_t v = read_u32(is);
        if (v == 0 || v > (1u << 24)) throw CorruptFile("implausible tensor dim");
        d = static_cast<int>(v);
        n *= d;
    }
    if (n > (1ll << 28)) throw CorruptFile("implausible tensor size");
    Tensor t(shape);
    for (std::int64_t i = 0; i < n; ++i) t[i] = read_f64(is);
    return t;
}

void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, Tensor>>& items) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open for writing: " + path);
    write_u32(os, kMagic);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(items.size()));
    for (const auto& [name, t] : items) {
        write_string(os, name);
        write_tensor(os, t);
    }
    if (!os.good()) throw Error("write failed: " + path);
}

std::map<std::string, Tensor> load_named_tensors(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFile("no such file: " + path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open: " + path);
    if (read_u32(is) != kMagic) throw CorruptFile("bad magic in " + path);
    std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw VersionMismatch("container version " + std::to_string(version) + " in " + path +
                              ", expected " + std::to_string(kVersion));
    std::uint32_t count = read_u32(is);
    if (count > (1u << 20)) throw CorruptFile("implausible entry count");
    std::map<std::string, Tensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = read_string(is);
        Tensor t = read_tensor(is);
        if (!out.emplace(name, std::move(t)).second)
            throw CorruptFile("duplicate tensor name '" + name + "' in " + path);
    }
    return out;
}

}  // namespace sdgan::io
