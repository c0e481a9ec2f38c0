#include "igshm/io/binary.hpp"

#include "igshm/error.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace igshm::io {
namespace {

template <typename T>
void appendLe(std::vector<std::uint8_t>& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T readLe(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < sizeof(T)) throw DataError("truncated binary field");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

void appendU32(std::vector<std::uint8_t>& out, std::uint32_t value)
{
    appendLe(out, value);
}

void appendU64(std::vector<std::uint8_t>& out, std::uint64_t value)
{
    appendLe(out, value);
}

void appendF64(std::vector<std::uint8_t>& out, std::span<const double> values)
{
    if constexpr (std::endian::native == std::endian::little) {
        const auto* raw = reinterpret_cast<const std::uint8_t*>(values.data());
        out.insert(out.end(), raw, raw + values.size_bytes());
    } else {
        for (double v : values) appendLe(out, std::bit_cast<std::uint64_t>(v));
    }
}

std::uint32_t readU32(std::span<const std::uint8_t> bytes)
{
    return readLe<std::uint32_t>(bytes);
}

std::uint64_t readU64(std::span<const std::uint8_t> bytes)
{
    return readLe<std::uint64_t>(bytes);
}

void readF64(std::span<const std::uint8_t> bytes, std::span<double> out)
{
    if (bytes.size() != out.size() * sizeof(double)) throw DataError("f64 block length mismatch");
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::bit_cast<double>(readLe<std::uint64_t>(bytes.subspan(i * 8, 8)));
        }
    }
}

std::vector<std::uint8_t> readFile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void writeFile(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

std::string readTextFile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void writeTextFile(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

std::string sha256Hex(std::span<const std::uint8_t> bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream ss;
    for (unsigned char b : std::span<const unsigned char>(digest, length)) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
    return ss.str();
}

std::string sha256Hex(std::span<const double> values)
{
    std::vector<std::uint8_t> bytes;
    appendF64(bytes, values);
    return sha256Hex(bytes);
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new())
{
    if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 init failed");
    }
}

Sha256::~Sha256()
{
    EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256::update(std::span<const std::uint8_t> bytes)
{
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size()) != 1) {
        throw Error("SHA-256 update failed");
    }
}

void Sha256::update(std::span<const double> values)
{
    std::vector<std::uint8_t> bytes;
    appendF64(bytes, values);
    update(bytes);
}

void Sha256::update(const std::string& text)
{
    update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string Sha256::hex()
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest, &length) != 1) throw Error("SHA-256 final failed");
    std::ostringstream ss;
    for (unsigned char b : std::span<const unsigned char>(digest, length)) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
    return ss.str();
}

}  // namespace igshm::io
