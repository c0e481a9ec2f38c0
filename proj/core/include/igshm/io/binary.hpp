#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

/// Little-endian encoding helpers shared by the checkpoint and dataset formats.
namespace igshm::io {

void appendU32(std::vector<std::uint8_t>& out, std::uint32_t value);
void appendU64(std::vector<std::uint8_t>& out, std::uint64_t value);
void appendF64(std::vector<std::uint8_t>& out, std::span<const double> values);

std::uint32_t readU32(std::span<const std::uint8_t> bytes);
std::uint64_t readU64(std::span<const std::uint8_t> bytes);
/// Decodes bytes.size() / 8 doubles into `out`, which must be that long.
void readF64(std::span<const std::uint8_t> bytes, std::span<double> out);

std::vector<std::uint8_t> readFile(const std::filesystem::path& path);
void writeFile(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string readTextFile(const std::filesystem::path& path);
void writeTextFile(const std::filesystem::path& path, const std::string& text);

/// Lower-case hex SHA-256 digest.
std::string sha256Hex(std::span<const std::uint8_t> bytes);
std::string sha256Hex(std::span<const double> values);

/// Incremental SHA-256; doubles are fed in their little-endian encoding.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::span<const std::uint8_t> bytes);
    void update(std::span<const double> values);
    void update(const std::string& text);
    /// Finishes the digest; the object cannot be updated afterwards.
    std::string hex();

private:
    void* ctx_;
};

}  // namespace igshm::io
