#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aitlm {

// Ordered bit sequence with an exact logical length. Bits are packed
// most-significant-first into bytes; the unused tail of the last byte is
// always zero.
class bit_string {
public:
    bit_string() = default;

    // Parses a string of '0'/'1' characters.
    static bit_string from_string(std::string_view bits);
    // Takes the first `bit_count` bits of `bytes` (MSB-first).
    static bit_string from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count);

    void push_back(bool bit);
    // Appends the low `width` bits of `value`, most significant first.
    void append_bits(std::uint64_t value, unsigned width);
    void append(const bit_string& other);

    bool operator[](std::size_t i) const noexcept {
        return (bytes_[i >> 3] >> (7 - (i & 7))) & 1u;
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool is_prefix_of(const bit_string& other) const noexcept;
    bit_string slice(std::size_t offset, std::size_t count) const;

    std::string to_string() const;
    // Zero-padded to a byte boundary.
    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

    friend bool operator==(const bit_string& a, const bit_string& b) noexcept {
        return a.size_ == b.size_ && a.bytes_ == b.bytes_;
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t size_ = 0;
};

bit_string operator+(bit_string a, const bit_string& b);

// Sequential reader over a bit_string.
class bit_reader {
public:
    explicit bit_reader(const bit_string& bits, std::size_t offset = 0) : bits_(&bits), pos_(offset) {}

    bool at_end() const noexcept { return pos_ >= bits_->size(); }
    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return at_end() ? 0 : bits_->size() - pos_; }

    bool read_bit();
    // Bits past the end read as zero; used by the arithmetic decoder.
    bool read_bit_or_zero() noexcept { return at_end() ? (++pos_, false) : (*bits_)[pos_++]; }

private:
    const bit_string* bits_;
    std::size_t pos_;
};

// Exact Elias gamma length: 2*floor(log2 n) + 1.
constexpr unsigned gamma_length(std::uint64_t n) noexcept {
    unsigned floor_log = 0;
    while (n >>= 1) ++floor_log;
    return 2 * floor_log + 1;
}

bit_string elias_gamma_encode(std::uint64_t n);

struct gamma_decoded {
    std::uint64_t value;
    std::size_t consumed;
};

// Decodes one codeword starting at `offset`. Empty input and a codeword that
// runs out of bits are reported with different error codes.
gamma_decoded elias_gamma_decode(const bit_string& bits, std::size_t offset = 0);

// gamma(|payload|) followed by the payload itself.
bit_string wrap_payload(const bit_string& payload);

struct unwrapped_payload {
    bit_string payload;
    std::size_t consumed;
};

unwrapped_payload unwrap_payload(const bit_string& bits, std::size_t offset = 0);

// The prefix-coded triple (gamma(n), gamma(s), wrap(e)).
struct program_encoding {
    bit_string iteration_code;
    bit_string seed_code;
    bit_string payload_code;

    std::size_t total_length() const noexcept {
        return iteration_code.size() + seed_code.size() + payload_code.size();
    }
    bit_string serialize() const;
};

program_encoding encode_program(std::uint64_t iterations, std::uint64_t seed, const bit_string& payload);

struct decoded_program {
    std::uint64_t iterations;
    std::uint64_t seed;
    bit_string payload;
    std::size_t consumed;
};

decoded_program decode_program(const bit_string& bits, std::size_t offset = 0);

// Sum of 2^-|c|. Throws errc::prefix_violation naming the first offending
// pair (in lexicographic order) if the set is not prefix-free.
double kraft_sum(std::span<const bit_string> codewords);

// "AITP" | version 0x01 | u64 BE bit count | bitstream zero-padded to a byte.
inline constexpr std::string_view program_file_magic = "AITP";
inline constexpr std::uint8_t program_file_version = 0x01;

std::vector<std::uint8_t> write_program_bytes(const bit_string& serialized);
bit_string read_program_bytes(std::span<const std::uint8_t> bytes);

void save_program(const std::filesystem::path& path, const program_encoding& program);
decoded_program load_program(const std::filesystem::path& path);

}  // namespace aitlm
