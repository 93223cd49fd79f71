#include "aitlm/prefix_code.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "aitlm/byte_io.hpp"
#include "aitlm/error.hpp"

namespace aitlm {

std::string_view to_string(errc code) noexcept {
    switch (code) {
        case errc::invalid_argument: return "invalid_argument";
        case errc::empty_input: return "empty_input";
        case errc::truncated: return "truncated";
        case errc::prefix_violation: return "prefix_violation";
        case errc::alphabet_mismatch: return "alphabet_mismatch";
        case errc::model_mismatch: return "model_mismatch";
        case errc::bad_format: return "bad_format";
        case errc::io: return "io";
        case errc::config: return "config";
        case errc::transport: return "transport";
        case errc::remote_protocol: return "remote_protocol";
        case errc::multi_token_label: return "multi_token_label";
        case errc::context_overflow: return "context_overflow";
        case errc::class_exhausted: return "class_exhausted";
        case errc::enumeration_too_large: return "enumeration_too_large";
    }
    return "unknown";
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error(errc::io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

// ---------------------------------------------------------------- bit_string

bit_string bit_string::from_string(std::string_view bits) {
    bit_string out;
    for (char c : bits) {
        if (c != '0' && c != '1') throw error(errc::invalid_argument, "bit string may only contain '0' and '1'");
        out.push_back(c == '1');
    }
    return out;
}

bit_string bit_string::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    if (bit_count > bytes.size() * 8) throw error(errc::truncated, "bit count exceeds available bytes");
    bit_string out;
    out.bytes_.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>((bit_count + 7) / 8));
    out.size_ = bit_count;
    if (bit_count % 8 != 0) out.bytes_.back() &= static_cast<std::uint8_t>(0xFF00u >> (bit_count % 8));
    return out;
}

void bit_string::push_back(bool bit) {
    if ((size_ & 7) == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (size_ & 7));
    ++size_;
}

void bit_string::append_bits(std::uint64_t value, unsigned width) {
    for (unsigned i = width; i-- > 0;) push_back((value >> i) & 1u);
}

void bit_string::append(const bit_string& other) {
    if ((size_ & 7) == 0) {
        bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
        size_ += other.size_;
        return;
    }
    for (std::size_t i = 0; i < other.size_; ++i) push_back(other[i]);
}

bool bit_string::is_prefix_of(const bit_string& other) const noexcept {
    if (size_ > other.size_) return false;
    std::size_t full = size_ / 8;
    if (!std::equal(bytes_.begin(), bytes_.begin() + static_cast<std::ptrdiff_t>(full), other.bytes_.begin())) return false;
    for (std::size_t i = full * 8; i < size_; ++i)
        if ((*this)[i] != other[i]) return false;
    return true;
}

bit_string bit_string::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > size_) throw error(errc::truncated, "slice past end of bit string");
    bit_string out;
    for (std::size_t i = 0; i < count; ++i) out.push_back((*this)[offset + i]);
    return out;
}

std::string bit_string::to_string() const {
    std::string out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back((*this)[i] ? '1' : '0');
    return out;
}

bit_string operator+(bit_string a, const bit_string& b) {
    a.append(b);
    return a;
}

bool bit_reader::read_bit() {
    if (at_end()) throw error(errc::truncated, "read past end of bit string");
    return (*bits_)[pos_++];
}

// -------------------------------------------------------------------- gamma

bit_string elias_gamma_encode(std::uint64_t n) {
    if (n == 0) throw error(errc::invalid_argument, "Elias gamma code is undefined for 0");
    unsigned floor_log = (gamma_length(n) - 1) / 2;
    bit_string out;
    out.append_bits(0, floor_log);
    out.append_bits(n, floor_log + 1);
    return out;
}

gamma_decoded elias_gamma_decode(const bit_string& bits, std::size_t offset) {
    if (offset >= bits.size()) throw error(errc::empty_input, "no bits to decode a gamma codeword from");
    bit_reader in(bits, offset);
    unsigned zeros = 0;
    while (true) {
        if (in.at_end()) throw error(errc::truncated, "gamma codeword truncated in its zero prefix");
        if (in.read_bit()) break;
        if (++zeros > 63) throw error(errc::bad_format, "gamma codeword exceeds 64-bit range");
    }
    std::uint64_t value = 1;
    for (unsigned i = 0; i < zeros; ++i) {
        if (in.at_end()) throw error(errc::truncated, "gamma codeword truncated in its binary part");
        value = (value << 1) | static_cast<std::uint64_t>(in.read_bit());
    }
    return {value, 2 * std::size_t{zeros} + 1};
}

bit_string wrap_payload(const bit_string& payload) {
    if (payload.empty()) throw error(errc::invalid_argument, "cannot wrap an empty payload");
    return elias_gamma_encode(payload.size()) + payload;
}

unwrapped_payload unwrap_payload(const bit_string& bits, std::size_t offset) {
    auto [length, header] = elias_gamma_decode(bits, offset);
    if (bits.size() - offset - header < length) throw error(errc::truncated, "wrapped payload is shorter than its length prefix");
    return {bits.slice(offset + header, length), header + length};
}

// ------------------------------------------------------------------ program

bit_string program_encoding::serialize() const {
    bit_string out = iteration_code;
    out.append(seed_code);
    out.append(payload_code);
    return out;
}

program_encoding encode_program(std::uint64_t iterations, std::uint64_t seed, const bit_string& payload) {
    if (iterations == 0) throw error(errc::invalid_argument, "iteration count must be >= 1");
    if (seed == 0) throw error(errc::invalid_argument, "seed must be >= 1");
    return {elias_gamma_encode(iterations), elias_gamma_encode(seed), wrap_payload(payload)};
}

decoded_program decode_program(const bit_string& bits, std::size_t offset) {
    auto n = elias_gamma_decode(bits, offset);
    auto s = elias_gamma_decode(bits, offset + n.consumed);
    auto e = unwrap_payload(bits, offset + n.consumed + s.consumed);
    return {n.value, s.value, std::move(e.payload), n.consumed + s.consumed + e.consumed};
}

// -------------------------------------------------------------------- kraft

namespace {

bool lex_less(const bit_string& a, const bit_string& b) {
    std::size_t common = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < common; ++i)
        if (a[i] != b[i]) return !a[i];
    return a.size() < b.size();
}

}  // namespace

double kraft_sum(std::span<const bit_string> codewords) {
    std::vector<std::size_t> order(codewords.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (lex_less(codewords[a], codewords[b])) return true;
        if (lex_less(codewords[b], codewords[a])) return false;
        return a < b;
    });
    // In lexicographic order a codeword that prefixes any later one also
    // prefixes its immediate successor, so adjacent pairs suffice.
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& a = codewords[order[i - 1]];
        const auto& b = codewords[order[i]];
        if (a.is_prefix_of(b)) {
            throw error(errc::prefix_violation,
                        "codeword #" + std::to_string(order[i - 1]) + " (" + a.to_string() + ") is a prefix of codeword #" +
                            std::to_string(order[i]) + " (" + b.to_string() + ")");
        }
    }
    long double sum = 0;
    for (const auto& c : codewords) sum += std::ldexp(1.0L, -static_cast<int>(c.size()));
    return static_cast<double>(sum);
}

// --------------------------------------------------------------------- file

std::vector<std::uint8_t> write_program_bytes(const bit_string& serialized) {
    byte_writer out;
    out.raw(program_file_magic);
    out.u8(program_file_version);
    out.u64(serialized.size());
    out.raw(serialized.bytes());
    return std::move(out).bytes();
}

bit_string read_program_bytes(std::span<const std::uint8_t> bytes) {
    byte_reader in(bytes);
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), program_file_magic.begin()))
        throw error(errc::bad_format, "not a program file (bad magic)");
    if (auto v = in.u8(); v != program_file_version)
        throw error(errc::bad_format, "unsupported program file version " + std::to_string(v));
    std::uint64_t bit_count = in.u64();
    std::size_t byte_count = (bit_count + 7) / 8;
    if (in.remaining() < byte_count) throw error(errc::truncated, "program file shorter than its recorded bit count");
    if (in.remaining() > byte_count) throw error(errc::bad_format, "trailing bytes after program bitstream");
    return bit_string::from_bytes(in.raw(byte_count), bit_count);
}

void save_program(const std::filesystem::path& path, const program_encoding& program) {
    write_file_bytes(path, write_program_bytes(program.serialize()));
}

decoded_program load_program(const std::filesystem::path& path) {
    auto bits = read_program_bytes(read_file_bytes(path));
    auto program = decode_program(bits);
    if (program.consumed != bits.size()) throw error(errc::bad_format, "program file has bits after the payload");
    return program;
}

}  // namespace aitlm
