#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aitlm/model.hpp"
#include "aitlm/prefix_code.hpp"

namespace aitlm {

// Range coder over 64-bit registers. The interval width is kept in
// [2^56, 2^64) and split with 24-bit frequency tables; a carry out of the
// low register is pushed back into the bytes already emitted.
class range_encoder {
public:
    void encode(std::uint32_t cum, std::uint32_t freq);
    // Emits the shortest bit tail that pins a value inside the final
    // interval. Bits past the end are implicitly zero for the decoder.
    bit_string finish();

private:
    void propagate_carry();

    std::uint64_t low_ = 0;
    std::uint64_t range_ = ~std::uint64_t{0};
    std::vector<std::uint8_t> out_;
};

class range_decoder {
public:
    explicit range_decoder(const bit_string& bits);

    symbol_id decode(const frequency_table& table);
    // Bytes pulled into the window after the initial fill; the encoder
    // emitted exactly this many whole bytes before its tail.
    std::size_t shifted_bytes() const noexcept { return shifted_; }

private:
    std::uint8_t next_byte() noexcept;

    bit_reader in_;
    std::uint64_t offset_ = 0;  // code value minus interval low
    std::uint64_t range_ = ~std::uint64_t{0};
    std::size_t shifted_ = 0;
};

// e(x) together with n(x) = t and the id of the model that produced it.
struct compressed_payload {
    bit_string bits;
    std::uint64_t token_count = 0;
    std::uint64_t model_id = 0;
};

struct coding_stats {
    double quantized_log_loss = 0;   // sum -log2 P_q(x_i | x_<i)
    std::uint64_t table_digest = 0;  // running fingerprint of every table used
};

compressed_payload compress(const probability_model& model, const token_sequence& x, coding_stats* stats = nullptr);
token_sequence decompress(const probability_model& model, const compressed_payload& payload, coding_stats* stats = nullptr);

// 2t + sequence_log_loss(model, x): the idealized payload length used by
// the prior computations.
double analytic_code_length(const probability_model& model, const token_sequence& x);

// Program container: gamma(t) | gamma(seed) | wrap(e).
program_encoding to_program(const compressed_payload& payload, std::uint64_t seed = 1);
compressed_payload from_program(const decoded_program& program, std::uint64_t model_id);

// ".aitc": "AITC" | version | u64 BE model id | embedded AITP record.
inline constexpr std::string_view payload_file_magic = "AITC";
inline constexpr std::uint8_t payload_file_version = 0x01;

std::vector<std::uint8_t> write_payload_bytes(const compressed_payload& payload, std::uint64_t seed = 1);
compressed_payload read_payload_bytes(std::span<const std::uint8_t> bytes);

}  // namespace aitlm
