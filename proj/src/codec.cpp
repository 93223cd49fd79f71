#include "aitlm/codec.hpp"

#include <cmath>
#include <string>

#include "aitlm/byte_io.hpp"
#include "aitlm/error.hpp"
#include "aitlm/hash.hpp"

namespace aitlm {

namespace {

constexpr std::uint64_t range_floor = std::uint64_t{1} << 56;
__extension__ using u128 = unsigned __int128;

void fold_table(coding_stats* stats, const frequency_table& table, symbol_id s) {
    if (!stats) return;
    stats->quantized_log_loss -= std::log2(table.probability(s));
    stats->table_digest = fnv1a().update_u64(stats->table_digest).update_u64(table.fingerprint()).digest();
}

}  // namespace

// ------------------------------------------------------------------ encoder

void range_encoder::propagate_carry() {
    for (auto i = out_.size(); i-- > 0;)
        if (++out_[i] != 0) return;
    // The coded value is always below 1.0, so a carry cannot leave the
    // first byte.
    throw error(errc::invalid_argument, "range coder carry escaped the output");
}

void range_encoder::encode(std::uint32_t cum, std::uint32_t freq) {
    const std::uint64_t r = range_ >> frequency_bits;
    const std::uint64_t next_low = low_ + r * cum;
    if (next_low < low_) propagate_carry();
    low_ = next_low;
    range_ = r * freq;
    while (range_ < range_floor) {
        out_.push_back(static_cast<std::uint8_t>(low_ >> 56));
        low_ <<= 8;
        range_ <<= 8;
    }
}

bit_string range_encoder::finish() {
    const u128 lo = low_;
    const u128 hi = lo + range_ - 1;
    unsigned tail = 0;
    u128 value = 0;
    for (; tail <= 64; ++tail) {
        const u128 step = u128{1} << (64 - tail);
        value = (lo + step - 1) / step * step;
        if (value <= hi) break;
    }
    if (value >> 64) {
        propagate_carry();
        value -= u128{1} << 64;
    }
    bit_string out = bit_string::from_bytes(out_, out_.size() * 8);
    if (tail > 0) out.append_bits(static_cast<std::uint64_t>(value >> (64 - tail)), tail);
    if (out.empty()) out.push_back(false);  // payloads are never empty
    return out;
}

// ------------------------------------------------------------------ decoder

range_decoder::range_decoder(const bit_string& bits) : in_(bits) {
    for (int i = 0; i < 8; ++i) offset_ = (offset_ << 8) | next_byte();
}

std::uint8_t range_decoder::next_byte() noexcept {
    std::uint8_t b = 0;
    for (int i = 0; i < 8; ++i) b = static_cast<std::uint8_t>((b << 1) | in_.read_bit_or_zero());
    return b;
}

symbol_id range_decoder::decode(const frequency_table& table) {
    const std::uint64_t r = range_ >> frequency_bits;
    const std::uint64_t target = offset_ / r;
    if (target >= frequency_total) throw error(errc::bad_format, "corrupt payload: code value outside the coding interval");
    const symbol_id s = table.find(static_cast<std::uint32_t>(target));
    offset_ -= r * table.cum(s);
    range_ = r * table.freq(s);
    while (range_ < range_floor) {
        offset_ = (offset_ << 8) | next_byte();
        range_ <<= 8;
        ++shifted_;
    }
    return s;
}

// -------------------------------------------------------------------- codec

compressed_payload compress(const probability_model& model, const token_sequence& x, coding_stats* stats) {
    check_alphabet(model, x);
    if (x.empty()) throw error(errc::empty_input, "cannot compress an empty sequence");
    range_encoder enc;
    auto tokens = x.tokens();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto table = quantize(model.predict(tokens.first(i)));
        enc.encode(table.cum(tokens[i]), table.freq(tokens[i]));
        fold_table(stats, table, tokens[i]);
    }
    return {enc.finish(), tokens.size(), model.content_hash()};
}

token_sequence decompress(const probability_model& model, const compressed_payload& payload, coding_stats* stats) {
    if (payload.model_id != model.content_hash())
        throw error(errc::model_mismatch, "payload was produced by a different model");
    token_sequence out(model.symbols());
    if (payload.token_count == 0) return out;
    range_decoder dec(payload.bits);
    std::vector<symbol_id> buffer;
    buffer.reserve(payload.token_count);
    for (std::uint64_t i = 0; i < payload.token_count; ++i) {
        auto table = quantize(model.predict(buffer));
        auto s = dec.decode(table);
        fold_table(stats, table, s);
        buffer.push_back(s);
    }
    if (dec.shifted_bytes() * 8 > payload.bits.size())
        throw error(errc::truncated, "payload bitstream is shorter than the coded data");
    return token_sequence(model.symbols(), std::move(buffer));
}

double analytic_code_length(const probability_model& model, const token_sequence& x) {
    if (x.empty()) throw error(errc::empty_input, "analytic code length needs a non-empty sequence");
    return 2.0 * static_cast<double>(x.size()) + sequence_log_loss(model, x);
}

// --------------------------------------------------------------- containers

program_encoding to_program(const compressed_payload& payload, std::uint64_t seed) {
    return encode_program(payload.token_count, seed, payload.bits);
}

compressed_payload from_program(const decoded_program& program, std::uint64_t model_id) {
    return {program.payload, program.iterations, model_id};
}

std::vector<std::uint8_t> write_payload_bytes(const compressed_payload& payload, std::uint64_t seed) {
    byte_writer out;
    out.raw(payload_file_magic);
    out.u8(payload_file_version);
    out.u64(payload.model_id);
    out.raw(write_program_bytes(to_program(payload, seed).serialize()));
    return std::move(out).bytes();
}

compressed_payload read_payload_bytes(std::span<const std::uint8_t> bytes) {
    byte_reader in(bytes);
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), payload_file_magic.begin()))
        throw error(errc::bad_format, "not a payload file (bad magic)");
    if (auto v = in.u8(); v != payload_file_version)
        throw error(errc::bad_format, "unsupported payload file version " + std::to_string(v));
    std::uint64_t model_id = in.u64();
    auto bits = read_program_bytes(in.raw(in.remaining()));
    auto program = decode_program(bits);
    if (program.consumed != bits.size()) throw error(errc::bad_format, "payload file has bits after the payload");
    return from_program(program, model_id);
}

}  // namespace aitlm
