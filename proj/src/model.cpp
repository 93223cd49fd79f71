#include "aitlm/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "aitlm/error.hpp"
#include "aitlm/hash.hpp"

namespace aitlm {

// ----------------------------------------------------------------- alphabet

alphabet::alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 2) throw error(errc::invalid_argument, "an alphabet needs at least two symbols");
    if (symbols_.size() > (1u << 16)) throw error(errc::invalid_argument, "alphabet larger than 65536 symbols");
    fnv1a h;
    for (symbol_id i = 0; i < symbols_.size(); ++i) {
        const auto& s = symbols_[i];
        if (s.empty()) throw error(errc::invalid_argument, "alphabet symbols must be non-empty");
        if (!index_.emplace(s, i).second) throw error(errc::invalid_argument, "duplicate alphabet symbol '" + s + "'");
        single_byte_ = single_byte_ && s.size() == 1;
        h.update_u64(s.size()).update(s);
    }
    fingerprint_ = h.digest();
}

std::shared_ptr<const alphabet> alphabet::make(std::vector<std::string> symbols) {
    return std::make_shared<const alphabet>(std::move(symbols));
}

std::shared_ptr<const alphabet> alphabet::binary() { return make({"0", "1"}); }

std::shared_ptr<const alphabet> alphabet::bytes() {
    std::vector<std::string> symbols;
    for (int b = 0; b < 256; ++b) symbols.emplace_back(1, static_cast<char>(b));
    return make(std::move(symbols));
}

std::shared_ptr<const alphabet> alphabet::chars(std::string_view chars) {
    std::vector<std::string> symbols;
    for (char c : chars) symbols.emplace_back(1, c);
    return make(std::move(symbols));
}

symbol_id alphabet::index_of(std::string_view symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) throw error(errc::alphabet_mismatch, "symbol '" + std::string(symbol) + "' is not in the alphabet");
    return it->second;
}

// ----------------------------------------------------------- token_sequence

token_sequence::token_sequence(alphabet_ptr sigma, std::vector<symbol_id> tokens)
    : alphabet_(std::move(sigma)), tokens_(std::move(tokens)) {
    for (auto t : tokens_)
        if (t >= alphabet_->size()) throw error(errc::alphabet_mismatch, "token index outside the alphabet");
}

token_sequence token_sequence::from_text(alphabet_ptr sigma, std::string_view text) {
    if (!sigma->single_byte_symbols()) throw error(errc::invalid_argument, "text mapping needs single-byte symbols");
    std::vector<symbol_id> tokens;
    tokens.reserve(text.size());
    for (char c : text) tokens.push_back(sigma->index_of(std::string_view(&c, 1)));
    return token_sequence(std::move(sigma), std::move(tokens));
}

std::string token_sequence::to_text() const {
    std::string out;
    for (auto t : tokens_) out += alphabet_->symbol(t);
    return out;
}

void token_sequence::push_back(symbol_id s) {
    if (s >= alphabet_->size()) throw error(errc::alphabet_mismatch, "token index outside the alphabet");
    tokens_.push_back(s);
}

token_sequence token_sequence::prefix(std::size_t length) const {
    length = std::min(length, tokens_.size());
    return token_sequence(alphabet_, {tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(length)});
}

// ------------------------------------------------------------- distribution

distribution distribution::floored(std::vector<double> w) {
    if (w.size() < 2) throw error(errc::invalid_argument, "distribution needs at least two entries");
    double total = 0;
    for (double v : w) {
        if (!(v >= 0) || !std::isfinite(v)) throw error(errc::invalid_argument, "weights must be finite and non-negative");
        total += v;
    }
    if (!(total > 0)) throw error(errc::invalid_argument, "weights sum to zero");
    for (double& v : w) v /= total;

    std::vector<bool> pinned(w.size(), false);
    std::size_t pinned_count = 0;
    while (true) {
        double free_mass = 1.0 - static_cast<double>(pinned_count) * probability_floor;
        double rest = 0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!pinned[i]) rest += w[i];
        bool changed = false;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!pinned[i] && w[i] * free_mass / rest < probability_floor) {
                pinned[i] = true;
                ++pinned_count;
                changed = true;
            }
        }
        if (!changed) {
            if (pinned_count == 0) break;
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = pinned[i] ? probability_floor : w[i] * free_mass / rest;
            break;
        }
    }
    return distribution(std::move(w));
}

distribution distribution::uniform(std::size_t size) {
    if (size < 2) throw error(errc::invalid_argument, "distribution needs at least two entries");
    return distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

// ------------------------------------------------------------- quantization

symbol_id frequency_table::find(std::uint32_t target) const {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    return static_cast<symbol_id>(it - cum_.begin() - 1);
}

std::uint64_t frequency_table::fingerprint() const noexcept {
    fnv1a h;
    for (auto c : cum_) h.update_u64(c);
    return h.digest();
}

frequency_table quantize(const distribution& d) {
    const std::size_t n = d.size();
    const std::uint64_t spread = frequency_total - n;
    std::vector<std::uint64_t> freq(n);
    std::uint64_t used = 0;
    std::size_t top = 0;
    for (std::size_t i = 0; i < n; ++i) {
        freq[i] = 1 + static_cast<std::uint64_t>(std::floor(d[i] * static_cast<double>(spread)));
        used += freq[i];
        if (d[i] > d[top]) top = i;
    }
    // Rounding slack goes to the most probable symbol.
    if (used <= frequency_total)
        freq[top] += frequency_total - used;
    else
        freq[top] -= used - frequency_total;

    frequency_table t;
    t.cum_.resize(n + 1);
    t.cum_[0] = 0;
    for (std::size_t i = 0; i < n; ++i) t.cum_[i + 1] = t.cum_[i] + static_cast<std::uint32_t>(freq[i]);
    return t;
}

// ------------------------------------------------------------------- models

void check_alphabet(const probability_model& model, const token_sequence& x) {
    if (!(*model.symbols() == x.symbols()))
        throw error(errc::alphabet_mismatch, "sequence alphabet does not match the model alphabet");
}

distribution next_distribution(const probability_model& model, const token_sequence& context) {
    check_alphabet(model, context);
    return model.predict(context.tokens());
}

std::uint64_t uniform_model::content_hash() const {
    return fnv1a().update("uniform").update_u64(alphabet_->fingerprint()).digest();
}

iid_model::iid_model(alphabet_ptr sigma, std::vector<double> weights)
    : alphabet_(std::move(sigma)), dist_(distribution::floored(std::move(weights))) {
    if (dist_.size() != alphabet_->size()) throw error(errc::invalid_argument, "weight count differs from alphabet size");
}

std::uint64_t iid_model::content_hash() const {
    fnv1a h;
    h.update("iid").update_u64(alphabet_->fingerprint());
    for (double p : dist_.values()) h.update_u64(std::bit_cast<std::uint64_t>(p));
    return h.digest();
}

double sequence_log_loss(const probability_model& model, const token_sequence& x) {
    check_alphabet(model, x);
    auto tokens = x.tokens();
    double bits = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) bits -= std::log2(model.predict(tokens.first(i))[tokens[i]]);
    return bits;
}

token_sequence generate(const probability_model& model, const token_sequence& prompt, std::uint64_t seed,
                        std::size_t max_len) {
    check_alphabet(model, prompt);
    if (seed == 0) throw error(errc::invalid_argument, "seed must be >= 1");
    token_sequence out = prompt;
    std::mt19937_64 rng(seed);
    std::vector<symbol_id> buffer(prompt.tokens().begin(), prompt.tokens().end());
    for (std::size_t i = 0; i < max_len; ++i) {
        auto table = quantize(model.predict(buffer));
        auto s = table.find(static_cast<std::uint32_t>(rng() >> (64 - frequency_bits)));
        buffer.push_back(s);
        out.push_back(s);
    }
    return out;
}

}  // namespace aitlm
