#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aitlm {

using symbol_id = std::uint32_t;

// Ordered finite set of distinct symbols with a bijective index mapping.
class alphabet {
public:
    explicit alphabet(std::vector<std::string> symbols);

    static std::shared_ptr<const alphabet> make(std::vector<std::string> symbols);
    // Symbols "0" and "1".
    static std::shared_ptr<const alphabet> binary();
    // All 256 single-byte symbols in byte order.
    static std::shared_ptr<const alphabet> bytes();
    // One symbol per character of `chars` (each a single byte).
    static std::shared_ptr<const alphabet> chars(std::string_view chars);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::string& symbol(symbol_id i) const { return symbols_.at(i); }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    symbol_id index_of(std::string_view symbol) const;
    bool single_byte_symbols() const noexcept { return single_byte_; }

    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    friend bool operator==(const alphabet& a, const alphabet& b) noexcept { return a.symbols_ == b.symbols_; }

private:
    std::vector<std::string> symbols_;
    std::map<std::string, symbol_id, std::less<>> index_;
    bool single_byte_ = true;
    std::uint64_t fingerprint_ = 0;
};

using alphabet_ptr = std::shared_ptr<const alphabet>;

class token_sequence {
public:
    explicit token_sequence(alphabet_ptr sigma, std::vector<symbol_id> tokens = {});

    // Maps each byte of `text` to a symbol; needs a single-byte alphabet.
    static token_sequence from_text(alphabet_ptr sigma, std::string_view text);
    std::string to_text() const;

    const alphabet& symbols() const noexcept { return *alphabet_; }
    const alphabet_ptr& alphabet_handle() const noexcept { return alphabet_; }
    std::span<const symbol_id> tokens() const noexcept { return tokens_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    symbol_id operator[](std::size_t i) const noexcept { return tokens_[i]; }

    void push_back(symbol_id s);
    token_sequence prefix(std::size_t length) const;

    friend bool operator==(const token_sequence& a, const token_sequence& b) noexcept {
        return *a.alphabet_ == *b.alphabet_ && a.tokens_ == b.tokens_;
    }

private:
    alphabet_ptr alphabet_;
    std::vector<symbol_id> tokens_;
};

// Every model output passes through this floor before it is used.
inline constexpr double probability_floor = 1.0 / (1 << 20);

// Probability vector over an alphabet; all entries >= probability_floor and
// the sum is 1 within 2^-30.
class distribution {
public:
    // Normalizes `weights`, then raises entries below the floor and scales
    // the rest proportionally until every entry is at least the floor.
    static distribution floored(std::vector<double> weights);
    static distribution uniform(std::size_t size);

    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t i) const noexcept { return p_[i]; }
    std::span<const double> values() const noexcept { return p_; }

private:
    explicit distribution(std::vector<double> p) : p_(std::move(p)) {}
    std::vector<double> p_;
};

// 24-bit fixed-point cumulative frequencies derived from a distribution.
// Encoder, decoder and sampler all call quantize() on the same distribution
// and therefore agree bit for bit.
inline constexpr unsigned frequency_bits = 24;
inline constexpr std::uint32_t frequency_total = 1u << frequency_bits;

class frequency_table {
public:
    std::uint32_t freq(symbol_id s) const noexcept { return cum_[s + 1] - cum_[s]; }
    std::uint32_t cum(symbol_id s) const noexcept { return cum_[s]; }
    std::size_t size() const noexcept { return cum_.size() - 1; }
    double probability(symbol_id s) const noexcept { return static_cast<double>(freq(s)) / frequency_total; }
    // Symbol whose interval [cum, cum+freq) contains `target`.
    symbol_id find(std::uint32_t target) const;
    std::uint64_t fingerprint() const noexcept;

    friend frequency_table quantize(const distribution& d);

private:
    std::vector<std::uint32_t> cum_;
};

frequency_table quantize(const distribution& d);

class probability_model {
public:
    virtual ~probability_model() = default;

    virtual const alphabet_ptr& symbols() const noexcept = 0;
    // P(next | context); `context` holds symbol ids already validated
    // against symbols().
    virtual distribution predict(std::span<const symbol_id> context) const = 0;
    virtual std::uint64_t content_hash() const = 0;
    virtual std::string describe() const = 0;
};

// Checks the alphabet, then returns model.predict(context).
distribution next_distribution(const probability_model& model, const token_sequence& context);

class uniform_model final : public probability_model {
public:
    explicit uniform_model(alphabet_ptr sigma) : alphabet_(std::move(sigma)) {}

    const alphabet_ptr& symbols() const noexcept override { return alphabet_; }
    distribution predict(std::span<const symbol_id>) const override { return distribution::uniform(alphabet_->size()); }
    std::uint64_t content_hash() const override;
    std::string describe() const override { return "uniform"; }

private:
    alphabet_ptr alphabet_;
};

// Context-free categorical model; every position draws from the same
// (floored) distribution.
class iid_model final : public probability_model {
public:
    iid_model(alphabet_ptr sigma, std::vector<double> weights);

    const alphabet_ptr& symbols() const noexcept override { return alphabet_; }
    distribution predict(std::span<const symbol_id>) const override { return dist_; }
    std::uint64_t content_hash() const override;
    std::string describe() const override { return "iid"; }

private:
    alphabet_ptr alphabet_;
    distribution dist_;
};

void check_alphabet(const probability_model& model, const token_sequence& x);

// -sum log2 P(x_i | x_<i), using floored model probabilities.
double sequence_log_loss(const probability_model& model, const token_sequence& x);

// prompt followed by up to max_len sampled symbols. Sampling uses
// std::mt19937_64 seeded with `seed` and draws 24-bit integers against the
// quantized table, so the output is identical on every platform.
token_sequence generate(const probability_model& model, const token_sequence& prompt, std::uint64_t seed,
                        std::size_t max_len);

}  // namespace aitlm
