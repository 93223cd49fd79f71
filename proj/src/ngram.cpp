#include "aitlm/ngram.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "aitlm/byte_io.hpp"
#include "aitlm/error.hpp"
#include "aitlm/hash.hpp"

namespace aitlm {

namespace {

constexpr std::string_view model_magic = "AITM";
constexpr std::uint8_t model_version = 0x01;

}  // namespace

std::uint64_t ngram_model::row::count(symbol_id s) const noexcept {
    auto it = std::lower_bound(counts.begin(), counts.end(), s, [](const auto& e, symbol_id v) { return e.first < v; });
    return it != counts.end() && it->first == s ? it->second : 0;
}

ngram_model::ngram_model(alphabet_ptr sigma, unsigned order, double alpha)
    : alphabet_(std::move(sigma)), order_(order), alpha_(alpha) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw error(errc::invalid_argument, "smoothing constant must be > 0");
    if (order > 32) throw error(errc::invalid_argument, "n-gram order above 32 is not supported");
}

void ngram_model::observe(std::span<const symbol_id> history, symbol_id next) {
    if (next >= alphabet_->size()) throw error(errc::alphabet_mismatch, "token index outside the alphabet");
    std::size_t longest = std::min<std::size_t>(order_, history.size());
    for (std::size_t len = 0; len <= longest; ++len) {
        auto ctx = history.last(len);
        auto it = counts_.find(ctx);
        if (it == counts_.end()) it = counts_.emplace(std::vector<symbol_id>(ctx.begin(), ctx.end()), row{}).first;
        auto& r = it->second;
        auto pos = std::lower_bound(r.counts.begin(), r.counts.end(), next,
                                    [](const auto& e, symbol_id v) { return e.first < v; });
        if (pos != r.counts.end() && pos->first == next)
            ++pos->second;
        else
            r.counts.insert(pos, {next, 1});
        ++r.total;
    }
}

void ngram_model::train(const token_sequence& x) {
    check_alphabet(*this, x);
    auto tokens = x.tokens();
    for (std::size_t i = 0; i < tokens.size(); ++i) observe(tokens.first(i), tokens[i]);
}

distribution ngram_model::predict(std::span<const symbol_id> context) const {
    const std::size_t v = alphabet_->size();
    auto ctx = context.last(std::min<std::size_t>(order_, context.size()));
    auto it = counts_.find(ctx);
    if (it == counts_.end()) it = counts_.find(std::span<const symbol_id>{});
    if (it == counts_.end()) return distribution::uniform(v);

    const row& r = it->second;
    const double denom = static_cast<double>(r.total) + alpha_ * static_cast<double>(v);
    std::vector<double> p(v, alpha_ / denom);
    for (auto [s, c] : r.counts) p[s] = (static_cast<double>(c) + alpha_) / denom;
    return distribution::floored(std::move(p));
}

std::uint64_t ngram_model::count(std::span<const symbol_id> context, symbol_id next) const {
    auto it = counts_.find(context);
    return it == counts_.end() ? 0 : it->second.count(next);
}

std::string ngram_model::describe() const {
    return "ngram(order=" + std::to_string(order_) + ")";
}

std::vector<std::uint8_t> ngram_model::serialize() const {
    byte_writer out;
    out.raw(model_magic);
    out.u8(model_version);
    out.u32(static_cast<std::uint32_t>(alphabet_->size()));
    for (const auto& s : alphabet_->symbols()) {
        out.u32(static_cast<std::uint32_t>(s.size()));
        out.raw(s);
    }
    out.u32(order_);
    out.u64(std::bit_cast<std::uint64_t>(alpha_));
    out.u64(counts_.size());
    for (const auto& [ctx, r] : counts_) {
        out.u32(static_cast<std::uint32_t>(ctx.size()));
        for (auto s : ctx) out.u32(s);
        out.u32(static_cast<std::uint32_t>(r.counts.size()));
        for (auto [s, c] : r.counts) {
            out.u32(s);
            out.u64(c);
        }
    }
    return std::move(out).bytes();
}

ngram_model ngram_model::deserialize(std::span<const std::uint8_t> bytes) {
    byte_reader in(bytes);
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), model_magic.begin())) throw error(errc::bad_format, "not a model file (bad magic)");
    if (auto v = in.u8(); v != model_version) throw error(errc::bad_format, "unsupported model file version " + std::to_string(v));

    std::uint32_t size = in.u32();
    if (size < 2 || size > (1u << 16)) throw error(errc::bad_format, "model file alphabet size out of range");
    std::vector<std::string> symbols;
    for (std::uint32_t i = 0; i < size; ++i) {
        auto len = in.u32();
        auto raw = in.raw(len);
        symbols.emplace_back(raw.begin(), raw.end());
    }
    unsigned order = in.u32();
    double alpha = std::bit_cast<double>(in.u64());
    ngram_model model(alphabet::make(std::move(symbols)), order, alpha);

    std::uint64_t contexts = in.u64();
    for (std::uint64_t i = 0; i < contexts; ++i) {
        std::uint32_t len = in.u32();
        if (len > order) throw error(errc::bad_format, "context longer than model order");
        std::vector<symbol_id> ctx(len);
        for (auto& s : ctx) {
            s = in.u32();
            if (s >= size) throw error(errc::bad_format, "context symbol outside alphabet");
        }
        row r;
        std::uint32_t nnz = in.u32();
        for (std::uint32_t j = 0; j < nnz; ++j) {
            symbol_id s = in.u32();
            std::uint64_t c = in.u64();
            if (s >= size || c == 0 || (!r.counts.empty() && r.counts.back().first >= s))
                throw error(errc::bad_format, "malformed count row");
            r.counts.emplace_back(s, c);
            r.total += c;
        }
        if (!model.counts_.emplace(std::move(ctx), std::move(r)).second) throw error(errc::bad_format, "duplicate context");
    }
    if (in.remaining() != 0) throw error(errc::bad_format, "trailing bytes in model file");
    return model;
}

std::uint64_t ngram_model::content_hash() const {
    auto bytes = serialize();
    return fnv1a().update(bytes).digest();
}

ngram_model train_ngram(std::span<const token_sequence> corpus, unsigned order, double alpha) {
    if (corpus.empty()) throw error(errc::empty_input, "training corpus is empty");
    const auto& sigma = corpus.front().alphabet_handle();
    for (const auto& x : corpus)
        if (!(x.symbols() == *sigma)) throw error(errc::alphabet_mismatch, "corpus sequences use different alphabets");
    ngram_model model(sigma, order, alpha);
    for (const auto& x : corpus) model.train(x);
    return model;
}

void save_model(const std::filesystem::path& path, const ngram_model& model) {
    write_file_bytes(path, model.serialize());
}

ngram_model load_model(const std::filesystem::path& path) {
    return ngram_model::deserialize(read_file_bytes(path));
}

}  // namespace aitlm
