#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "aitlm/model.hpp"

namespace aitlm {

// Additive-smoothing n-gram model. Counts are kept for every context length
// 0..order; prediction uses the longest context available at the current
// position (shorter at the start of a sequence) and falls back to the
// order-0 counts when that context was never observed.
//
//   P(a | ctx) = (count(ctx, a) + alpha) / (count(ctx) + alpha * |V|)
class ngram_model final : public probability_model {
public:
    static constexpr double default_alpha = 0.5;

    struct row {
        std::vector<std::pair<symbol_id, std::uint64_t>> counts;  // sorted by symbol
        std::uint64_t total = 0;

        std::uint64_t count(symbol_id s) const noexcept;
    };

    struct context_less {
        using is_transparent = void;
        template <class A, class B>
        bool operator()(const A& a, const B& b) const {
            return std::lexicographical_compare(std::begin(a), std::end(a), std::begin(b), std::end(b));
        }
    };

    using table = std::map<std::vector<symbol_id>, row, context_less>;

    ngram_model(alphabet_ptr sigma, unsigned order, double alpha = default_alpha);

    // Adds one (context, next) observation for each context length the
    // position supports. `history` is everything before `next`.
    void observe(std::span<const symbol_id> history, symbol_id next);
    void train(const token_sequence& x);

    const alphabet_ptr& symbols() const noexcept override { return alphabet_; }
    distribution predict(std::span<const symbol_id> context) const override;
    std::uint64_t content_hash() const override;
    std::string describe() const override;

    unsigned order() const noexcept { return order_; }
    double alpha() const noexcept { return alpha_; }
    const table& counts() const noexcept { return counts_; }
    // Count of `next` after exactly `context`; 0 if unseen.
    std::uint64_t count(std::span<const symbol_id> context, symbol_id next) const;

    std::vector<std::uint8_t> serialize() const;
    static ngram_model deserialize(std::span<const std::uint8_t> bytes);

private:
    alphabet_ptr alphabet_;
    unsigned order_;
    double alpha_;
    table counts_;
};

ngram_model train_ngram(std::span<const token_sequence> corpus, unsigned order, double alpha = ngram_model::default_alpha);

// "AITM" container: version, alphabet table, order, alpha, count table.
void save_model(const std::filesystem::path& path, const ngram_model& model);
ngram_model load_model(const std::filesystem::path& path);

}  // namespace aitlm
