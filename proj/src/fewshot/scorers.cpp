#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "aitlm/error.hpp"
#include "aitlm/fewshot.hpp"
#include "aitlm/hash.hpp"

namespace aitlm::fewshot {

std::vector<label_score> hash_scorer::score(const std::string& prompt, std::span<const std::string> candidates) {
    std::vector<label_score> out;
    out.reserve(candidates.size());
    for (const auto& label : candidates) {
        const auto h = fnv1a().update_u64(salt_).update(prompt).update(label).digest();
        // Map to (0, 1]: a 53-bit mantissa plus one so zero never appears.
        out.push_back({static_cast<double>((splitmix64(h) >> 11) + 1) * 0x1p-53, 1});
    }
    return out;
}

std::string hash_scorer::describe() const { return "toy:" + std::to_string(salt_); }

std::uint64_t hash_scorer::content_hash() const { return fnv1a().update("toy").update_u64(salt_).digest(); }

in_context_scorer::in_context_scorer(std::vector<std::string> surfaces, double alpha)
    : surfaces_(std::move(surfaces)), alpha_(alpha) {
    if (surfaces_.empty()) throw error(errc::invalid_argument, "in-context scorer needs the label surfaces");
    if (!(alpha_ > 0)) throw error(errc::invalid_argument, "alpha must be positive");
}

namespace {

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '\'') {
            cur += static_cast<char>(std::tolower(u));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

std::vector<label_score> in_context_scorer::score(const std::string& prompt, std::span<const std::string> candidates) {
    const std::size_t classes = surfaces_.size();
    std::vector<std::map<std::string, double>> counts(classes);
    std::vector<double> totals(classes, 0), examples(classes, 0);
    std::set<std::string> vocabulary;

    std::size_t segment_start = 0;
    for (std::size_t pos = 0; pos < prompt.size(); ++pos) {
        for (std::size_t c = 0; c < classes; ++c) {
            const auto& s = surfaces_[c];
            const std::size_t end = pos + s.size();
            if (prompt.compare(pos, s.size(), s) != 0 || (end < prompt.size() && prompt[end] != '\n')) continue;
            for (auto& w : words(std::string_view(prompt).substr(segment_start, pos - segment_start))) {
                vocabulary.insert(w);
                counts[c][w] += 1;
                totals[c] += 1;
            }
            examples[c] += 1;
            segment_start = end;
            pos = end - 1;
            break;
        }
    }
    const auto query = words(std::string_view(prompt).substr(segment_start));
    vocabulary.insert(query.begin(), query.end());

    double n_examples = 0;
    for (double e : examples) n_examples += e;
    const double v = static_cast<double>(vocabulary.size());
    std::vector<double> log_post(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        log_post[c] = std::log((examples[c] + 1) / (n_examples + static_cast<double>(classes)));
        for (const auto& w : query) {
            auto it = counts[c].find(w);
            const double k = it == counts[c].end() ? 0 : it->second;
            log_post[c] += std::log((k + alpha_) / (totals[c] + alpha_ * v));
        }
    }
    const double top = *std::max_element(log_post.begin(), log_post.end());
    double z = 0;
    for (double lp : log_post) z += std::exp(lp - top);

    std::vector<label_score> out;
    out.reserve(candidates.size());
    for (const auto& label : candidates) {
        auto it = std::find(surfaces_.begin(), surfaces_.end(), label);
        if (it == surfaces_.end()) throw error(errc::invalid_argument, "label '" + label + "' is not one of the scorer's surfaces");
        const double p = std::exp(log_post[static_cast<std::size_t>(it - surfaces_.begin())] - top) / z;
        out.push_back({std::max(p, 0x1p-1074), 1});
    }
    return out;
}

std::string in_context_scorer::describe() const { return "incontext:" + std::to_string(alpha_); }

std::uint64_t in_context_scorer::content_hash() const {
    fnv1a h;
    h.update("incontext").update_u64(std::bit_cast<std::uint64_t>(alpha_));
    for (const auto& s : surfaces_) h.update(s).update_u64(s.size());
    return h.digest();
}

}  // namespace aitlm::fewshot
