#include <algorithm>

#include "aitlm/error.hpp"
#include "aitlm/fewshot.hpp"

namespace aitlm::fewshot {

selection_mode parse_mode(std::string_view text) {
    if (text == "low") return selection_mode::low;
    if (text == "high") return selection_mode::high;
    throw error(errc::config, "unknown selection mode '" + std::string(text) + "' (low|high)");
}

std::string_view to_string(selection_mode mode) noexcept { return mode == selection_mode::low ? "low" : "high"; }

std::vector<std::size_t> class_quotas(std::size_t k_total, std::size_t classes) {
    if (classes == 0) throw error(errc::invalid_argument, "no classes");
    std::vector<std::size_t> quotas(classes, k_total / classes);
    // Every remainder is equal, so the earliest labels take the extra slots.
    for (std::size_t c = 0; c < k_total % classes; ++c) ++quotas[c];
    return quotas;
}

std::vector<labeled_example> selection_report::selected() const {
    std::vector<labeled_example> out;
    for (const auto& s : steps) out.push_back({s.text, s.label, s.source_index});
    return out;
}

namespace {

template <class Fn>
auto with_retries(unsigned retries, Fn fn) {
    for (unsigned attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const error& e) {
            if (e.code() != errc::transport || attempt >= retries) throw;
        }
    }
}

void require_single_token(const label_score& s, const std::string& surface) {
    if (s.token_count != 1)
        throw error(errc::multi_token_label, "label '" + surface + "' spans " + std::to_string(s.token_count) +
                                                 " tokens; verbalizers must map to exactly one token");
}

}  // namespace

selection_report select_examples(std::span<const labeled_example> pool, std::span<const std::string> labels,
                                 label_scorer& scorer, const prompt_template& tmpl, const selection_options& options) {
    selection_report report;
    report.mode = options.mode;
    report.k_total = options.k_total;
    report.labels.assign(labels.begin(), labels.end());
    report.quotas = class_quotas(options.k_total, labels.size());

    // remaining[c]: pool positions of class c, ascending source_index
    std::vector<std::vector<std::size_t>> remaining(labels.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto it = std::find(labels.begin(), labels.end(), pool[i].label);
        if (it == labels.end()) throw error(errc::invalid_argument, "pool example has unknown label '" + pool[i].label + "'");
        remaining[static_cast<std::size_t>(it - labels.begin())].push_back(i);
    }
    for (auto& r : remaining)
        std::sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) { return pool[a].source_index < pool[b].source_index; });
    for (std::size_t c = 0; c < labels.size(); ++c) {
        report.per_class_counts[labels[c]] = 0;
        if (remaining[c].size() < report.quotas[c])
            throw error(errc::class_exhausted, "class '" + labels[c] + "' has " + std::to_string(remaining[c].size()) +
                                                   " candidates but needs " + std::to_string(report.quotas[c]));
    }

    std::vector<labeled_example> chosen;
    std::vector<std::size_t> taken(labels.size(), 0);
    std::size_t cursor = 0;
    for (std::size_t step = 1; step <= options.k_total; ++step) {
        while (taken[cursor % labels.size()] >= report.quotas[cursor % labels.size()]) ++cursor;
        const std::size_t c = cursor++ % labels.size();
        const std::string& surface = tmpl.verbalize(labels[c]);

        std::vector<label_query> queries;
        queries.reserve(remaining[c].size());
        for (auto i : remaining[c]) queries.push_back({render_prompt(tmpl, chosen, pool[i].text), {surface}});

        std::vector<std::vector<label_score>> scores;
        try {
            scores = with_retries(options.step_retries, [&] { return scorer.score_batch(queries); });
        } catch (const error& e) {
            if (e.code() != errc::transport) throw;
            report.failure = "step " + std::to_string(step) + ": " + e.what();
            report.final_prompt = render_prompt(tmpl, chosen);
            return report;
        }

        std::size_t best = 0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            require_single_token(scores[j].at(0), surface);
            const double conf = scores[j][0].probability;
            const double incumbent = scores[best][0].probability;
            const bool better = options.mode == selection_mode::low ? conf < incumbent : conf > incumbent;
            // remaining[c] is sorted by source_index, so on equal confidence
            // the earlier candidate stays.
            if (j > 0 && better) best = j;
        }

        const auto& pick = pool[remaining[c][best]];
        report.steps.push_back({step, pick.label, pick.source_index, pick.text, scores[best][0].probability, scores.size()});
        chosen.push_back(pick);
        remaining[c].erase(remaining[c].begin() + static_cast<std::ptrdiff_t>(best));
        ++taken[c];
        ++report.per_class_counts[labels[c]];
    }
    report.final_prompt = render_prompt(tmpl, chosen);
    report.complete = true;
    return report;
}

evaluation_result evaluate(label_scorer& scorer, const prompt_template& tmpl, std::span<const labeled_example> examples,
                           std::span<const labeled_example> test, std::span<const std::string> labels, unsigned retries) {
    if (test.empty()) throw error(errc::empty_input, "test set is empty");
    std::vector<std::string> surfaces;
    for (const auto& l : labels) surfaces.push_back(tmpl.verbalize(l));

    evaluation_result result;
    result.total = test.size();
    result.predictions.resize(test.size());

    auto tally = [&](std::size_t i, const std::vector<label_score>& scores) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            require_single_token(scores[k], surfaces[k]);
            if (scores[k].probability > scores[best].probability) best = k;
        }
        result.predictions[i] = labels[best];
        ++result.scored;
        if (labels[best] == test[i].label) ++result.correct;
    };

    constexpr std::size_t chunk = 32;
    for (std::size_t begin = 0; begin < test.size(); begin += chunk) {
        const std::size_t end = std::min(test.size(), begin + chunk);
        std::vector<label_query> queries;
        for (std::size_t i = begin; i < end; ++i) queries.push_back({render_prompt(tmpl, examples, test[i].text), surfaces});
        try {
            auto scores = with_retries(retries, [&] { return scorer.score_batch(queries); });
            for (std::size_t i = begin; i < end; ++i) tally(i, scores[i - begin]);
        } catch (const error& e) {
            if (e.code() != errc::transport) throw;
            // Fall back to item-level queries so one bad item does not sink the chunk.
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    tally(i, with_retries(retries, [&] { return scorer.score(queries[i - begin].prompt, surfaces); }));
                } catch (const error& inner) {
                    if (inner.code() != errc::transport) throw;
                    ++result.skipped;
                }
            }
        }
    }
    result.accuracy = result.scored ? static_cast<double>(result.correct) / static_cast<double>(result.scored) : 0.0;
    return result;
}

}  // namespace aitlm::fewshot
