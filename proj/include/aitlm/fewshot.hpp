#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aitlm/remote.hpp"

namespace aitlm::fewshot {

struct labeled_example {
    std::string text;
    std::string label;
    std::size_t source_index = 0;  // position in the pool
};

enum class dataset_format { sms_tsv, emotion_rows, agnews_rows };

dataset_format parse_format(std::string_view name);
std::string_view to_string(dataset_format format) noexcept;
// Class names in their fixed order for the format.
const std::vector<std::string>& label_set(dataset_format format);

struct dataset_options {
    std::filesystem::path path;
    dataset_format format = dataset_format::sms_tsv;
    // Predefined test split; when absent the file is split first.
    std::optional<std::filesystem::path> test_path;
    std::uint64_t seed = 1;
    double test_fraction = 0.2;
    std::size_t pool_cap_per_class = 500;
    std::size_t test_cap = 2000;
};

struct dataset {
    std::vector<std::string> labels;
    std::vector<labeled_example> pool;
    std::vector<labeled_example> test;
};

// Parses one file into rows (source_index = row order). Malformed rows are
// reported with their 1-based line number.
std::vector<labeled_example> parse_rows(std::string_view content, dataset_format format);
dataset load_dataset(const dataset_options& options);

// ---------------------------------------------------------------- templates

struct prompt_template {
    std::string name;
    std::string system_text;       // contains "{examples}"
    std::string example_pattern;   // "{text}" and "{label}"
    std::string query_pattern;     // "{text}"; the label token follows it
    std::string delimiter = "\n";  // between rendered examples
    std::map<std::string, std::string> verbalizer;  // label -> surface token

    const std::string& verbalize(const std::string& label) const;
    void validate() const;
};

// JSON descriptor: {"name", "system_file" | "system_text", "example",
// "query", "delimiter", "verbalizer": {label: surface}}. "system_file" is
// resolved relative to the descriptor.
prompt_template load_template(const std::filesystem::path& path);

std::string render_prompt(const prompt_template& tmpl, std::span<const labeled_example> examples,
                          const std::optional<std::string>& query = std::nullopt);

// Checks that every verbalizer output scores as exactly one token.
void validate_verbalizers(label_scorer& scorer, const prompt_template& tmpl);

// --------------------------------------------------------------- selection

enum class selection_mode { low, high };

selection_mode parse_mode(std::string_view text);
std::string_view to_string(selection_mode mode) noexcept;

// Largest-remainder split of k_total over the classes, remainders going to
// the earlier labels on ties.
std::vector<std::size_t> class_quotas(std::size_t k_total, std::size_t classes);

struct selection_step {
    std::size_t step = 0;
    std::string label;
    std::size_t source_index = 0;
    std::string text;
    double confidence = 0;
    std::size_t candidates_scanned = 0;
};

struct selection_report {
    selection_mode mode = selection_mode::low;
    std::size_t k_total = 0;
    std::vector<std::string> labels;
    std::vector<std::size_t> quotas;
    std::vector<selection_step> steps;
    std::map<std::string, std::size_t> per_class_counts;
    std::string final_prompt;
    bool complete = false;
    std::string failure;  // set when the run aborted with a partial report

    std::vector<labeled_example> selected() const;
};

struct selection_options {
    std::size_t k_total = 10;
    selection_mode mode = selection_mode::low;
    unsigned step_retries = 2;
};

// Greedy confidence-extremal selection, round-robin over classes in label
// order. Each step scores prompt(selected) + candidate for every remaining
// candidate of the current class and keeps the minimum (low) or maximum
// (high) label probability; ties go to the smaller source_index.
selection_report select_examples(std::span<const labeled_example> pool, std::span<const std::string> labels,
                                 label_scorer& scorer, const prompt_template& tmpl, const selection_options& options);

struct evaluation_result {
    std::size_t total = 0;
    std::size_t scored = 0;
    std::size_t correct = 0;
    std::size_t skipped = 0;  // items whose queries failed after retries
    double accuracy = 0;      // correct / scored
    std::vector<std::string> predictions;  // "" for skipped items
};

// Predicted label = argmax over verbalizer tokens after the rendered prompt;
// ties go to the earlier label.
evaluation_result evaluate(label_scorer& scorer, const prompt_template& tmpl, std::span<const labeled_example> examples,
                           std::span<const labeled_example> test, std::span<const std::string> labels, unsigned retries = 2);

// ------------------------------------------------------------ local scorers

// Deterministic pseudo-random confidences from a hash of (salt, prompt,
// label); every label counts as one token.
class hash_scorer final : public label_scorer {
public:
    explicit hash_scorer(std::uint64_t salt) : salt_(salt) {}

    std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) override;
    std::string describe() const override;
    std::uint64_t content_hash() const override;

private:
    std::uint64_t salt_;
};

// Local in-context learner. The prompt is split into answered examples at
// every verbalizer surface that ends a line; the text after the last one is
// the query. Each class gets an add-alpha unigram word model from its
// examples, and the candidates receive the naive Bayes posterior over all
// surfaces. Only the examples in the prompt are seen, so the choice of
// examples changes the predictions.
class in_context_scorer final : public label_scorer {
public:
    explicit in_context_scorer(std::vector<std::string> surfaces, double alpha = 1.0);

    std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) override;
    std::string describe() const override;
    std::uint64_t content_hash() const override;

private:
    std::vector<std::string> surfaces_;
    double alpha_;
};

}  // namespace aitlm::fewshot
