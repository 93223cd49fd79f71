#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aitlm {

struct label_score {
    double probability = 0;       // P(label token | prompt)
    std::size_t token_count = 0;  // tokens the label occupies after the prompt
};

struct label_query {
    std::string prompt;
    std::vector<std::string> candidates;
};

// Anything that can report the next-token probability of a label after a
// prompt: the remote clients below, or a local stand-in.
class label_scorer {
public:
    virtual ~label_scorer() = default;

    virtual std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) = 0;
    // Independent queries; implementations may run them concurrently.
    // Results come back in query order.
    virtual std::vector<std::vector<label_score>> score_batch(std::span<const label_query> queries);

    virtual std::string describe() const = 0;
    virtual std::uint64_t content_hash() const = 0;
};

// Probability of `label` as the single next token after `prompt`. A label
// that spans more than one token is a hard error naming the label.
double remote_label_confidence(label_scorer& scorer, const std::string& prompt, const std::string& label);

struct remote_config {
    std::string endpoint;  // full URL, e.g. http://127.0.0.1:8000/v1/score
    std::string model_id;
    std::optional<std::string> auth_token;  // sent as "Authorization: Bearer"
    std::size_t max_in_flight = 4;
    unsigned max_retries = 3;
    std::chrono::milliseconds retry_backoff{100};
    std::chrono::seconds timeout{60};
    std::size_t max_prompt_bytes = 1 << 20;
};

// Name of the environment variable holding the auth token.
inline constexpr const char* auth_token_env = "AITLM_API_TOKEN";

// Native wire protocol:
//   POST {model_id, prompt, candidates:[...]}
//   ->   {probabilities:[...], token_counts:[...]}
// Errors come back as {"error": {"type": "...", "message": "..."}}; type
// "context_overflow" maps to errc::context_overflow.
class remote_scorer final : public label_scorer {
public:
    explicit remote_scorer(remote_config config);

    std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) override;
    std::vector<std::vector<label_score>> score_batch(std::span<const label_query> queries) override;
    std::string describe() const override;
    std::uint64_t content_hash() const override;

private:
    remote_config config_;
};

// Adapter for servers speaking the common completions format with
// per-token log-probabilities. Each candidate is scored with one request
// for prompt+label with echo enabled; tokens whose text offset falls inside
// the label give both the token count and the label log-probability.
class completions_scorer final : public label_scorer {
public:
    explicit completions_scorer(remote_config config);

    std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) override;
    std::vector<std::vector<label_score>> score_batch(std::span<const label_query> queries) override;
    std::string describe() const override;
    std::uint64_t content_hash() const override;

private:
    label_score score_one(const std::string& prompt, const std::string& label);

    remote_config config_;
};

// Issues the same request `repeats` times and returns the largest absolute
// difference from the first answer.
double determinism_probe(label_scorer& scorer, const std::string& prompt, const std::string& label, unsigned repeats = 10);

}  // namespace aitlm
