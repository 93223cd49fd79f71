#include "aitlm/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "aitlm/error.hpp"
#include "aitlm/hash.hpp"

namespace aitlm {

using json = nlohmann::json;

std::vector<std::vector<label_score>> label_scorer::score_batch(std::span<const label_query> queries) {
    std::vector<std::vector<label_score>> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(score(q.prompt, q.candidates));
    return out;
}

double remote_label_confidence(label_scorer& scorer, const std::string& prompt, const std::string& label) {
    std::string candidates[] = {label};
    auto scores = scorer.score(prompt, candidates);
    if (scores.size() != 1) throw error(errc::remote_protocol, "scorer returned the wrong number of scores");
    if (scores[0].token_count != 1)
        throw error(errc::multi_token_label, "label '" + label + "' spans " + std::to_string(scores[0].token_count) +
                                                 " tokens; verbalizers must map to exactly one token");
    return scores[0].probability;
}

double determinism_probe(label_scorer& scorer, const std::string& prompt, const std::string& label, unsigned repeats) {
    const double first = remote_label_confidence(scorer, prompt, label);
    double worst = 0;
    for (unsigned i = 1; i < repeats; ++i)
        worst = std::max(worst, std::abs(remote_label_confidence(scorer, prompt, label) - first));
    return worst;
}

namespace {

struct endpoint_url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

endpoint_url parse_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw error(errc::config, "endpoint '" + url + "' must include a scheme (http:// or https://)");
    auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw error(errc::config, "unsupported endpoint scheme '" + scheme + "'");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

void check_config(const remote_config& c) {
    if (c.endpoint.empty()) throw error(errc::config, "remote model needs an endpoint");
    if (c.model_id.empty()) throw error(errc::config, "remote model needs a model id");
    if (c.max_in_flight == 0) throw error(errc::config, "max in-flight requests must be >= 1");
    parse_endpoint(c.endpoint);
}

bool looks_like_overflow(const std::string& text) {
    return text.find("context_overflow") != std::string::npos || text.find("maximum context length") != std::string::npos ||
           text.find("context length") != std::string::npos;
}

// POSTs `body` and returns the parsed JSON reply. Connection failures, 429
// and 5xx are retried with exponential backoff; other failures are final.
json post_json(const remote_config& config, const json& body) {
    auto url = parse_endpoint(config.endpoint);
    httplib::Headers headers;
    if (config.auth_token) headers.emplace("Authorization", "Bearer " + *config.auth_token);
    const std::string payload = body.dump();

    std::string last_failure;
    for (unsigned attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config.retry_backoff * (1u << (attempt - 1)));
        httplib::Client client(url.origin);
        client.set_connection_timeout(config.timeout);
        client.set_read_timeout(config.timeout);
        client.set_write_timeout(config.timeout);
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_failure = "server returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            std::string type, message = res->body;
            try {
                auto err = json::parse(res->body).at("error");
                if (err.is_object()) {
                    type = err.value("type", "");
                    message = err.value("message", message);
                } else if (err.is_string()) {
                    message = err.get<std::string>();
                }
            } catch (const std::exception&) {
            }
            if (type == "context_overflow" || looks_like_overflow(message))
                throw error(errc::context_overflow, "prompt exceeds the remote context limit: " + message);
            throw error(errc::remote_protocol, "HTTP " + std::to_string(res->status) + ": " + message);
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw error(errc::remote_protocol, std::string("malformed JSON reply: ") + e.what());
        }
    }
    throw error(errc::transport, last_failure + " (after " + std::to_string(config.max_retries + 1) + " attempts)");
}

// Runs job(i) for i in [0, n) on at most `width` threads. The exception of
// the lowest failing index is rethrown after all workers finish.
template <class Job>
void run_bounded(std::size_t n, std::size_t width, Job job) {
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(width, n); ++w) pool.emplace_back(worker);
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
}

void check_prompt(const remote_config& config, const std::string& prompt) {
    if (prompt.size() > config.max_prompt_bytes)
        throw error(errc::context_overflow, "prompt of " + std::to_string(prompt.size()) + " bytes exceeds the configured limit of " +
                                                std::to_string(config.max_prompt_bytes));
}

double checked_probability(double p) {
    if (!(p > 0.0 && p <= 1.0 + 1e-12)) throw error(errc::remote_protocol, "remote probability outside (0,1]");
    return std::min(p, 1.0);
}

}  // namespace

// ------------------------------------------------------------ remote_scorer

remote_scorer::remote_scorer(remote_config config) : config_(std::move(config)) { check_config(config_); }

std::vector<label_score> remote_scorer::score(const std::string& prompt, std::span<const std::string> candidates) {
    check_prompt(config_, prompt);
    json body = {{"model_id", config_.model_id}, {"prompt", prompt}, {"candidates", candidates}};
    auto reply = post_json(config_, body);
    std::vector<label_score> out;
    try {
        const auto& probs = reply.at("probabilities");
        const auto& counts = reply.at("token_counts");
        if (probs.size() != candidates.size() || counts.size() != candidates.size())
            throw error(errc::remote_protocol, "reply length differs from the number of candidates");
        for (std::size_t i = 0; i < candidates.size(); ++i)
            out.push_back({checked_probability(probs[i].get<double>()), counts[i].get<std::size_t>()});
    } catch (const json::exception& e) {
        throw error(errc::remote_protocol, std::string("unexpected reply shape: ") + e.what());
    }
    return out;
}

std::vector<std::vector<label_score>> remote_scorer::score_batch(std::span<const label_query> queries) {
    std::vector<std::vector<label_score>> out(queries.size());
    run_bounded(queries.size(), config_.max_in_flight, [&](std::size_t i) { out[i] = score(queries[i].prompt, queries[i].candidates); });
    return out;
}

std::string remote_scorer::describe() const { return "remote:" + config_.model_id + "@" + config_.endpoint; }

std::uint64_t remote_scorer::content_hash() const {
    return fnv1a().update("remote").update(config_.model_id).update(config_.endpoint).digest();
}

// ------------------------------------------------------- completions_scorer

completions_scorer::completions_scorer(remote_config config) : config_(std::move(config)) { check_config(config_); }

label_score completions_scorer::score_one(const std::string& prompt, const std::string& label) {
    const std::string full = prompt + label;
    check_prompt(config_, full);
    json body = {{"model", config_.model_id}, {"prompt", full}, {"max_tokens", 1}, {"temperature", 0},
                 {"echo", true},              {"logprobs", 1}};
    auto reply = post_json(config_, body);
    try {
        const auto& lp = reply.at("choices").at(0).at("logprobs");
        const auto& tokens = lp.at("tokens");
        const auto& logprobs = lp.at("token_logprobs");
        const auto& offsets = lp.at("text_offset");
        label_score out;
        double label_logprob = 0;
        bool aligned = true;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto start = offsets.at(i).get<std::size_t>();
            const auto end = start + tokens.at(i).get<std::string>().size();
            if (start >= full.size()) break;  // generated continuation
            if (end <= prompt.size()) continue;
            if (start < prompt.size()) {
                aligned = false;
                break;
            }
            ++out.token_count;
            if (logprobs.at(i).is_null()) throw error(errc::remote_protocol, "missing log-probability for a label token");
            label_logprob += logprobs.at(i).get<double>();
        }
        if (!aligned)
            throw error(errc::multi_token_label, "label '" + label + "' does not start on a token boundary after the prompt");
        if (out.token_count == 0) throw error(errc::remote_protocol, "reply echoed no tokens for label '" + label + "'");
        out.probability = checked_probability(std::exp(label_logprob));
        return out;
    } catch (const json::exception& e) {
        throw error(errc::remote_protocol, std::string("unexpected completions reply: ") + e.what());
    }
}

std::vector<label_score> completions_scorer::score(const std::string& prompt, std::span<const std::string> candidates) {
    std::vector<label_score> out(candidates.size());
    run_bounded(candidates.size(), config_.max_in_flight, [&](std::size_t i) { out[i] = score_one(prompt, candidates[i]); });
    return out;
}

std::vector<std::vector<label_score>> completions_scorer::score_batch(std::span<const label_query> queries) {
    std::vector<std::pair<std::size_t, std::size_t>> flat;
    std::vector<std::vector<label_score>> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        out[q].resize(queries[q].candidates.size());
        for (std::size_t c = 0; c < queries[q].candidates.size(); ++c) flat.emplace_back(q, c);
    }
    run_bounded(flat.size(), config_.max_in_flight, [&](std::size_t i) {
        auto [q, c] = flat[i];
        out[q][c] = score_one(queries[q].prompt, queries[q].candidates[c]);
    });
    return out;
}

std::string completions_scorer::describe() const { return "completions:" + config_.model_id + "@" + config_.endpoint; }

std::uint64_t completions_scorer::content_hash() const {
    return fnv1a().update("completions").update(config_.model_id).update(config_.endpoint).digest();
}

}  // namespace aitlm
