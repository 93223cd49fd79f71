#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aitlm/error.hpp"
#include "aitlm/fewshot.hpp"
#include "aitlm/model.hpp"
#include "aitlm/remote.hpp"

namespace aitlm::cli {

using json = nlohmann::json;

// Resolves each setting as flag > config file > built-in default and
// remembers where every value came from.
class settings {
public:
    // `allowed` lists the keys the config file may contain.
    settings(const std::optional<std::string>& config_path, std::set<std::string> allowed);

    template <class T>
    T resolve(const std::string& key, const std::optional<T>& flag, T fallback) {
        if (flag) return record(key, *flag, "flag");
        if (auto v = from_file<T>(key)) return record(key, *v, "config");
        return record(key, std::move(fallback), "default");
    }

    template <class T>
    std::optional<T> resolve_optional(const std::string& key, const std::optional<T>& flag) {
        if (flag) return record(key, *flag, "flag");
        if (auto v = from_file<T>(key)) return record(key, *v, "config");
        resolved_[key] = {{"value", nullptr}, {"source", "default"}};
        log(key, "unset", "default");
        return std::nullopt;
    }

    // Every resolved key as {"value", "source"}.
    const json& resolved() const noexcept { return resolved_; }

private:
    template <class T>
    std::optional<T> from_file(const std::string& key) const {
        if (!file_.contains(key)) return std::nullopt;
        try {
            return file_.at(key).get<T>();
        } catch (const json::exception&) {
            throw error(errc::config, "config key '" + key + "' has the wrong type");
        }
    }

    template <class T>
    T record(const std::string& key, T value, const char* source) {
        resolved_[key] = {{"value", value}, {"source", source}};
        log(key, json(value).dump(), source);
        return value;
    }

    static void log(const std::string& key, const std::string& value, const char* source);

    json file_ = json::object();
    json resolved_ = json::object();
};

// "binary", "bytes" or "chars:<characters>".
alphabet_ptr parse_alphabet(std::string_view spec);

// "uniform:<alphabet>", "iid:<alphabet>:<w0>,<w1>,...", "ngram:<file.aitm>".
std::unique_ptr<probability_model> make_model(const std::string& spec);

// "toy:<salt>", "incontext[:<alpha>]", "remote:<model id>",
// "completions:<model id>". Remote kinds need an endpoint; `surfaces` are
// the verbalizer outputs of the active template.
std::unique_ptr<label_scorer> make_scorer(const std::string& spec, const std::optional<std::string>& endpoint,
                                          std::size_t max_in_flight, unsigned max_retries,
                                          const std::vector<std::string>& surfaces);

// A bare name resolves to the shipped template of that name.
fewshot::prompt_template resolve_template(const std::string& spec);
std::string default_template(fewshot::dataset_format format);

// "10,100,1000"
std::vector<std::size_t> parse_grid(std::string_view text);

std::string hex64(std::uint64_t v);

token_sequence read_sequence(const probability_model& model, const std::optional<std::string>& input,
                             const std::optional<std::string>& text);

}  // namespace aitlm::cli
