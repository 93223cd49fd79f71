#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "aitlm/byte_io.hpp"
#include "aitlm/cli.hpp"
#include "aitlm/ngram.hpp"

#ifndef AITLM_TEMPLATE_DIR
#define AITLM_TEMPLATE_DIR "templates"
#endif

namespace aitlm::cli {

int exit_code(errc code) noexcept {
    switch (code) {
        case errc::config:
        case errc::io:
        case errc::invalid_argument: return exit_config;
        case errc::transport:
        case errc::remote_protocol:
        case errc::multi_token_label:
        case errc::context_overflow: return exit_remote;
        default: return exit_input;
    }
}

settings::settings(const std::optional<std::string>& config_path, std::set<std::string> allowed) {
    if (!config_path) return;
    try {
        file_ = json::parse(read_text_file(*config_path));
    } catch (const json::exception& e) {
        throw error(errc::config, "config " + *config_path + ": " + e.what());
    } catch (const error& e) {
        throw error(errc::config, e.what());
    }
    if (!file_.is_object()) throw error(errc::config, "config " + *config_path + " must hold a JSON object");
    for (const auto& [key, _] : file_.items())
        if (!allowed.contains(key)) throw error(errc::config, "config " + *config_path + ": unknown key '" + key + "'");
}

void settings::log(const std::string& key, const std::string& value, const char* source) {
    std::cerr << "aitlm: " << key << " = " << value << " [" << source << "]\n";
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (auto pos = text.find(sep); pos != std::string_view::npos; pos = text.find(sep, start)) {
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    parts.push_back(text.substr(start));
    return parts;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw error(errc::config, "bad " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

}  // namespace

alphabet_ptr parse_alphabet(std::string_view spec) {
    if (spec == "binary") return alphabet::binary();
    if (spec == "bytes") return alphabet::bytes();
    if (spec.starts_with("chars:")) return alphabet::chars(spec.substr(6));
    throw error(errc::config, "unknown alphabet '" + std::string(spec) + "' (binary|bytes|chars:<characters>)");
}

std::unique_ptr<probability_model> make_model(const std::string& spec) {
    std::string_view s = spec;
    if (s.starts_with("uniform:")) return std::make_unique<uniform_model>(parse_alphabet(s.substr(8)));
    if (s.starts_with("iid:")) {
        auto rest = s.substr(4);
        auto colon = rest.rfind(':');
        if (colon == std::string_view::npos) throw error(errc::config, "iid model spec is iid:<alphabet>:<weights>");
        std::vector<double> weights;
        for (auto w : split(rest.substr(colon + 1), ',')) weights.push_back(parse_number<double>(w, "weight"));
        return std::make_unique<iid_model>(parse_alphabet(rest.substr(0, colon)), std::move(weights));
    }
    if (s.starts_with("ngram:")) {
        try {
            return std::make_unique<ngram_model>(load_model(std::string(s.substr(6))));
        } catch (const error& e) {
            if (e.code() == errc::io) throw error(errc::config, std::string("model file: ") + e.what());
            throw;
        }
    }
    throw error(errc::config, "unknown model spec '" + spec + "' (uniform:<alphabet>|iid:<alphabet>:<weights>|ngram:<file>)");
}

std::unique_ptr<label_scorer> make_scorer(const std::string& spec, const std::optional<std::string>& endpoint,
                                          std::size_t max_in_flight, unsigned max_retries,
                                          const std::vector<std::string>& surfaces) {
    std::string_view s = spec;
    if (s.starts_with("toy:")) return std::make_unique<fewshot::hash_scorer>(parse_number<std::uint64_t>(s.substr(4), "toy salt"));
    if (s == "incontext") return std::make_unique<fewshot::in_context_scorer>(surfaces);
    if (s.starts_with("incontext:"))
        return std::make_unique<fewshot::in_context_scorer>(surfaces, parse_number<double>(s.substr(10), "in-context alpha"));
    const bool native = s.starts_with("remote:");
    if (native || s.starts_with("completions:")) {
        if (!endpoint || endpoint->empty()) throw error(errc::config, "model '" + spec + "' needs --endpoint");
        remote_config config;
        config.endpoint = *endpoint;
        config.model_id = std::string(s.substr(s.find(':') + 1));
        config.max_in_flight = max_in_flight;
        config.max_retries = max_retries;
        if (const char* token = std::getenv(auth_token_env); token && *token) config.auth_token = token;
        if (native) return std::make_unique<remote_scorer>(std::move(config));
        return std::make_unique<completions_scorer>(std::move(config));
    }
    throw error(errc::config, "unknown scorer spec '" + spec + "' (toy:<salt>|incontext[:<alpha>]|remote:<id>|completions:<id>)");
}

fewshot::prompt_template resolve_template(const std::string& spec) {
    std::filesystem::path path = spec;
    if (spec.find('/') == std::string::npos && !spec.ends_with(".json"))
        path = std::filesystem::path(AITLM_TEMPLATE_DIR) / (spec + ".json");
    try {
        return fewshot::load_template(path);
    } catch (const error& e) {
        if (e.code() == errc::io) throw error(errc::config, std::string("template: ") + e.what());
        throw;
    }
}

std::string default_template(fewshot::dataset_format format) {
    switch (format) {
        case fewshot::dataset_format::sms_tsv: return "sms";
        case fewshot::dataset_format::emotion_rows: return "emotion";
        case fewshot::dataset_format::agnews_rows: return "agnews";
    }
    return "sms";
}

std::vector<std::size_t> parse_grid(std::string_view text) {
    std::vector<std::size_t> grid;
    for (auto part : split(text, ',')) grid.push_back(parse_number<std::size_t>(part, "grid entry"));
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] == 0 || (i > 0 && grid[i] <= grid[i - 1]))
            throw error(errc::config, "grid must be positive and strictly increasing");
    return grid;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

token_sequence read_sequence(const probability_model& model, const std::optional<std::string>& input,
                             const std::optional<std::string>& text) {
    if (input.has_value() == text.has_value()) throw error(errc::config, "give exactly one of --input and --text");
    std::string content;
    if (text) {
        content = *text;
    } else {
        try {
            content = read_text_file(*input);
        } catch (const error& e) {
            throw error(errc::config, e.what());
        }
    }
    return token_sequence::from_text(model.symbols(), content);
}

}  // namespace aitlm::cli
