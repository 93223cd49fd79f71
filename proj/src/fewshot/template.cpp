#include <json.hpp>

#include <set>

#include "aitlm/byte_io.hpp"
#include "aitlm/error.hpp"
#include "aitlm/fewshot.hpp"

namespace aitlm::fewshot {

using json = nlohmann::json;

namespace {

std::size_t count_of(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size())) ++n;
    return n;
}

// Single pass over `pattern`; substituted text is never rescanned.
std::string substitute(std::string_view pattern, std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        bool replaced = false;
        if (pattern[i] == '{') {
            for (auto [key, value] : values) {
                if (pattern.substr(i).starts_with(key)) {
                    out += value;
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out += pattern[i++];
    }
    return out;
}

}  // namespace

const std::string& prompt_template::verbalize(const std::string& label) const {
    auto it = verbalizer.find(label);
    if (it == verbalizer.end()) throw error(errc::bad_format, "template '" + name + "' has no verbalizer for label '" + label + "'");
    return it->second;
}

void prompt_template::validate() const {
    if (count_of(system_text, "{examples}") != 1)
        throw error(errc::bad_format, "template '" + name + "': system text must contain the {examples} placeholder exactly once");
    if (count_of(example_pattern, "{text}") != 1 || count_of(example_pattern, "{label}") != 1)
        throw error(errc::bad_format, "template '" + name + "': example pattern needs {text} and {label} exactly once");
    if (count_of(query_pattern, "{text}") != 1)
        throw error(errc::bad_format, "template '" + name + "': query pattern needs {text} exactly once");
    if (verbalizer.empty()) throw error(errc::bad_format, "template '" + name + "': empty verbalizer");
    std::set<std::string> surfaces;
    for (const auto& [label, surface] : verbalizer) {
        if (surface.empty()) throw error(errc::bad_format, "template '" + name + "': empty verbalizer output for '" + label + "'");
        if (!surfaces.insert(surface).second)
            throw error(errc::bad_format, "template '" + name + "': verbalizer output '" + surface + "' is used twice");
    }
}

prompt_template load_template(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw error(errc::bad_format, "template " + path.string() + ": " + e.what());
    }
    static const std::set<std::string> known = {"name", "system_file", "system_text", "example", "query", "delimiter", "verbalizer"};
    for (const auto& [key, _] : doc.items())
        if (!known.contains(key)) throw error(errc::bad_format, "template " + path.string() + ": unknown key '" + key + "'");

    prompt_template t;
    try {
        t.name = doc.value("name", path.stem().string());
        if (doc.contains("system_file"))
            t.system_text = read_text_file(path.parent_path() / doc.at("system_file").get<std::string>());
        else
            t.system_text = doc.at("system_text").get<std::string>();
        t.example_pattern = doc.at("example").get<std::string>();
        t.query_pattern = doc.at("query").get<std::string>();
        t.delimiter = doc.value("delimiter", std::string("\n"));
        t.verbalizer = doc.at("verbalizer").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw error(errc::bad_format, "template " + path.string() + ": " + e.what());
    }
    t.validate();
    return t;
}

std::string render_prompt(const prompt_template& tmpl, std::span<const labeled_example> examples,
                          const std::optional<std::string>& query) {
    std::string block;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i) block += tmpl.delimiter;
        block += substitute(tmpl.example_pattern, {{"{text}", examples[i].text}, {"{label}", tmpl.verbalize(examples[i].label)}});
    }
    auto pos = tmpl.system_text.find("{examples}");
    if (pos == std::string::npos) throw error(errc::bad_format, "template '" + tmpl.name + "' is missing the {examples} placeholder");
    std::string out = tmpl.system_text.substr(0, pos) + block + tmpl.system_text.substr(pos + 10);
    if (query) out += substitute(tmpl.query_pattern, {{"{text}", *query}});
    return out;
}

void validate_verbalizers(label_scorer& scorer, const prompt_template& tmpl) {
    const std::string probe = render_prompt(tmpl, {}, std::string("probe"));
    for (const auto& [label, surface] : tmpl.verbalizer) remote_label_confidence(scorer, probe, surface);
}

}  // namespace aitlm::fewshot
