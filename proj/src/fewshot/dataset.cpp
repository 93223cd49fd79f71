#include <algorithm>
#include <charconv>
#include <random>

#include "aitlm/byte_io.hpp"
#include "aitlm/error.hpp"
#include "aitlm/fewshot.hpp"
#include "aitlm/hash.hpp"

namespace aitlm::fewshot {

namespace {

const std::vector<std::string> sms_labels = {"spam", "ham"};
const std::vector<std::string> emotion_labels = {"sadness", "joy", "love", "anger", "fear", "surprise"};
const std::vector<std::string> agnews_labels = {"World", "Sports", "Business", "Sci/Tech"};

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
    throw error(errc::bad_format, "line " + std::to_string(line) + ": " + why);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<std::size_t> parse_index(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string resolve_label(std::string_view raw, const std::vector<std::string>& labels, std::size_t base, std::size_t line) {
    raw = trim(raw);
    if (auto idx = parse_index(raw)) {
        if (*idx < base || *idx - base >= labels.size()) malformed(line, "class index " + std::string(raw) + " out of range");
        return labels[*idx - base];
    }
    for (const auto& l : labels)
        if (l == raw) return l;
    malformed(line, "unknown label '" + std::string(raw) + "'");
}

// RFC 4180 style fields on a single line.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    if (quoted) malformed(line_no, "unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased and implementation-independent.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return r % n;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(rng, i)]);
    return p;
}

std::vector<labeled_example> reindexed(std::vector<labeled_example> rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].source_index = i;
    return rows;
}

// Keeps rows in file order; `keep` lists positions into `rows`.
std::vector<labeled_example> pick(const std::vector<labeled_example>& rows, std::vector<std::size_t> keep) {
    std::sort(keep.begin(), keep.end());
    std::vector<labeled_example> out;
    out.reserve(keep.size());
    for (auto k : keep) out.push_back(rows[k]);
    return out;
}

}  // namespace

dataset_format parse_format(std::string_view name) {
    if (name == "sms-tsv") return dataset_format::sms_tsv;
    if (name == "emotion-rows") return dataset_format::emotion_rows;
    if (name == "agnews-rows") return dataset_format::agnews_rows;
    throw error(errc::config, "unknown dataset format '" + std::string(name) + "' (sms-tsv|emotion-rows|agnews-rows)");
}

std::string_view to_string(dataset_format format) noexcept {
    switch (format) {
        case dataset_format::sms_tsv: return "sms-tsv";
        case dataset_format::emotion_rows: return "emotion-rows";
        case dataset_format::agnews_rows: return "agnews-rows";
    }
    return "unknown";
}

const std::vector<std::string>& label_set(dataset_format format) {
    switch (format) {
        case dataset_format::sms_tsv: return sms_labels;
        case dataset_format::emotion_rows: return emotion_labels;
        case dataset_format::agnews_rows: return agnews_labels;
    }
    return sms_labels;
}

std::vector<labeled_example> parse_rows(std::string_view content, dataset_format format) {
    const auto& labels = label_set(format);
    std::vector<labeled_example> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;

        labeled_example ex;
        switch (format) {
            case dataset_format::sms_tsv: {
                auto tab = line.find('\t');
                if (tab == std::string_view::npos) malformed(line_no, "expected 'label<TAB>text'");
                ex.label = resolve_label(line.substr(0, tab), labels, 0, line_no);
                ex.text = std::string(line.substr(tab + 1));
                break;
            }
            case dataset_format::emotion_rows: {
                auto sep = line.rfind(';');
                if (sep == std::string_view::npos) malformed(line_no, "expected 'text;label'");
                ex.label = resolve_label(line.substr(sep + 1), labels, 0, line_no);
                ex.text = std::string(trim(line.substr(0, sep)));
                break;
            }
            case dataset_format::agnews_rows: {
                auto fields = split_csv(line, line_no);
                if (fields.size() != 3) malformed(line_no, "expected 3 CSV fields (class, title, description)");
                ex.label = resolve_label(fields[0], labels, 1, line_no);
                ex.text = std::string(trim(fields[1])) + " " + std::string(trim(fields[2]));
                break;
            }
        }
        if (trim(ex.text).empty()) malformed(line_no, "empty text");
        ex.source_index = rows.size();
        rows.push_back(std::move(ex));
    }
    return rows;
}

dataset load_dataset(const dataset_options& options) {
    auto rows = parse_rows(read_text_file(options.path), options.format);
    if (rows.empty()) throw error(errc::empty_input, "dataset " + options.path.string() + " has no rows");

    std::vector<labeled_example> train, test;
    if (options.test_path) {
        train = std::move(rows);
        test = parse_rows(read_text_file(*options.test_path), options.format);
    } else {
        if (!(options.test_fraction > 0 && options.test_fraction < 1))
            throw error(errc::config, "test fraction must lie in (0,1)");
        auto perm = permutation(rows.size(), splitmix64(options.seed ^ 0x73706c6974ull));
        auto n_test = static_cast<std::size_t>(options.test_fraction * static_cast<double>(rows.size()) + 0.5);
        test = pick(rows, {perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test)});
        train = pick(rows, {perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end()});
    }

    dataset out;
    out.labels = label_set(options.format);

    std::map<std::string, std::size_t> taken;
    std::vector<std::size_t> keep;
    for (auto i : permutation(train.size(), splitmix64(options.seed ^ 0x706f6f6cull))) {
        if (taken[train[i].label] < options.pool_cap_per_class) {
            ++taken[train[i].label];
            keep.push_back(i);
        }
    }
    out.pool = reindexed(pick(train, keep));

    auto test_perm = permutation(test.size(), splitmix64(options.seed ^ 0x74657374ull));
    if (test_perm.size() > options.test_cap) test_perm.resize(options.test_cap);
    out.test = reindexed(pick(test, test_perm));
    if (out.pool.empty()) throw error(errc::empty_input, "selection pool is empty");
    return out;
}

}  // namespace aitlm::fewshot
