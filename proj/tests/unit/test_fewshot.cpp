#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <tuple>

#include "aitlm/byte_io.hpp"
#include "aitlm/fewshot.hpp"
#include "aitlm/hash.hpp"
#include "support.hpp"

using namespace aitlm;
using namespace aitlm::fewshot;

namespace {

const std::filesystem::path data_dir = AITLM_TEST_DATA;
const std::filesystem::path template_dir = AITLM_TEMPLATES;

// Confidence from an arbitrary function of (prompt, label); one token each.
class function_scorer final : public label_scorer {
public:
    using fn = std::function<double(const std::string&, const std::string&)>;
    explicit function_scorer(fn f, std::size_t tokens = 1) : f_(std::move(f)), tokens_(tokens) {}

    std::vector<label_score> score(const std::string& prompt, std::span<const std::string> candidates) override {
        ++calls;
        std::vector<label_score> out;
        for (const auto& c : candidates) out.push_back({f_(prompt, c), tokens_});
        return out;
    }
    std::string describe() const override { return "function"; }
    std::uint64_t content_hash() const override { return 0; }

    std::size_t calls = 0;

private:
    fn f_;
    std::size_t tokens_;
};

prompt_template tiny_template() {
    prompt_template t;
    t.name = "tiny";
    t.system_text = "Pick a or b.\n{examples}\n";
    t.example_pattern = "Q: {text}\nA:{label}";
    t.query_pattern = "Q: {text}\nA:";
    t.verbalizer = {{"a", " a"}, {"b", " b"}, {"c", " c"}};
    return t;
}

// Exhaustive per-step extremum search, written against the definition:
// classes take turns in label order while they have quota left, and each
// step takes the (confidence, source_index) extremum of the class's
// remaining candidates scored on prompt(selected) + candidate text.
std::vector<std::size_t> oracle_selection(const std::vector<labeled_example>& pool, const std::vector<std::string>& labels,
                                          std::size_t k_total, bool low, label_scorer& scorer, const prompt_template& t) {
    auto quotas = class_quotas(k_total, labels.size());
    std::vector<labeled_example> chosen;
    std::vector<std::size_t> picked;
    std::vector<bool> used(pool.size(), false);
    std::vector<std::size_t> order;
    for (std::size_t round = 0; order.size() < k_total; ++round)
        for (std::size_t c = 0; c < labels.size(); ++c)
            if (round < quotas[c]) order.push_back(c);
    for (auto c : order) {
        std::vector<std::tuple<double, std::size_t, std::size_t>> options;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i] || pool[i].label != labels[c]) continue;
            const double conf = remote_label_confidence(scorer, render_prompt(t, chosen, pool[i].text), t.verbalize(labels[c]));
            options.emplace_back(low ? conf : -conf, pool[i].source_index, i);
        }
        auto best = *std::min_element(options.begin(), options.end());
        used[std::get<2>(best)] = true;
        picked.push_back(std::get<1>(best));
        chosen.push_back(pool[std::get<2>(best)]);
    }
    return picked;
}

std::vector<std::size_t> indices(const selection_report& r) {
    std::vector<std::size_t> out;
    for (const auto& s : r.steps) out.push_back(s.source_index);
    return out;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path, std::ios::binary) << content;
    return path;
}

}  // namespace

TEST_CASE("dataset rows") {
    auto sms = parse_rows("ham\tOk lar...\nspam\tWIN now\n", dataset_format::sms_tsv);
    REQUIRE(sms.size() == 2);
    CHECK(sms[0].label == "ham");
    CHECK(sms[0].text == "Ok lar...");
    CHECK(sms[1].source_index == 1);

    auto ag = parse_rows("\"3\",\"Stocks rally\",\"Markets rose, again.\"\n", dataset_format::agnews_rows);
    REQUIRE(ag.size() == 1);
    CHECK(ag[0].label == "Business");
    CHECK(ag[0].text == "Stocks rally Markets rose, again.");
    CHECK(parse_rows("4,t,d", dataset_format::agnews_rows)[0].label == "Sci/Tech");

    auto emo = parse_rows("i feel great; really;1\r\ni am scared;fear\n", dataset_format::emotion_rows);
    REQUIRE(emo.size() == 2);
    CHECK(emo[0].label == "joy");
    CHECK(emo[0].text == "i feel great; really");
    CHECK(emo[1].label == "fear");

    CHECK(parse_rows("", dataset_format::sms_tsv).empty());
    CHECK(code_of([] { parse_rows("ham\tok\nspam no tab\n", dataset_format::sms_tsv); }) == errc::bad_format);
    try {
        parse_rows("ham\tok\n\nmaybe\ttext\n", dataset_format::sms_tsv);
        FAIL("expected a parse error");
    } catch (const error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(code_of([] { parse_rows("0,t,d", dataset_format::agnews_rows); }) == errc::bad_format);
    CHECK(code_of([] { parse_rows("1,\"t,d", dataset_format::agnews_rows); }) == errc::bad_format);
    CHECK(code_of([] { parse_rows("text;9", dataset_format::emotion_rows); }) == errc::bad_format);
}

TEST_CASE("dataset loading") {
    auto empty = temp_file("aitlm_empty.tsv", "");
    dataset_options opts{.path = empty};
    CHECK(code_of([&] { load_dataset(opts); }) == errc::empty_input);
    std::filesystem::remove(empty);

    dataset_options sms{.path = data_dir / "sms.tsv", .format = dataset_format::sms_tsv, .seed = 3};
    auto d = load_dataset(sms);
    CHECK(d.labels == std::vector<std::string>{"spam", "ham"});
    CHECK(d.pool.size() + d.test.size() == 60);
    CHECK(d.test.size() == 12);
    for (std::size_t i = 0; i < d.pool.size(); ++i) CHECK(d.pool[i].source_index == i);
    auto again = load_dataset(sms);
    CHECK(again.pool.size() == d.pool.size());
    for (std::size_t i = 0; i < d.pool.size(); ++i) CHECK(again.pool[i].text == d.pool[i].text);

    sms.pool_cap_per_class = 4;
    sms.test_cap = 5;
    auto capped = load_dataset(sms);
    CHECK(capped.pool.size() == 8);
    CHECK(capped.test.size() == 5);

    dataset_options split{.path = data_dir / "emotion.txt", .format = dataset_format::emotion_rows,
                          .test_path = data_dir / "emotion.txt"};
    auto predefined = load_dataset(split);
    CHECK(predefined.pool.size() == 48);
    CHECK(predefined.test.size() == 48);
}

TEST_CASE("shipped templates") {
    for (const char* name : {"sms", "emotion", "agnews"}) {
        auto t = load_template(template_dir / (std::string(name) + ".json"));
        CHECK(t.name == name);
        t.validate();
        CHECK(t.system_text.find("Respond with only one word") != std::string::npos);
    }
    auto ag = load_template(template_dir / "agnews.json");
    CHECK(ag.verbalize("Sci/Tech") == " Sci");
    CHECK(ag.verbalize("Business") == " Business");
    CHECK(code_of([&] { ag.verbalize("Weather"); }) == errc::bad_format);

    auto bad = temp_file("aitlm_bad_template.json", R"({"name":"x","system_text":"{examples}","example":"{text}{label}","query":"{text}","verbalizer":{"a":" a"},"extra":1})");
    CHECK(code_of([&] { load_template(bad); }) == errc::bad_format);
    std::filesystem::remove(bad);
    CHECK(code_of([&] { load_template(template_dir / "missing.json"); }) == errc::io);
}

TEST_CASE("template validation") {
    auto t = tiny_template();
    t.validate();
    auto no_slot = t;
    no_slot.system_text = "no placeholder";
    CHECK(code_of([&] { no_slot.validate(); }) == errc::bad_format);
    CHECK(code_of([&] { render_prompt(no_slot, {}); }) == errc::bad_format);
    auto no_label = t;
    no_label.example_pattern = "Q: {text}";
    CHECK(code_of([&] { no_label.validate(); }) == errc::bad_format);
    auto dup = t;
    dup.verbalizer["c"] = " a";
    CHECK(code_of([&] { dup.validate(); }) == errc::bad_format);
}

TEST_CASE("prompt rendering") {
    auto t = load_template(template_dir / "sms.json");
    std::vector<labeled_example> two = {{"Free entry now", "spam", 0}, {"Ok lar...", "ham", 1}};
    auto rendered = render_prompt(t, two, std::string("See you at 5"));
    CHECK(rendered == read_text_file(data_dir / "sms_two_examples.golden"));
    CHECK(render_prompt(t, two, std::string("See you at 5")) == rendered);

    auto zero = render_prompt(t, {});
    CHECK(zero == t.system_text.substr(0, t.system_text.find("{examples}")) + t.system_text.substr(t.system_text.find("{examples}") + 10));
    // Placeholder-like text inside an example is not substituted again.
    std::vector<labeled_example> tricky = {{"say {label} and {text}", "ham", 0}};
    CHECK(render_prompt(t, tricky).find("Message: say {label} and {text}\nAnswer: ham") != std::string::npos);
}

TEST_CASE("quotas") {
    CHECK(class_quotas(10, 2) == std::vector<std::size_t>{5, 5});
    CHECK(class_quotas(10, 4) == std::vector<std::size_t>{3, 3, 2, 2});
    CHECK(class_quotas(10, 6) == std::vector<std::size_t>{2, 2, 2, 2, 1, 1});
    CHECK(class_quotas(2, 3) == std::vector<std::size_t>{1, 1, 0});
}

TEST_CASE("selection matches the exhaustive oracle") {
    std::mt19937_64 rng(77);
    const std::vector<std::string> labels = {"a", "b", "c"};
    auto t = tiny_template();
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t classes = 2 + rng() % 2, k_total = 1 + rng() % 3;
        std::vector<std::string> active(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(classes));
        const auto quotas = class_quotas(k_total, classes);
        std::vector<labeled_example> pool;
        // Every class gets its quota, then random extra candidates up to 8.
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t q = 0; q < quotas[c]; ++q) pool.push_back({"", active[c], 0});
        while (pool.size() < 8 && rng() % 4) pool.push_back({"", active[rng() % classes], 0});
        std::shuffle(pool.begin(), pool.end(), rng);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            pool[i].text = "item" + std::to_string(rng() % 5);  // repeated texts force ties
            pool[i].source_index = 10 * i + rng() % 10;
        }
        const std::uint64_t salt = rng();
        // Coarse confidences so that equal values occur.
        function_scorer scorer([salt](const std::string& p, const std::string& l) {
            return static_cast<double>(fnv1a().update_u64(salt).update(p).update(l).digest() % 4) / 4.0 + 0.1;
        });
        for (bool low : {true, false}) {
            selection_options opts{.k_total = k_total, .mode = low ? selection_mode::low : selection_mode::high};
            auto report = select_examples(pool, active, scorer, t, opts);
            REQUIRE(report.complete);
            REQUIRE(indices(report) == oracle_selection(pool, active, k_total, low, scorer, t));
        }
    }
}

TEST_CASE("high mode is low mode under flipped confidences") {
    auto t = load_template(template_dir / "sms.json");
    auto d = load_dataset({.path = data_dir / "sms.tsv"});
    hash_scorer base(5);
    function_scorer flipped([&](const std::string& p, const std::string& l) {
        std::string c[] = {l};
        return 1.0 - base.score(p, c)[0].probability;
    });
    auto high = select_examples(d.pool, d.labels, base, t, {.mode = selection_mode::high});
    auto low = select_examples(d.pool, d.labels, flipped, t, {.mode = selection_mode::low});
    CHECK(indices(high) == indices(low));
}

TEST_CASE("an almost-zero confidence is picked first in low mode") {
    auto t = tiny_template();
    std::vector<labeled_example> pool = {{"x0", "a", 0}, {"x1", "a", 1}, {"x2", "a", 2}, {"y0", "b", 3}};
    function_scorer scorer([](const std::string& p, const std::string&) { return p.ends_with("Q: x2\nA:") ? 1e-12 : 0.5; });
    const std::string labels[] = {"a", "b"};
    auto r = select_examples(pool, labels, scorer, t, {.k_total = 2});
    CHECK(r.steps[0].source_index == 2);
    CHECK(r.steps[0].confidence == 1e-12);
    CHECK(r.steps[0].candidates_scanned == 3);
    CHECK(r.steps[1].source_index == 3);
}

TEST_CASE("selection reports are balanced, auditable and deterministic") {
    struct task {
        const char* file;
        dataset_format format;
        const char* tmpl;
    };
    for (auto [file, format, tname] : {task{"sms.tsv", dataset_format::sms_tsv, "sms.json"},
                                       task{"emotion.txt", dataset_format::emotion_rows, "emotion.json"},
                                       task{"agnews.csv", dataset_format::agnews_rows, "agnews.json"}}) {
        auto t = load_template(template_dir / tname);
        auto d = load_dataset({.path = data_dir / file, .format = format});
        std::vector<std::string> surfaces;
        for (const auto& l : d.labels) surfaces.push_back(t.verbalize(l));
        in_context_scorer scorer(surfaces);
        for (auto mode : {selection_mode::low, selection_mode::high}) {
            auto r = select_examples(d.pool, d.labels, scorer, t, {.mode = mode});
            REQUIRE(r.complete);
            REQUIRE(r.steps.size() == 10);
            for (std::size_t c = 0; c < d.labels.size(); ++c) CHECK(r.per_class_counts[d.labels[c]] == r.quotas[c]);
            auto chosen = r.selected();
            for (std::size_t s = 0; s < r.steps.size(); ++s) {
                std::span<const labeled_example> prefix(chosen.data(), s);
                const double again = remote_label_confidence(scorer, render_prompt(t, prefix, r.steps[s].text), t.verbalize(r.steps[s].label));
                REQUIRE(again == r.steps[s].confidence);
            }
            CHECK(r.final_prompt == render_prompt(t, chosen));
            auto twice = select_examples(d.pool, d.labels, scorer, t, {.mode = mode});
            CHECK(indices(twice) == indices(r));
            CHECK(twice.final_prompt == r.final_prompt);
        }
    }
}

TEST_CASE("selection errors") {
    auto t = tiny_template();
    std::vector<labeled_example> pool = {{"x0", "a", 0}, {"y0", "b", 1}};
    const std::string labels[] = {"a", "b"};
    function_scorer scorer([](const std::string&, const std::string&) { return 0.5; });
    CHECK(code_of([&] { select_examples(pool, labels, scorer, t, {.k_total = 4}); }) == errc::class_exhausted);

    function_scorer wide([](const std::string&, const std::string&) { return 0.5; }, 2);
    CHECK(code_of([&] { select_examples(pool, labels, wide, t, {.k_total = 2}); }) == errc::multi_token_label);
    CHECK(code_of([&] { validate_verbalizers(wide, t); }) == errc::multi_token_label);
    validate_verbalizers(scorer, t);

    // Transport failures are retried, then the run stops with a partial report.
    int failures = 0;
    function_scorer flaky([&](const std::string& p, const std::string&) {
        if (p.find("Q: x0\nA: a") != std::string::npos) {
            ++failures;
            throw error(errc::transport, "connection reset");
        }
        return 0.5;
    });
    auto r = select_examples(pool, labels, flaky, t, {.k_total = 2, .step_retries = 2});
    CHECK_FALSE(r.complete);
    CHECK(r.steps.size() == 1);
    CHECK(r.failure.find("step 2") != std::string::npos);
    CHECK(failures == 3);
}

TEST_CASE("evaluation") {
    auto t = tiny_template();
    std::vector<labeled_example> test = {{"t0", "a", 0}, {"t1", "b", 1}, {"t2", "c", 2}, {"t3", "a", 3}};
    const std::vector<std::string> labels = {"a", "b", "c"};
    auto truth = [&](const std::string& prompt) {
        for (const auto& e : test)
            if (prompt.ends_with("Q: " + e.text + "\nA:")) return " " + e.label;
        return std::string();
    };
    function_scorer oracle([&](const std::string& p, const std::string& l) { return l == truth(p) ? 1.0 : 0.0; });
    auto perfect = evaluate(oracle, t, {}, test, labels);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.scored == 4);
    CHECK(perfect.predictions == std::vector<std::string>{"a", "b", "c", "a"});

    function_scorer adversary([&](const std::string& p, const std::string& l) { return l == truth(p) ? 0.0 : 0.5; });
    auto wrong = evaluate(adversary, t, {}, test, labels);
    CHECK(wrong.accuracy == 0.0);
    CHECK(wrong.predictions[0] == "b");  // ties go to the earlier label

    function_scorer broken([&](const std::string& p, const std::string& l) {
        if (p.ends_with("Q: t1\nA:")) throw error(errc::transport, "timeout");
        return l == truth(p) ? 1.0 : 0.0;
    });
    auto partial = evaluate(broken, t, {}, test, labels, 1);
    CHECK(partial.total == 4);
    CHECK(partial.skipped == 1);
    CHECK(partial.scored == 3);
    CHECK(partial.accuracy == 1.0);
    CHECK(partial.predictions[1].empty());

    CHECK(code_of([&] { evaluate(oracle, t, {}, {}, labels); }) == errc::empty_input);
}

TEST_CASE("local scorers") {
    hash_scorer h(3);
    const std::string cands[] = {" spam", " ham"};
    auto a = h.score("prompt", cands);
    CHECK(a[0].probability > 0);
    CHECK(a[0].probability <= 1);
    CHECK(a[0].token_count == 1);
    CHECK(h.score("prompt", cands)[1].probability == a[1].probability);
    CHECK(hash_scorer(4).score("prompt", cands)[0].probability != a[0].probability);
    CHECK(h.describe() == "toy:3");

    in_context_scorer ic({" spam", " ham"});
    const std::string prompt = "Message: win cash prize now\nAnswer: spam\nMessage: see you at lunch\nAnswer: ham\nMessage: win a cash prize\nAnswer:";
    auto s = ic.score(prompt, cands);
    CHECK(s[0].probability + s[1].probability == doctest::Approx(1.0));
    CHECK(s[0].probability > s[1].probability);
    auto flipped = ic.score("Message: win cash prize now\nAnswer: spam\nMessage: see you at lunch\nAnswer: ham\nMessage: see you soon\nAnswer:", cands);
    CHECK(flipped[1].probability > flipped[0].probability);
    // No examples: the prior is uniform.
    CHECK(ic.score("Message: hi\nAnswer:", cands)[0].probability == doctest::Approx(0.5));
    const std::string unknown[] = {" maybe"};
    CHECK(code_of([&] { ic.score(prompt, unknown); }) == errc::invalid_argument);
    CHECK(in_context_scorer({" spam", " ham"}, 2.0).content_hash() != ic.content_hash());
}
