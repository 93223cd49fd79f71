#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include "aitlm/byte_io.hpp"
#include "aitlm/cli.hpp"
#include "aitlm/codec.hpp"
#include "aitlm/convergence.hpp"
#include "aitlm/fewshot.hpp"
#include "aitlm/hash.hpp"
#include "aitlm/ngram.hpp"
#include "aitlm/solomonoff.hpp"
#include "config.hpp"

namespace aitlm::cli {

namespace {

// Symbol names for reports: bytes outside printable ASCII become \xNN.
std::vector<std::string> printable_symbols(const alphabet& sigma) {
    std::vector<std::string> out;
    for (const auto& sym : sigma.symbols()) {
        std::string shown;
        for (unsigned char c : sym) {
            if (c >= 0x20 && c < 0x7f && c != '\\') {
                shown += static_cast<char>(c);
            } else {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\x%02x", c);
                shown += buf;
            }
        }
        out.push_back(std::move(shown));
    }
    return out;
}

// Raw command-line values; unset options stay empty so the config file and
// defaults can fill them.
struct flags {
    std::optional<std::string> config;
    std::optional<std::string> model, input, text, out, report, alphabet, source, predictor, t_grid, csv;
    std::optional<std::string> dataset, test_dataset, format, tmpl, mode, endpoint, selection;
    std::vector<std::string> inputs;
    std::optional<unsigned> order;
    std::optional<double> alpha, test_fraction;
    std::optional<std::uint64_t> seed, trials, k_total, samples, length, pool_cap, test_cap, max_in_flight, retries, repeats;
    bool timing = false;
};

struct outcome {
    json result;
    std::string model_hash;
    int status = exit_ok;
};

using command_fn = std::function<outcome(settings&, const flags&)>;

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json as_json(const log_prior& p) {
    return {{"value", p.value},
            {"seed_sum_log", p.seed_sum_log},
            {"iteration_len", p.iteration_len},
            {"payload_len", p.payload_len},
            {"analytic_len", p.analytic_len}};
}

// ------------------------------------------------------------------ codec

outcome cmd_train(settings& s, const flags& f) {
    auto inputs = f.inputs;
    if (inputs.empty()) inputs = s.resolve<std::vector<std::string>>("input", std::nullopt, {});
    else s.resolve<std::vector<std::string>>("input", inputs, {});
    if (inputs.empty()) throw error(errc::config, "train needs at least one --input");
    const auto sigma = parse_alphabet(s.resolve<std::string>("alphabet", f.alphabet, "bytes"));
    const auto order = s.resolve<unsigned>("order", f.order, 3);
    const auto alpha = s.resolve<double>("alpha", f.alpha, ngram_model::default_alpha);
    const auto out = s.resolve_optional<std::string>("out", f.out);
    if (!out) throw error(errc::config, "train needs --out");

    std::vector<token_sequence> corpus;
    std::size_t tokens = 0;
    for (const auto& path : inputs) {
        std::string content;
        try {
            content = read_text_file(path);
        } catch (const error& e) {
            throw error(errc::config, e.what());
        }
        corpus.push_back(token_sequence::from_text(sigma, content));
        tokens += corpus.back().size();
    }
    auto model = train_ngram(corpus, order, alpha);
    save_model(*out, model);

    double loss = 0;
    for (const auto& x : corpus) loss += sequence_log_loss(model, x);
    return {{{"order", order},
             {"alpha", alpha},
             {"alphabet_size", sigma->size()},
             {"contexts", model.counts().size()},
             {"training_tokens", tokens},
             {"training_log_loss_bits", loss},
             {"model_file", *out}},
            hex64(model.content_hash())};
}

outcome cmd_compress(settings& s, const flags& f) {
    const auto model = make_model(s.resolve<std::string>("model", f.model, "uniform:bytes"));
    const auto input = s.resolve_optional<std::string>("input", f.input);
    const auto text = s.resolve_optional<std::string>("text", f.text);
    const auto out = s.resolve_optional<std::string>("out", f.out);
    const auto seed = s.resolve<std::uint64_t>("seed", f.seed, 1);
    if (!out) throw error(errc::config, "compress needs --out");

    const auto x = read_sequence(*model, input, text);
    coding_stats stats;
    const auto payload = compress(*model, x, &stats);
    const auto bytes = write_payload_bytes(payload, seed);
    write_file_bytes(*out, bytes);

    const double analytic = analytic_code_length(*model, x);
    const auto measured = payload.bits.size();
    return {{{"tokens", x.size()},
             {"measured_bits", measured},
             {"analytic_bits", analytic},
             {"log_loss_bits", analytic - 2.0 * static_cast<double>(x.size())},
             {"quantized_log_loss_bits", stats.quantized_log_loss},
             {"coder_overhead_bits", static_cast<double>(measured) - std::ceil(stats.quantized_log_loss)},
             {"program_bits", to_program(payload, seed).total_length()},
             {"file_bytes", bytes.size()},
             {"output", *out}},
            hex64(model->content_hash())};
}

outcome cmd_decompress(settings& s, const flags& f) {
    const auto model = make_model(s.resolve<std::string>("model", f.model, "uniform:bytes"));
    const auto input = s.resolve_optional<std::string>("input", f.input);
    const auto out = s.resolve_optional<std::string>("out", f.out);
    if (!input || !out) throw error(errc::config, "decompress needs --input and --out");

    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(*input);
    } catch (const error& e) {
        throw error(errc::config, e.what());
    }
    const auto payload = read_payload_bytes(bytes);
    const auto x = decompress(*model, payload);
    const auto text = x.to_text();
    write_text(*out, text);
    return {{{"tokens", x.size()}, {"measured_bits", payload.bits.size()}, {"output_bytes", text.size()}, {"output", *out}},
            hex64(model->content_hash())};
}

// -------------------------------------------------------------- solomonoff

outcome cmd_prior(settings& s, const flags& f) {
    const auto model = make_model(s.resolve<std::string>("model", f.model, "uniform:binary"));
    const auto input = s.resolve_optional<std::string>("input", f.input);
    const auto text = s.resolve_optional<std::string>("text", f.text);
    const auto x = read_sequence(*model, input, text);
    if (x.empty()) throw error(errc::empty_input, "the prior needs a non-empty sequence");

    json modes = json::object();
    for (auto mode : {prior_mode::exact, prior_mode::paper_approx})
        modes[std::string(to_string(mode))] = as_json(compute_log_prior(x, *model, mode));
    return {{{"t", x.size()}, {"program_bits_seed1", program_length(x, 1, *model)}, {"log2_prior", modes}},
            hex64(model->content_hash())};
}

outcome cmd_predict(settings& s, const flags& f) {
    const auto model = make_model(s.resolve<std::string>("model", f.model, "uniform:binary"));
    const auto input = s.resolve_optional<std::string>("input", f.input);
    const auto text = s.resolve_optional<std::string>("text", f.text);
    const auto x = read_sequence(*model, input, text);
    if (x.empty()) throw error(errc::empty_input, "prediction needs a non-empty context");

    json modes = json::object();
    std::vector<conditional_prediction> preds;
    for (auto mode : {prior_mode::exact, prior_mode::paper_approx}) {
        auto p = conditional_prior(x, *model, mode);
        std::vector<double> deviation;
        for (double r : p.ratio_check) deviation.push_back(theorem2_deviation(r, x.size()));
        modes[std::string(to_string(mode))] = {{"raw", p.raw},
                                               {"normalized", p.normalized},
                                               {"model_probability", p.model_probability},
                                               {"ratio_check", p.ratio_check},
                                               {"theorem2_deviation", deviation}};
        preds.push_back(std::move(p));
    }
    double gap = 0;
    for (std::size_t a = 0; a < preds[0].normalized.size(); ++a)
        gap = std::max(gap, std::abs(preds[0].normalized[a] - preds[1].normalized[a]));
    return {{{"t", x.size()},
             {"symbols", printable_symbols(*model->symbols())},
             {"theorem2_tolerance", theorem2_tolerance(x.size())},
             {"normalized_mode_gap", gap},
             {"modes", modes}},
            hex64(model->content_hash())};
}

outcome cmd_verify(settings& s, const flags& f) {
    const auto model = make_model(s.resolve<std::string>("model", f.model, "uniform:binary"));
    const auto grid = parse_grid(s.resolve<std::string>("t-grid", f.t_grid, "10,100,1000"));
    const auto n_samples = s.resolve<std::uint64_t>("samples", f.samples, 8);
    const auto seed = s.resolve<std::uint64_t>("seed", f.seed, 1);
    std::size_t feasible = 0;
    for (std::uint64_t n = 1; feasible < 8 && n * model->symbols()->size() <= max_enumeration; n *= model->symbols()->size())
        ++feasible;
    const auto length = s.resolve<std::uint64_t>("length", f.length, feasible);
    if (n_samples == 0) throw error(errc::config, "--samples must be >= 1");

    const token_sequence empty(model->symbols());
    std::vector<token_sequence> samples;
    for (std::uint64_t i = 0; i < n_samples; ++i)
        samples.push_back(generate(*model, empty, splitmix64(seed ^ splitmix64(i)) | 1, grid.back()));
    const auto t2 = verify_theorem2(*model, samples, grid);
    const auto mass = semimeasure_mass(length, *model);

    json rows = json::array();
    for (const auto& r : t2.rows)
        rows.push_back({{"t", r.t},
                        {"max_deviation", r.max_deviation},
                        {"mean_deviation", r.mean_deviation},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass}});
    const bool pass = t2.pass && mass.pass;
    return {{{"theorem2", {{"rows", rows}, {"monotone", t2.monotone}, {"pass", t2.pass}}},
             {"semimeasure", {{"length", mass.length}, {"strings", mass.strings}, {"mass", mass.mass}, {"pass", mass.pass}}},
             {"pass", pass}},
            hex64(model->content_hash()),
            pass ? exit_ok : exit_check_failed};
}

// ------------------------------------------------------------- convergence

outcome cmd_converge(settings& s, const flags& f) {
    const auto source = computable_source::parse(s.resolve<std::string>("source", f.source, "bernoulli:0.7"));
    const auto predictor = predictor_spec::parse(s.resolve<std::string>("predictor", f.predictor, "kt"));
    std::string default_grid;
    for (auto t : default_t_grid()) default_grid += (default_grid.empty() ? "" : ",") + std::to_string(t);
    const auto grid = parse_grid(s.resolve<std::string>("t-grid", f.t_grid, default_grid));
    const auto trials = s.resolve<std::uint64_t>("trials", f.trials, 200);
    const auto seed = s.resolve<std::uint64_t>("seed", f.seed, 1);
    const auto csv = s.resolve_optional<std::string>("csv", f.csv);

    const auto series = cumulative_error(source, predictor, grid, trials, seed);
    if (csv) write_text(*csv, to_csv(series));

    std::vector<double> growth;
    for (std::size_t i = 1; i < series.cumulative_mean.size(); ++i)
        growth.push_back(series.cumulative_mean[i - 1] > 0 ? series.cumulative_mean[i] / series.cumulative_mean[i - 1] : 0.0);
    return {{{"source", source.describe()},
             {"predictor", predictor.describe()},
             {"regime", series.regime},
             {"trials", series.trials},
             {"t_grid", series.t_grid},
             {"cumulative_mean", series.cumulative_mean},
             {"cumulative_stderr", series.cumulative_stderr},
             {"last_step_error", series.last_step_error},
             {"growth_ratio", growth}},
            hex64(fnv1a().update(source.describe()).update(predictor.describe()).digest())};
}

// ----------------------------------------------------------------- fewshot

struct fewshot_setup {
    std::unique_ptr<label_scorer> scorer;
    fewshot::prompt_template tmpl;
    fewshot::dataset data;
    fewshot::selection_options selection;
    unsigned retries = 2;
};

fewshot_setup load_fewshot(settings& s, const flags& f, std::uint64_t seed_override = 0) {
    fewshot_setup out;
    const auto model = s.resolve<std::string>("model", f.model, "toy:1");
    const auto endpoint = s.resolve_optional<std::string>("endpoint", f.endpoint);
    const auto in_flight = s.resolve<std::uint64_t>("max-in-flight", f.max_in_flight, 4);
    out.retries = static_cast<unsigned>(s.resolve<std::uint64_t>("retries", f.retries, 2));
    if (in_flight == 0) throw error(errc::config, "--max-in-flight must be >= 1");

    fewshot::dataset_options d;
    const auto dataset = s.resolve_optional<std::string>("dataset", f.dataset);
    if (!dataset) throw error(errc::config, "missing --dataset");
    d.path = *dataset;
    d.format = fewshot::parse_format(s.resolve<std::string>("format", f.format, "sms-tsv"));
    if (auto t = s.resolve_optional<std::string>("test-dataset", f.test_dataset)) d.test_path = *t;
    d.seed = seed_override ? seed_override : s.resolve<std::uint64_t>("seed", f.seed, 1);
    d.test_fraction = s.resolve<double>("test-fraction", f.test_fraction, 0.2);
    d.pool_cap_per_class = s.resolve<std::uint64_t>("pool-cap", f.pool_cap, 500);
    d.test_cap = s.resolve<std::uint64_t>("test-cap", f.test_cap, 2000);

    out.tmpl = resolve_template(s.resolve<std::string>("template", f.tmpl, default_template(d.format)));
    out.selection.mode = fewshot::parse_mode(s.resolve<std::string>("mode", f.mode, "low"));
    out.selection.k_total = s.resolve<std::uint64_t>("k-total", f.k_total, 10);
    out.selection.step_retries = out.retries;
    std::vector<std::string> surfaces;
    for (const auto& [label, surface] : out.tmpl.verbalizer) surfaces.push_back(surface);
    out.scorer = make_scorer(model, endpoint, in_flight, out.retries, surfaces);

    try {
        out.data = fewshot::load_dataset(d);
    } catch (const error& e) {
        if (e.code() == errc::io) throw error(errc::config, e.what());
        throw;
    }
    for (const auto& label : out.data.labels) out.tmpl.verbalize(label);
    return out;
}

json report_json(const fewshot::selection_report& r, std::size_t pool_size) {
    json steps = json::array();
    for (const auto& st : r.steps)
        steps.push_back({{"step", st.step},
                         {"label", st.label},
                         {"source_index", st.source_index},
                         {"confidence", st.confidence},
                         {"candidates_scanned", st.candidates_scanned},
                         {"text", st.text}});
    return {{"mode", fewshot::to_string(r.mode)},
            {"k_total", r.k_total},
            {"labels", r.labels},
            {"quotas", r.quotas},
            {"quota_rule", "largest remainder over labels in fixed order; equal remainders go to earlier labels"},
            {"pool_size", pool_size},
            {"selected", steps},
            {"per_class_counts", r.per_class_counts},
            {"final_prompt", r.final_prompt},
            {"complete", r.complete},
            {"failure", r.failure.empty() ? json(nullptr) : json(r.failure)}};
}

json evaluation_json(const fewshot::evaluation_result& e) {
    return {{"total", e.total}, {"scored", e.scored}, {"correct", e.correct}, {"skipped", e.skipped}, {"accuracy", e.accuracy}};
}

outcome cmd_select(settings& s, const flags& f) {
    auto setup = load_fewshot(s, f);
    fewshot::validate_verbalizers(*setup.scorer, setup.tmpl);
    const auto report = fewshot::select_examples(setup.data.pool, setup.data.labels, *setup.scorer, setup.tmpl, setup.selection);
    return {report_json(report, setup.data.pool.size()), hex64(setup.scorer->content_hash()),
            report.complete ? exit_ok : exit_remote};
}

std::vector<fewshot::labeled_example> read_selection(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
        const auto& result = doc.contains("result") ? doc.at("result") : doc;
        std::vector<fewshot::labeled_example> out;
        for (const auto& st : result.at("selected"))
            out.push_back({st.at("text").get<std::string>(), st.at("label").get<std::string>(), st.at("source_index").get<std::size_t>()});
        return out;
    } catch (const json::exception& e) {
        throw error(errc::bad_format, "selection " + path + ": " + e.what());
    } catch (const error& e) {
        if (e.code() == errc::io) throw error(errc::config, e.what());
        throw;
    }
}

outcome cmd_evaluate(settings& s, const flags& f) {
    const auto selection = s.resolve_optional<std::string>("selection", f.selection);
    const auto repeats = s.resolve<std::uint64_t>("repeats", f.repeats, 1);
    if (repeats == 0) throw error(errc::config, "--repeats must be >= 1");
    if (selection && repeats > 1) throw error(errc::config, "--repeats re-runs selection and cannot be combined with --selection");
    const auto base_seed = s.resolve<std::uint64_t>("seed", f.seed, 1);

    json runs = json::array();
    std::string hash;
    double sum = 0;
    int status = exit_ok;
    for (std::uint64_t r = 0; r < repeats; ++r) {
        // Repeat r re-samples the pool and test split with seed + r.
        auto setup = load_fewshot(s, f, base_seed + r);
        hash = hex64(setup.scorer->content_hash());
        fewshot::validate_verbalizers(*setup.scorer, setup.tmpl);
        json run = {{"seed", base_seed + r}};
        std::vector<fewshot::labeled_example> examples;
        if (selection) {
            examples = read_selection(*selection);
            run["selection"] = *selection;
        } else {
            auto report = fewshot::select_examples(setup.data.pool, setup.data.labels, *setup.scorer, setup.tmpl, setup.selection);
            run["selection"] = report_json(report, setup.data.pool.size());
            if (!report.complete) {
                runs.push_back(run);
                status = exit_remote;
                break;
            }
            examples = report.selected();
        }
        auto e = fewshot::evaluate(*setup.scorer, setup.tmpl, examples, setup.data.test, setup.data.labels, setup.retries);
        run["evaluation"] = evaluation_json(e);
        sum += e.accuracy;
        std::cerr << "aitlm: evaluate seed " << base_seed + r << ": accuracy " << e.accuracy << " (" << e.correct << "/" << e.scored
                  << ", skipped " << e.skipped << ")\n";
        runs.push_back(run);
    }
    json result = {{"runs", runs}};
    if (status == exit_ok) result["mean_accuracy"] = sum / static_cast<double>(repeats);
    return {result, hash, status};
}

// -------------------------------------------------------------------- main

struct command {
    const char* name;
    const char* help;
    bool writes_artifact;  // --out is the artifact, --report the report
    std::vector<std::string> options;
    command_fn fn;
};

void add_options(CLI::App* sub, const command& c, flags& f) {
    auto has = [&](const char* name) { return std::find(c.options.begin(), c.options.end(), name) != c.options.end(); };
    sub->add_option("--config", f.config, "JSON file of option values (flag > config > default)");
    if (has("model")) sub->add_option("--model", f.model, "model spec");
    if (has("input") && std::string(c.name) == "train") sub->add_option("--input", f.inputs, "training text file (repeatable)");
    else if (has("input")) sub->add_option("--input", f.input, "input file");
    if (has("text")) sub->add_option("--text", f.text, "inline input sequence");
    if (c.writes_artifact) {
        sub->add_option("--out", f.out, "output file");
        sub->add_option("--report", f.report, "write the JSON report here instead of stdout");
    } else {
        sub->add_option("--out", f.out, "write the JSON report here instead of stdout");
    }
    if (has("alphabet")) sub->add_option("--alphabet", f.alphabet, "binary|bytes|chars:<characters>");
    if (has("order")) sub->add_option("--order", f.order, "n-gram context length");
    if (has("alpha")) sub->add_option("--alpha", f.alpha, "additive smoothing constant");
    if (has("seed")) sub->add_option("--seed", f.seed, "seed");
    if (has("t-grid")) sub->add_option("--t-grid", f.t_grid, "comma-separated lengths");
    if (has("samples")) sub->add_option("--samples", f.samples, "sample sequences per grid point");
    if (has("length")) sub->add_option("--length", f.length, "string length for the semimeasure sum");
    if (has("source")) sub->add_option("--source", f.source, "bernoulli:<p> or markov:<rows>|<initial>");
    if (has("predictor")) sub->add_option("--predictor", f.predictor, "kt, ngram:<order>:<alpha> or oracle");
    if (has("trials")) sub->add_option("--trials", f.trials, "Monte Carlo trials");
    if (has("csv")) sub->add_option("--csv", f.csv, "CSV output path");
    if (has("dataset")) sub->add_option("--dataset", f.dataset, "dataset file");
    if (has("test-dataset")) sub->add_option("--test-dataset", f.test_dataset, "predefined test split");
    if (has("format")) sub->add_option("--format", f.format, "sms-tsv|emotion-rows|agnews-rows");
    if (has("template")) sub->add_option("--template", f.tmpl, "template name or descriptor path");
    if (has("mode")) sub->add_option("--mode", f.mode, "low|high");
    if (has("k-total")) sub->add_option("--k-total", f.k_total, "number of examples");
    if (has("endpoint")) sub->add_option("--endpoint", f.endpoint, "remote scoring URL");
    if (has("test-fraction")) sub->add_option("--test-fraction", f.test_fraction, "held-out share when no test split is given");
    if (has("pool-cap")) sub->add_option("--pool-cap", f.pool_cap, "pool size cap per class");
    if (has("test-cap")) sub->add_option("--test-cap", f.test_cap, "test set cap");
    if (has("max-in-flight")) sub->add_option("--max-in-flight", f.max_in_flight, "concurrent remote requests");
    if (has("retries")) sub->add_option("--retries", f.retries, "retries per failed remote step");
    if (has("selection")) sub->add_option("--selection", f.selection, "evaluate the examples of this selection report");
    if (has("repeats")) sub->add_option("--repeats", f.repeats, "independent pool samplings");
    sub->add_flag("--timing", f.timing, "embed the wall-clock duration in the report");
}

std::set<std::string> allowed_keys(CLI::App* sub) {
    std::set<std::string> keys;
    for (const auto* opt : sub->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const auto& name = opt->get_lnames().front();
        if (name != "help" && name != "config") keys.insert(name);
    }
    return keys;
}

}  // namespace

int run(int argc, const char* const* argv) {
    const std::vector<std::string> fewshot_opts = {"model",     "endpoint", "dataset",       "test-dataset", "format",
                                                   "template",  "mode",     "k-total",       "seed",         "test-fraction",
                                                   "pool-cap",  "test-cap", "max-in-flight", "retries"};
    auto with = [](std::vector<std::string> base, std::initializer_list<std::string> extra) {
        base.insert(base.end(), extra);
        return base;
    };
    const std::vector<command> commands = {
        {"train", "fit an n-gram model to text files", true, {"input", "alphabet", "order", "alpha"}, cmd_train},
        {"compress", "encode a sequence into an .aitc file", true, {"model", "input", "text", "seed"}, cmd_compress},
        {"decompress", "decode an .aitc file", true, {"model", "input"}, cmd_decompress},
        {"prior", "log2 of the approximate prior in both modes", false, {"model", "input", "text"}, cmd_prior},
        {"predict", "conditional prior prediction in both modes", false, {"model", "input", "text"}, cmd_predict},
        {"verify", "check the conditional ratio bound and the semimeasure bound", false, {"model", "t-grid", "samples", "seed", "length"},
         cmd_verify},
        {"converge", "cumulative prediction error against a computable source", false,
         {"source", "predictor", "t-grid", "trials", "seed", "csv"}, cmd_converge},
        {"select", "confidence-based few-shot example selection", false, fewshot_opts, cmd_select},
        {"evaluate", "few-shot accuracy on the test split", false, with(fewshot_opts, {"selection", "repeats"}), cmd_evaluate},
    };

    CLI::App app("Language models as computable approximations of algorithmic probability", "aitlm");
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    flags f;
    std::vector<std::pair<CLI::App*, const command*>> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_options(sub, c, f);
        subs.emplace_back(sub, &c);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    for (auto [sub, c] : subs) {
        if (!sub->parsed()) continue;
        const auto started = std::chrono::steady_clock::now();
        try {
            settings s(f.config, allowed_keys(sub));
            const bool timing = s.resolve<bool>("timing", f.timing ? std::optional<bool>(true) : std::nullopt, false);
            const auto dest = c->writes_artifact ? s.resolve_optional<std::string>("report", f.report) : f.out;
            auto result = c->fn(s, f);
            json report = {{"command", c->name},
                           {"version", version},
                           {"config", s.resolved()},
                           {"model_hash", result.model_hash},
                           {"result", result.result}};
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            if (timing) report["duration_ms"] = ms;
            std::cerr << "aitlm: " << c->name << " finished in " << ms << " ms\n";

            const std::string text = report.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
            if (dest) write_text(*dest, text);
            else std::cout << text;
            if (result.status != exit_ok)
                std::cerr << "error[" << (result.status == exit_check_failed ? "check_failed" : "incomplete")
                          << "]: " << c->name << " post-conditions did not hold\n";
            return result.status;
        } catch (const error& e) {
            std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
            return exit_code(e.code());
        } catch (const std::exception& e) {
            std::cerr << "error[internal]: " << e.what() << "\n";
            return exit_internal;
        }
    }
    return exit_config;
}

}  // namespace aitlm::cli
