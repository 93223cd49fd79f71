#include "aitlm/convergence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "aitlm/error.hpp"
#include "aitlm/hash.hpp"

namespace aitlm {

namespace {

double parse_double(std::string_view text) {
    std::string s(text);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw error(errc::invalid_argument, "expected a number, got '" + s + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::vector<double> parse_row(std::string_view text) {
    std::vector<double> row;
    for (auto part : split(text, ',')) row.push_back(parse_double(part));
    return row;
}

void check_probabilities(const std::vector<double>& row, const char* what) {
    double sum = 0;
    for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) throw error(errc::invalid_argument, std::string(what) + " entries must lie in [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw error(errc::invalid_argument, std::string(what) + " must sum to 1");
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

// ------------------------------------------------------------------- source

computable_source computable_source::bernoulli(double p) {
    if (!(p > 0.0 && p < 1.0)) throw error(errc::invalid_argument, "Bernoulli parameter must lie in (0,1)");
    computable_source s;
    s.p_ = p;
    s.initial_ = {p, 1.0 - p};
    s.alphabet_ = alphabet::binary();
    return s;
}

computable_source computable_source::markov(std::vector<std::vector<double>> transition, std::vector<double> initial) {
    const std::size_t n = initial.size();
    if (n < 2) throw error(errc::invalid_argument, "Markov source needs at least two states");
    if (transition.size() != n) throw error(errc::invalid_argument, "transition matrix must be square and match the initial distribution");
    check_probabilities(initial, "initial distribution");
    for (const auto& row : transition) {
        if (row.size() != n) throw error(errc::invalid_argument, "transition matrix must be square");
        check_probabilities(row, "transition row");
    }
    computable_source s;
    s.transition_ = std::move(transition);
    s.initial_ = std::move(initial);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
    s.alphabet_ = alphabet::make(std::move(names));
    return s;
}

computable_source computable_source::parse(std::string_view spec) {
    if (spec.starts_with("bernoulli:")) return bernoulli(parse_double(spec.substr(10)));
    if (spec.starts_with("markov:")) {
        auto body = spec.substr(7);
        auto bar = body.find('|');
        if (bar == std::string_view::npos) throw error(errc::invalid_argument, "markov spec needs '|' before the initial distribution");
        std::vector<std::vector<double>> rows;
        for (auto r : split(body.substr(0, bar), ';')) rows.push_back(parse_row(r));
        return markov(std::move(rows), parse_row(body.substr(bar + 1)));
    }
    throw error(errc::invalid_argument, "unknown source spec '" + std::string(spec) + "'");
}

std::string computable_source::describe() const {
    if (is_bernoulli()) return "bernoulli:" + format_number(p_);
    std::string out = "markov:";
    for (std::size_t i = 0; i < transition_.size(); ++i) {
        if (i) out += ';';
        for (std::size_t j = 0; j < transition_[i].size(); ++j) out += (j ? "," : "") + format_number(transition_[i][j]);
    }
    out += '|';
    for (std::size_t j = 0; j < initial_.size(); ++j) out += (j ? "," : "") + format_number(initial_[j]);
    return out;
}

const std::vector<double>& computable_source::next_probabilities(std::span<const symbol_id> context) const {
    if (is_bernoulli() || context.empty()) return initial_;
    if (context.back() >= transition_.size()) throw error(errc::alphabet_mismatch, "context symbol outside the source alphabet");
    return transition_[context.back()];
}

double computable_source::true_conditional(std::span<const symbol_id> context) const {
    return next_probabilities(context)[0];
}

double true_conditional(const computable_source& source, const token_sequence& context) {
    if (!(context.symbols() == *source.symbols())) throw error(errc::alphabet_mismatch, "context alphabet differs from source");
    return source.true_conditional(context.tokens());
}

token_sequence sample_sequence(const computable_source& source, std::size_t length, std::uint64_t seed) {
    if (length == 0) throw error(errc::invalid_argument, "sample length must be >= 1");
    if (seed == 0) throw error(errc::invalid_argument, "seed must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<symbol_id> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        const auto& p = source.next_probabilities(out);
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double acc = 0;
        symbol_id s = static_cast<symbol_id>(p.size() - 1);
        for (symbol_id j = 0; j + 1 < p.size(); ++j) {
            acc += p[j];
            if (u < acc) {
                s = j;
                break;
            }
        }
        out.push_back(s);
    }
    return token_sequence(source.symbols(), std::move(out));
}

// --------------------------------------------------------------- predictors

namespace {

class ngram_predictor final : public online_predictor {
public:
    ngram_predictor(alphabet_ptr sigma, unsigned order, double alpha)
        : sigma_(std::move(sigma)), order_(order), alpha_(alpha), model_(sigma_, order_, alpha_) {}

    void reset() override {
        model_ = ngram_model(sigma_, order_, alpha_);
        history_.clear();
    }
    void observe(symbol_id s) override {
        model_.observe(history_, s);
        history_.push_back(s);
    }
    double probability_of_zero() const override { return model_.predict(history_)[0]; }

private:
    alphabet_ptr sigma_;
    unsigned order_;
    double alpha_;
    ngram_model model_;
    std::vector<symbol_id> history_;
};

class oracle_predictor final : public online_predictor {
public:
    explicit oracle_predictor(const computable_source& source) : source_(&source) {}

    void reset() override { history_.clear(); }
    void observe(symbol_id s) override { history_.push_back(s); }
    double probability_of_zero() const override { return source_->true_conditional(history_); }

private:
    const computable_source* source_;
    std::vector<symbol_id> history_;
};

}  // namespace

predictor_spec predictor_spec::parse(std::string_view spec) {
    predictor_spec p;
    if (spec == "kt") return p;
    if (spec == "oracle") {
        p.type = kind::oracle;
        return p;
    }
    if (spec.starts_with("ngram:")) {
        auto parts = split(spec.substr(6), ':');
        if (parts.size() != 2) throw error(errc::invalid_argument, "ngram predictor spec is ngram:<order>:<alpha>");
        unsigned order = 0;
        auto [ptr, ec] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), order);
        if (ec != std::errc{} || ptr != parts[0].data() + parts[0].size())
            throw error(errc::invalid_argument, "bad n-gram order '" + std::string(parts[0]) + "'");
        p.order = order;
        p.alpha = parse_double(parts[1]);
        if (!(p.alpha > 0)) throw error(errc::invalid_argument, "smoothing constant must be > 0");
        return p;
    }
    throw error(errc::invalid_argument, "unknown predictor spec '" + std::string(spec) + "'");
}

std::string predictor_spec::describe() const {
    if (type == kind::oracle) return "oracle";
    return "ngram:" + std::to_string(order) + ":" + format_number(alpha);
}

std::string predictor_spec::regime() const {
    if (type == kind::oracle) return "zero (predictor equals the source)";
    return "logarithmic (computable estimator: cumulative error grows like log T, not the constant bound of the universal prior)";
}

std::unique_ptr<online_predictor> make_predictor(const predictor_spec& spec, const computable_source& source) {
    if (spec.type == predictor_spec::kind::oracle) return std::make_unique<oracle_predictor>(source);
    return std::make_unique<ngram_predictor>(source.symbols(), spec.order, spec.alpha);
}

// ---------------------------------------------------------- cumulative error

std::vector<std::size_t> default_t_grid() { return {1, 10, 100, 1000, 10000}; }

error_series cumulative_error(const computable_source& source, const predictor_spec& predictor,
                              std::span<const std::size_t> t_grid, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw error(errc::invalid_argument, "trials must be >= 1");
    if (t_grid.empty()) throw error(errc::invalid_argument, "T grid is empty");
    std::vector<std::size_t> grid(t_grid.begin(), t_grid.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() == 0) throw error(errc::invalid_argument, "T grid entries must be >= 1");
    const std::size_t horizon = grid.back();

    // cum[i][g], last[i][g] for trial i at grid point g
    std::vector<std::vector<double>> cum(trials, std::vector<double>(grid.size()));
    std::vector<std::vector<double>> last(trials, std::vector<double>(grid.size()));

    auto run = [&](std::size_t begin, std::size_t end) {
        auto model = make_predictor(predictor, source);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t trial_seed = splitmix64(seed ^ splitmix64(i)) | 1u;
            auto x = sample_sequence(source, horizon, trial_seed);
            auto tokens = x.tokens();
            model->reset();
            double total = 0;
            std::size_t g = 0;
            for (std::size_t t = 1; t <= horizon; ++t) {
                model->observe(tokens[t - 1]);
                const double diff = model->probability_of_zero() - source.true_conditional(tokens.first(t));
                const double err = diff * diff;
                total += err;
                if (t == grid[g]) {
                    cum[i][g] = total;
                    last[i][g] = err;
                    ++g;
                }
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    const std::size_t chunk = (trials + workers - 1) / workers;
    {
        std::vector<std::jthread> pool;
        for (std::size_t b = 0; b < trials; b += chunk) pool.emplace_back(run, b, std::min(trials, b + chunk));
    }

    error_series out;
    out.t_grid = grid;
    out.trials = trials;
    out.regime = predictor.regime();
    const double n = static_cast<double>(trials);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sum = 0, sum_last = 0;
        for (std::size_t i = 0; i < trials; ++i) {
            sum += cum[i][g];
            sum_last += last[i][g];
        }
        const double mean = sum / n;
        double var = 0;
        for (std::size_t i = 0; i < trials; ++i) var += (cum[i][g] - mean) * (cum[i][g] - mean);
        const double stderr_ = trials > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
        out.cumulative_mean.push_back(mean);
        out.cumulative_stderr.push_back(stderr_);
        out.last_step_error.push_back(sum_last / n);
    }
    return out;
}

std::string to_csv(const error_series& series) {
    std::ostringstream out;
    out << "T,cumulative_mean,cumulative_stderr,last_step_error\n";
    for (std::size_t g = 0; g < series.t_grid.size(); ++g) {
        out << series.t_grid[g] << ',' << format_number(series.cumulative_mean[g]) << ','
            << format_number(series.cumulative_stderr[g]) << ',' << format_number(series.last_step_error[g]) << '\n';
    }
    return out.str();
}

}  // namespace aitlm
