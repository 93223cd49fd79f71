#include "aitlm/solomonoff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "aitlm/codec.hpp"
#include "aitlm/error.hpp"
#include "aitlm/prefix_code.hpp"

namespace aitlm {

std::string_view to_string(prior_mode mode) noexcept {
    return mode == prior_mode::exact ? "exact" : "paper-approx";
}

prior_mode parse_prior_mode(std::string_view text) {
    if (text == "exact") return prior_mode::exact;
    if (text == "paper-approx") return prior_mode::paper_approx;
    throw error(errc::invalid_argument, "unknown prior mode '" + std::string(text) + "' (expected exact|paper-approx)");
}

double seed_sum(prior_mode mode) {
    return mode == prior_mode::exact ? 1.0 : std::numbers::pi * std::numbers::pi / 6.0;
}

double partial_seed_sum(std::uint64_t limit) {
    long double sum = 0;
    for (std::uint64_t s = 1; s <= limit; ++s) sum += std::ldexp(1.0L, -static_cast<int>(gamma_length(s)));
    return static_cast<double>(sum);
}

namespace {

double ceil_gamma_length(double length) {
    return gamma_length(static_cast<std::uint64_t>(std::ceil(length)));
}

log_prior make_log_prior(std::size_t t, double analytic, prior_mode mode) {
    log_prior lp;
    lp.mode = mode;
    lp.analytic_len = analytic;
    if (mode == prior_mode::exact) {
        lp.seed_sum_log = 0;  // log2(1)
        lp.iteration_len = gamma_length(t);
        lp.payload_len = analytic + ceil_gamma_length(analytic);
    } else {
        lp.seed_sum_log = std::log2(seed_sum(prior_mode::paper_approx));
        lp.iteration_len = 2.0 * std::log2(static_cast<double>(t));
        lp.payload_len = analytic + 2.0 * std::log2(analytic);
    }
    lp.value = lp.seed_sum_log - lp.iteration_len - lp.payload_len;
    return lp;
}

}  // namespace

double program_length(const token_sequence& x, std::uint64_t seed, const probability_model& model) {
    if (seed == 0) throw error(errc::invalid_argument, "seed must be >= 1");
    const double analytic = analytic_code_length(model, x);
    return gamma_length(x.size()) + gamma_length(seed) + analytic + ceil_gamma_length(analytic);
}

log_prior compute_log_prior(const token_sequence& x, const probability_model& model, prior_mode mode) {
    return make_log_prior(x.size(), analytic_code_length(model, x), mode);
}

conditional_prediction conditional_prior(const token_sequence& x, const probability_model& model, prior_mode mode) {
    if (x.empty()) throw error(errc::empty_input, "conditional prior needs at least one observed symbol");
    const std::size_t t = x.size();
    const double analytic = analytic_code_length(model, x);
    const auto base = make_log_prior(t, analytic, mode);
    const auto next = next_distribution(model, x);

    conditional_prediction out;
    const std::size_t v = next.size();
    out.raw.resize(v);
    out.model_probability.assign(next.values().begin(), next.values().end());
    out.ratio_check.resize(v);
    std::vector<double> log_raw(v);
    for (std::size_t a = 0; a < v; ++a) {
        // Extending x by a adds 2 bits of per-token overhead plus -log2 P(a|x).
        const double extended = analytic + 2.0 - std::log2(next[a]);
        log_raw[a] = make_log_prior(t + 1, extended, mode).value - base.value;
        out.raw[a] = std::exp2(log_raw[a]);
        out.ratio_check[a] = out.raw[a] / next[a];
    }
    // 1 / sum_b 2^(log_raw[b] - log_raw[a]): equal log ratios give exactly 1/|V|.
    out.normalized.resize(v);
    for (std::size_t a = 0; a < v; ++a) {
        double denom = 0;
        for (std::size_t b = 0; b < v; ++b) denom += std::exp2(log_raw[b] - log_raw[a]);
        out.normalized[a] = 1.0 / denom;
    }
    return out;
}

double theorem2_deviation(double ratio_check, std::size_t t) {
    const double td = static_cast<double>(t);
    return std::abs(ratio_check * 4.0 * (td + 1) * (td + 1) / (td * td) - 1.0);
}

double theorem2_tolerance(std::size_t t) { return 6.0 / static_cast<double>(t) + 0.01; }

theorem2_report verify_theorem2(const probability_model& model, std::span<const token_sequence> samples,
                                std::span<const std::size_t> t_grid) {
    if (t_grid.empty()) throw error(errc::invalid_argument, "t grid is empty");
    if (samples.empty()) throw error(errc::empty_input, "no sample sequences");
    std::vector<std::size_t> grid(t_grid.begin(), t_grid.end());
    std::sort(grid.begin(), grid.end());
    if (grid.front() == 0) throw error(errc::invalid_argument, "t grid entries must be >= 1");
    for (const auto& x : samples)
        if (x.size() < grid.back()) throw error(errc::invalid_argument, "sample shorter than the largest t in the grid");

    // per_sample[i][g] = {max, sum, count} of deviations for sample i at grid[g]
    struct cell {
        double max = 0, sum = 0;
        std::size_t count = 0;
    };
    std::vector<std::vector<cell>> per_sample(samples.size(), std::vector<cell>(grid.size()));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                auto pred = conditional_prior(samples[i].prefix(grid[g]), model, prior_mode::paper_approx);
                auto& c = per_sample[i][g];
                for (double r : pred.ratio_check) {
                    double d = theorem2_deviation(r, grid[g]);
                    c.max = std::max(c.max, d);
                    c.sum += d;
                    ++c.count;
                }
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    const std::size_t chunk = (samples.size() + workers - 1) / workers;
    {
        std::vector<std::jthread> pool;
        for (std::size_t b = 0; b < samples.size(); b += chunk) pool.emplace_back(work, b, std::min(samples.size(), b + chunk));
    }

    theorem2_report report;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        theorem2_row row;
        row.t = grid[g];
        double sum = 0;
        std::size_t count = 0;
        for (const auto& s : per_sample) {
            row.max_deviation = std::max(row.max_deviation, s[g].max);
            sum += s[g].sum;
            count += s[g].count;
        }
        row.mean_deviation = sum / static_cast<double>(count);
        row.tolerance = theorem2_tolerance(row.t);
        row.pass = row.max_deviation <= row.tolerance;
        if (g > 0 && !(row.max_deviation < report.rows.back().max_deviation)) report.monotone = false;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    report.pass = report.pass && report.monotone;
    return report;
}

semimeasure_report semimeasure_mass(std::size_t length, const probability_model& model) {
    if (length == 0) throw error(errc::invalid_argument, "length must be >= 1");
    const std::uint64_t v = model.symbols()->size();
    std::uint64_t strings = 1;
    for (std::size_t i = 0; i < length; ++i) {
        strings *= v;
        if (strings > max_enumeration)
            throw error(errc::enumeration_too_large,
                        "enumerating |V|^L strings exceeds the limit of " + std::to_string(max_enumeration));
    }
    std::vector<symbol_id> digits(length, 0);
    long double mass = 0;
    for (std::uint64_t n = 0; n < strings; ++n) {
        token_sequence x(model.symbols(), digits);
        mass += std::exp2(static_cast<long double>(compute_log_prior(x, model, prior_mode::exact).value));
        for (std::size_t i = length; i-- > 0;) {
            if (++digits[i] < v) break;
            digits[i] = 0;
        }
    }
    semimeasure_report r;
    r.length = length;
    r.strings = strings;
    r.mass = static_cast<double>(mass);
    r.pass = r.mass <= 1.0;
    return r;
}

}  // namespace aitlm
