#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aitlm/model.hpp"

namespace aitlm {

// exact: integer Elias gamma lengths throughout.
// paper_approx: the real-valued 2*log2 forms and the pi^2/6 seed sum.
enum class prior_mode { exact, paper_approx };

std::string_view to_string(prior_mode mode) noexcept;
prior_mode parse_prior_mode(std::string_view text);

// sum over s >= 1 of 2^-|seed code|: 1 for exact gamma lengths, pi^2/6 for
// the 1/s^2 approximation.
double seed_sum(prior_mode mode);
// Exact partial sum over s = 1..limit.
double partial_seed_sum(std::uint64_t limit);

// Length in bits of the program (gamma(t), gamma(s), wrap(e)) when e has the
// analytic length; model size is not charged.
double program_length(const token_sequence& x, std::uint64_t seed, const probability_model& model);

// log2 of the approximate prior, with the additive bookkeeping kept:
// value = seed_sum_log - iteration_len - payload_len.
struct log_prior {
    double value = 0;
    prior_mode mode = prior_mode::exact;
    double seed_sum_log = 0;
    double iteration_len = 0;
    double payload_len = 0;
    double analytic_len = 0;  // L = 2t + log loss
};

log_prior compute_log_prior(const token_sequence& x, const probability_model& model, prior_mode mode);

struct conditional_prediction {
    std::vector<double> raw;                // Mbar(x a) / Mbar(x)
    std::vector<double> normalized;         // raw / sum(raw)
    std::vector<double> model_probability;  // P(a | x)
    std::vector<double> ratio_check;        // raw / P(a | x)
};

conditional_prediction conditional_prior(const token_sequence& x, const probability_model& model, prior_mode mode);

// |ratio_check * 4(t+1)^2 / t^2 - 1| for one symbol.
double theorem2_deviation(double ratio_check, std::size_t t);
// Pass threshold applied at context length t: 6/t + 0.01.
double theorem2_tolerance(std::size_t t);

struct theorem2_row {
    std::size_t t = 0;
    double max_deviation = 0;
    double mean_deviation = 0;
    double tolerance = 0;
    bool pass = false;
};

struct theorem2_report {
    std::vector<theorem2_row> rows;
    bool monotone = true;  // max deviation strictly decreases along the grid
    bool pass = true;      // every row passes and the sequence is monotone
};

// Evaluates every prefix x_{1:t} (t in t_grid) of each sequence in `samples`
// over every next symbol, in paper-approx mode. Sequences must be at least
// max(t_grid) long. Sequences are processed in parallel; the reduction runs
// in sample order.
theorem2_report verify_theorem2(const probability_model& model, std::span<const token_sequence> samples,
                                std::span<const std::size_t> t_grid);

// Largest enumeration semimeasure_mass accepts (|V|^L).
inline constexpr std::uint64_t max_enumeration = std::uint64_t{1} << 20;

struct semimeasure_report {
    std::size_t length = 0;
    std::uint64_t strings = 0;
    double mass = 0;
    bool pass = false;  // mass <= 1
};

// Brute-force sum of 2^log_prior(x, exact) over every x of the given length.
semimeasure_report semimeasure_mass(std::size_t length, const probability_model& model);

}  // namespace aitlm
