#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aitlm/model.hpp"
#include "aitlm/ngram.hpp"

namespace aitlm {

// A computable target distribution mu. Symbol 0 of a Bernoulli source has
// probability p.
class computable_source {
public:
    static computable_source bernoulli(double p);
    static computable_source markov(std::vector<std::vector<double>> transition, std::vector<double> initial);
    // "bernoulli:0.7" or "markov:0.9,0.1;0.2,0.8|0.5,0.5" (rows ';', initial after '|').
    static computable_source parse(std::string_view spec);

    bool is_bernoulli() const noexcept { return transition_.empty(); }
    std::size_t alphabet_size() const noexcept { return initial_.size(); }
    const alphabet_ptr& symbols() const noexcept { return alphabet_; }
    std::string describe() const;

    // mu(next = 0 | context).
    double true_conditional(std::span<const symbol_id> context) const;
    const std::vector<double>& next_probabilities(std::span<const symbol_id> context) const;

private:
    computable_source() = default;

    double p_ = 0;
    std::vector<std::vector<double>> transition_;
    std::vector<double> initial_;
    alphabet_ptr alphabet_;
};

token_sequence sample_sequence(const computable_source& source, std::size_t length, std::uint64_t seed);
double true_conditional(const computable_source& source, const token_sequence& context);

// Sequential predictor: probability that the next symbol is 0, updated
// online after every observed symbol.
class online_predictor {
public:
    virtual ~online_predictor() = default;
    virtual void reset() = 0;
    virtual void observe(symbol_id s) = 0;
    virtual double probability_of_zero() const = 0;
};

struct predictor_spec {
    enum class kind { ngram, oracle } type = kind::ngram;
    unsigned order = 0;
    double alpha = ngram_model::default_alpha;

    // "kt", "ngram:<order>:<alpha>", or "oracle".
    static predictor_spec parse(std::string_view spec);
    std::string describe() const;
    // Which growth law the cumulative error is expected to follow.
    std::string regime() const;
};

std::unique_ptr<online_predictor> make_predictor(const predictor_spec& spec, const computable_source& source);

struct error_series {
    std::vector<std::size_t> t_grid;
    std::vector<double> cumulative_mean;
    std::vector<double> cumulative_stderr;
    std::vector<double> last_step_error;  // mean of the squared error at step T
    std::size_t trials = 0;
    std::string regime;
};

std::vector<std::size_t> default_t_grid();

// Monte Carlo estimate of sum_{t<=T} E_mu[(Mhat(0|x_1:t) - mu(0|x_1:t))^2]
// at every T of the grid. Trial i draws from a stream seeded by
// splitmix64(seed, i); trials run in parallel and are reduced in index
// order, so the result does not depend on scheduling.
error_series cumulative_error(const computable_source& source, const predictor_spec& predictor,
                              std::span<const std::size_t> t_grid, std::size_t trials, std::uint64_t seed);

std::string to_csv(const error_series& series);

}  // namespace aitlm
