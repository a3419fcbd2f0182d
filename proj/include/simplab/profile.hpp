#pragma once

#include "simplab/grammar.hpp"
#include "simplab/mixture.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace simplab {

enum class ProfileMode { Exact, MonteCarlo };

struct ProfileConfig {
    std::size_t horizon = 30;
    ProfileMode mode = ProfileMode::Exact;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    double f = 8.0;               // underestimation factor; must exceed e
    int reference_symbol = 0;     // symbol whose probability the squared error tracks
    std::uint64_t leaf_budget = std::uint64_t{1} << 22;
    int param_bits = 8;
};

// Per-prefix quantities, before taking expectations over the prefix.
struct StepMetrics {
    double squared_error = 0.0;    // (xi(a0) - mu(a0))^2
    double tv_squared = 0.0;       // (1/2 sum |xi - mu|)^2
    double overgeneral = 0.0;      // xi-mass on symbols mu forbids
    double undergeneral = 0.0;     // mu-mass where f * xi <= mu
};

StepMetrics step_metrics(std::span<const double> learner, std::span<const double> truth, int reference_symbol,
                         double f);

struct ProfileStep {
    std::size_t n = 0;
    double s = 0.0;
    double tv2 = 0.0;
    double delta = 0.0;
    double lambda = 0.0;
    double cum_s = 0.0;
    double cum_delta = 0.0;
    double cum_lambda = 0.0;
    // 95% normal-approximation half widths; zero in exact mode.
    double s_ci = 0.0;
    double tv2_ci = 0.0;
    double delta_ci = 0.0;
    double lambda_ci = 0.0;
};

struct ProfileBounds {
    double truth_bits = 0.0; // code length of the truth used in the bounds
    double prediction = 0.0; // (ln 2 / 2) * L
    double overgen = 0.0;    // L / ln 2
    double undergen = 0.0;   // L / log2(f / e)
};

struct ConvergenceProfile {
    ProfileMode mode = ProfileMode::Exact;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double f = 8.0;
    std::string reference_symbol;
    bool truth_in_class = false;
    std::vector<ProfileStep> steps;
    ProfileBounds bounds;
};

// Throws ParameterError unless f > e.
void check_underestimation_factor(double f);

ProfileBounds make_bounds(double truth_bits, double f);

// Expectation accumulators turned into a profile: fills cumulative sums.
// `sums[n]` are the step means; `ci` the half widths (may be empty).
void finish_steps(ConvergenceProfile& profile, std::span<const StepMetrics> means, std::span<const StepMetrics> ci);

// s_n, Delta_n and Lambda_{n,f} for n = 1..horizon, with the learner
// starting from `prior` (usually nothing observed) and prefixes drawn from
// `truth`. Exact mode enumerates every positive-probability prefix and
// throws BudgetExceededError past cfg.leaf_budget leaves; Monte-Carlo mode
// samples cfg.trials prefixes from seeded per-trial substreams.
ConvergenceProfile convergence_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg);

// The same profile, named for the quantity each caller reads.
ConvergenceProfile expected_error_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg);
ConvergenceProfile overgen_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg);
ConvergenceProfile undergen_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg);

// (xi(a0 | prefix) - mu(a0 | prefix))^2 for a learner that has not yet
// observed `prefix`. Throws ConditioningError if mu(prefix) = 0.
double instantaneous_error(const MixturePredictor& prior, const Grammar& truth, std::span<const std::string> prefix,
                           int reference_symbol = 0);

// Number of positive-probability prefixes of `length` tokens under `truth`,
// counting stops once `cap` is exceeded.
std::uint64_t count_prefixes(const Grammar& truth, std::size_t length, std::uint64_t cap);

} // namespace simplab
