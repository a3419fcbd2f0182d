#pragma once

#include "simplab/corpus.hpp"
#include "simplab/grammar.hpp"
#include "simplab/scoring.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace simplab {

inline constexpr double kDefaultWordsPerYear = 10'000'000.0;

// Where a restriction applies. A prefix context is a sentence-initial word
// sequence; a state context names the state each grammar is in (both
// grammars must be PFSGs).
struct LearnabilityContext {
    enum class Kind { Prefix, States };
    Kind kind = Kind::Prefix;
    std::vector<std::string> prefix;
    std::string g0_state;
    std::string g1_state;

    std::string to_string() const;
};

// "prefix: w1 w2 ..." or "states: <g0 state> <g1 state>".
LearnabilityContext parse_context(std::string_view text);

enum class SavingsMethod { ClosedForm, Empirical };

struct LearnabilityEstimate {
    double delta_bits = 0.0;
    double q = 0.0;
    double savings_bits = 0.0;
    std::optional<std::uint64_t> occurrences_needed; // nullopt = +infinity
    double rate_per_million = 0.0;
    double words_per_year = kDefaultWordsPerYear;
    double years_needed = 0.0; // may be +infinity
    SavingsMethod method = SavingsMethod::ClosedForm;
    std::size_t context_occurrences = 0; // in the supplied corpus
    std::size_t corpus_words = 0;
    std::vector<std::string> warnings;
};

struct LearnabilityConfig {
    double words_per_year = kDefaultWordsPerYear;
    int param_bits = 8;
    // Context rate per million words; measured on the corpus when absent.
    std::optional<double> rate_per_million;
};

// L(g1) - L(g0). Logs a warning when the result is not positive.
double rule_complexity_delta(const Grammar& g0, const Grammar& g1, int param_bits = 8);

// Next-symbol distributions of g0 and g1 in `context`, indexed by g0's
// alphabet (plus END).
struct ContextDistributions {
    SymbolDistribution g0;
    SymbolDistribution g1;
};
ContextDistributions context_distributions(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context);

// g0-probability of next symbols that g1 forbids in `context`. Throws
// ValidationError when g1 allows a symbol g0 forbids there.
double disallowed_mass(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context);

// True when g1's next-symbol distribution in `context` is g0's conditioned
// on the symbols g1 allows (within 1e-9).
bool is_renormalization(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context);

// ceil(delta / log2(1 / (1 - q))); 0 when delta is 0, nullopt (+infinity)
// when q is 0. Throws ParameterError for negative delta or q outside [0, 1).
std::optional<std::uint64_t> occurrences_needed(double delta_bits, double q);
// Same with the per-occurrence savings given directly.
std::optional<std::uint64_t> occurrences_for_savings(double delta_bits, double savings_bits);

// n / (rate * words_per_year / 1e6); +infinity for n = +infinity or rate 0.
// Throws ParameterError for nonpositive words_per_year or negative rate.
double years_needed(std::optional<std::uint64_t> occurrences, double rate_per_million, double words_per_year);

// Number of places in `corpus` where `context` applies. A state context is
// located with the restricted grammar's filter: positions where its belief
// sits on the named g1 state. A sentence g1 cannot parse ends the scan of
// that sentence and restarts the filter.
std::size_t count_context_occurrences(const Grammar& g1, const LearnabilityContext& context, const Corpus& corpus);

LearnabilityEstimate learnability_report(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context,
                                         const Corpus& corpus, const LearnabilityConfig& cfg = {});

std::string to_string(SavingsMethod m);

} // namespace simplab
