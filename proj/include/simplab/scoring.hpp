#pragma once

#include "simplab/grammar.hpp"

#include <memory>
#include <span>
#include <vector>

namespace simplab {

// Probability vector over alphabet ∪ {END}, indexed by symbol id.
using SymbolDistribution = std::vector<double>;

// Forward (belief-state) filter of a PFSG over a token stream. Sentence ends
// move the belief to each end rule's successor, so the filter conditions on
// whole multi-sentence prefixes. The grammar must outlive the filter; copies
// share the precomputed transition tables.
class PfsgForward {
public:
    explicit PfsgForward(const Grammar& g);

    const Grammar& grammar() const { return *grammar_; }

    // Exact next-symbol distribution. Requires !dead().
    SymbolDistribution next_distribution() const;
    void next_distribution(std::span<double> out) const;
    double probability_of(int symbol) const;

    // Conditions on `symbol`; returns log2 of its conditional probability,
    // -infinity when it is impossible (the filter is then dead).
    double advance(int symbol);

    bool dead() const { return dead_; }
    // log2 of the probability of everything consumed so far.
    double log2_mass() const { return log2_mass_; }
    const std::vector<double>& belief() const { return belief_; }

    // Restarts at the start state with an empty history.
    void reset();
    // Point belief on `state`, history mass 1.
    void reset_to_state(int state);

private:
    struct Tables {
        std::vector<double> emit; // states x symbols, row-major
    };

    const Grammar* grammar_;
    std::shared_ptr<const Tables> tables_;
    std::vector<double> belief_;
    std::vector<double> scratch_;
    double log2_mass_ = 0.0;
    bool dead_ = false;
};

// Inside probability of a PCFG sentence (words only, no END marker).
double pcfg_inside_probability(const Grammar& g, std::span<const int> words);

// -log2 P_g(s) for one sentence ending in "$end"; +infinity when P = 0.
// Throws OutOfVocabularyError for unknown tokens and std::invalid_argument
// when `sentence` is not exactly one END-terminated sentence.
double sentence_log_loss(const Grammar& g, std::span<const std::string> sentence);

// Exact conditional distribution of the next symbol after `prefix` (which
// may span several sentences). PFSG only; throws ConditioningError for
// zero-probability prefixes.
SymbolDistribution next_symbol_dist(const Grammar& g, std::span<const std::string> prefix);

// True iff P_g(s) > 0. Out-of-vocabulary tokens yield false with a warning.
bool is_grammatical(const Grammar& g, std::span<const std::string> sentence);

} // namespace simplab
