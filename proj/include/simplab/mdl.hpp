#pragma once

#include "simplab/corpus.hpp"
#include "simplab/grammar.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace simplab {

inline constexpr int kDefaultParamBits = 8;

// Description length of a grammar under the fixed encoding scheme: every rule
// costs (arity + 2) * ceil(log2(N + T + 2)) bits, where N counts states or
// nonterminals and T terminals, plus `param_bits` per free probability (each
// source's last probability is implied). Arity is the number of right-hand
// side symbols; a PFSG rule's successor state counts as one.
double grammar_code_length(const Grammar& g, int param_bits = kDefaultParamBits);

// Bits a single rule contributes before parameter costs.
double rule_symbol_bits(const Grammar& g, std::size_t arity);

struct CodeLengthReport {
    double grammar_bits = 0.0;
    double data_bits = 0.0;
    double total_bits = 0.0;
    std::vector<double> per_sentence_bits;
};

// -log2 probability of each sentence given the ones before it. PCFG
// sentences are independent; a PFSG carries its state across sentence ends.
// Throws OutOfVocabularyError naming the token and line.
std::vector<double> per_sentence_code_lengths(const Grammar& g, const Corpus& corpus);

double data_code_length(const Grammar& g, const Corpus& corpus);

CodeLengthReport two_part_length(const Grammar& g, const Corpus& corpus, int param_bits = kDefaultParamBits);

// Cumulative two-part totals after each prefix of 0..corpus.size() sentences.
std::vector<double> cumulative_totals(const CodeLengthReport& report);

// Smallest number of leading sentences n for which total(g1) < total(g0),
// or nullopt if g1 never wins within the stream.
std::optional<std::size_t> crossover_point(const Grammar& g0, const Grammar& g1, const Corpus& corpus,
                                           int param_bits = kDefaultParamBits);
std::optional<std::size_t> crossover_point(const CodeLengthReport& r0, const CodeLengthReport& r1);

} // namespace simplab
