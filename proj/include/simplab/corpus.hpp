#pragma once

#include "simplab/grammar.hpp"

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace simplab {

struct Sentence {
    std::vector<std::string> words; // without the END marker
    std::size_t line = 0;           // 1-based source line, 0 if synthetic
};

using Corpus = std::vector<Sentence>;

// One sentence per line, whitespace-separated tokens; blank lines and lines
// starting with '#' are skipped. Each line implicitly ends with END.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);

// Words of every sentence followed by "$end".
TokenSequence flatten(const Corpus& corpus);
// Splits a token stream at "$end"; a trailing unterminated sentence is dropped.
Corpus split_sentences(std::span<const std::string> tokens);

// Corpus-file rendering of `corpus` (one sentence per line).
std::string to_corpus_text(const Corpus& corpus);

} // namespace simplab
