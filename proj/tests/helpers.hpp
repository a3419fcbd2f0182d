#pragma once

#include "oracles.hpp"

#include "simplab/corpus.hpp"
#include "simplab/grammar.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline simplab::Grammar fixture_grammar(const std::string& rel) { return simplab::load_grammar(oracle::fixture(rel)); }

inline std::vector<std::string> toks(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

inline simplab::Corpus corpus_of(const std::string& text) {
    std::istringstream in(text);
    return simplab::parse_corpus(in);
}

// Every positive-probability token sequence of exactly `length` symbols.
inline void positive_prefixes(const simplab::Grammar& g, std::size_t length, std::vector<int>& cur,
                              std::vector<std::vector<int>>& out) {
    if (cur.size() == length) {
        out.push_back(cur);
        return;
    }
    for (int k = 0; k <= g.end_symbol(); ++k) {
        cur.push_back(k);
        if (oracle::pfsg_prefix_prob(g, cur) > 0.0) positive_prefixes(g, length, cur, out);
        cur.pop_back();
    }
}

inline std::vector<std::vector<int>> positive_prefixes(const simplab::Grammar& g, std::size_t length) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    positive_prefixes(g, length, cur, out);
    return out;
}

inline std::vector<std::string> names(const simplab::Grammar& g, const std::vector<int>& ids) {
    std::vector<std::string> out;
    for (int id : ids) out.emplace_back(g.symbol_name(id));
    return out;
}

} // namespace testing
