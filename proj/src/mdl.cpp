#include "simplab/mdl.hpp"

#include "simplab/errors.hpp"
#include "simplab/scoring.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace simplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> encode_line(const Grammar& g, const Sentence& s) {
    try {
        auto ids = g.encode(s.words);
        ids.push_back(g.end_symbol());
        return ids;
    } catch (const OutOfVocabularyError& e) {
        throw OutOfVocabularyError(e.token(), s.line);
    }
}

} // namespace

double rule_symbol_bits(const Grammar& g, std::size_t arity) {
    const double width = std::ceil(std::log2(static_cast<double>(g.sources().size() + g.alphabet().size() + 2)));
    return static_cast<double>(arity + 2) * width;
}

double grammar_code_length(const Grammar& g, int param_bits) {
    if (param_bits < 0) throw ParameterError("param-bits must be nonnegative");
    double bits = 0.0;
    if (g.is_pfsg()) {
        for (const auto& a : g.arcs()) bits += rule_symbol_bits(g, a.named_target ? 2 : 1);
    } else {
        for (const auto& r : g.rules()) bits += rule_symbol_bits(g, r.rhs.size());
    }
    for (std::size_t s = 0; s < g.sources().size(); ++s) {
        const auto n = g.rules_of(static_cast<int>(s));
        if (n > 0) bits += static_cast<double>(param_bits) * static_cast<double>(n - 1);
    }
    return bits;
}

std::vector<double> per_sentence_code_lengths(const Grammar& g, const Corpus& corpus) {
    std::vector<double> out;
    out.reserve(corpus.size());
    if (g.is_pfsg()) {
        PfsgForward fwd(g);
        for (const auto& s : corpus) {
            double bits = 0.0;
            for (int id : encode_line(g, s)) {
                const double lp = fwd.advance(id);
                if (lp == -kInf) {
                    bits = kInf;
                    break;
                }
                bits -= lp;
            }
            // A dead filter restarts so later sentences still get a finite score.
            if (fwd.dead()) fwd.reset();
            out.push_back(bits);
        }
        return out;
    }
    for (const auto& s : corpus) {
        auto ids = encode_line(g, s);
        ids.pop_back();
        const double p = pcfg_inside_probability(g, ids);
        out.push_back(p > 0.0 ? -std::log2(p) : kInf);
    }
    return out;
}

double data_code_length(const Grammar& g, const Corpus& corpus) {
    double total = 0.0;
    for (double b : per_sentence_code_lengths(g, corpus)) total += b;
    return total;
}

CodeLengthReport two_part_length(const Grammar& g, const Corpus& corpus, int param_bits) {
    CodeLengthReport r;
    r.grammar_bits = grammar_code_length(g, param_bits);
    r.per_sentence_bits = per_sentence_code_lengths(g, corpus);
    for (double b : r.per_sentence_bits) r.data_bits += b;
    r.total_bits = r.grammar_bits + r.data_bits;
    return r;
}

std::vector<double> cumulative_totals(const CodeLengthReport& report) {
    std::vector<double> out;
    out.reserve(report.per_sentence_bits.size() + 1);
    double data = 0.0;
    out.push_back(report.grammar_bits + data);
    for (double b : report.per_sentence_bits) {
        data += b;
        out.push_back(report.grammar_bits + data);
    }
    return out;
}

std::optional<std::size_t> crossover_point(const CodeLengthReport& r0, const CodeLengthReport& r1) {
    if (r0.per_sentence_bits.size() != r1.per_sentence_bits.size())
        throw std::invalid_argument("reports cover different corpora");
    const auto t0 = cumulative_totals(r0);
    const auto t1 = cumulative_totals(r1);
    for (std::size_t n = 0; n < t0.size(); ++n)
        if (t1[n] < t0[n]) return n;
    return std::nullopt;
}

std::optional<std::size_t> crossover_point(const Grammar& g0, const Grammar& g1, const Corpus& corpus,
                                           int param_bits) {
    return crossover_point(two_part_length(g0, corpus, param_bits), two_part_length(g1, corpus, param_bits));
}

} // namespace simplab
