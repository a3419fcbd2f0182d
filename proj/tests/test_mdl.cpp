#include "helpers.hpp"

#include "simplab/errors.hpp"
#include "simplab/mdl.hpp"
#include "simplab/scoring.hpp"

#include <doctest.h>

#include <cmath>

using namespace simplab;
using testing::corpus_of;
using testing::fixture_grammar;

namespace {

// Code length recomputed from the rule list alone.
double recount(const Grammar& g, int param_bits) {
    const double width = std::ceil(std::log2(static_cast<double>(g.sources().size() + g.alphabet().size() + 2)));
    double bits = 0.0;
    std::vector<int> per_source(g.sources().size(), 0);
    if (g.is_pfsg()) {
        for (const auto& a : g.arcs()) {
            bits += (a.named_target ? 2 + 2 : 1 + 2) * width;
            ++per_source[static_cast<std::size_t>(a.source)];
        }
    } else {
        for (const auto& r : g.rules()) {
            bits += static_cast<double>(r.rhs.size() + 2) * width;
            ++per_source[static_cast<std::size_t>(r.lhs)];
        }
    }
    for (int c : per_source)
        if (c > 0) bits += param_bits * (c - 1);
    return bits;
}

} // namespace

TEST_SUITE("mdl") {

TEST_CASE("golden grammar code lengths") {
    CHECK(grammar_code_length(fixture_grammar("iid.g")) == 41.0);
    CHECK(grammar_code_length(fixture_grammar("alt.g")) == 45.0);
    CHECK(grammar_code_length(fixture_grammar("empty_extension.g")) == 6.0);
    CHECK(grammar_code_length(fixture_grammar("contraction_g0.g")) == 144.0);
    CHECK(grammar_code_length(fixture_grammar("contraction_g1.g")) == 160.0);
    CHECK(grammar_code_length(fixture_grammar("contraction_pcfg_g0.g")) == 61.0);
    CHECK(grammar_code_length(fixture_grammar("contraction_pcfg_g1.g")) == 88.0);
    CHECK(grammar_code_length(fixture_grammar("pcfg_unary.g")) == 144.0);
    CHECK(grammar_code_length(fixture_grammar("random4.g")) == 224.0);
}

TEST_CASE("code length agrees with an independent recount") {
    for (const char* f : {"iid.g", "alt.g", "random4.g", "pcfg_unary.g", "contraction_g0.g", "contraction_pcfg_g1.g"}) {
        CAPTURE(f);
        const auto g = fixture_grammar(f);
        for (int pb : {0, 4, 8, 16}) CHECK(grammar_code_length(g, pb) == recount(g, pb));
    }
    CHECK_THROWS_AS(grammar_code_length(fixture_grammar("iid.g"), -1), ParameterError);
}

TEST_CASE("adding a rule never shortens the grammar") {
    const auto base = parse_grammar("format: pfsg\nstart: s\nalphabet: a b\ns : a -> s : 0.5\ns : $end : 0.5\n");
    const auto more = parse_grammar(
        "format: pfsg\nstart: s\nalphabet: a b\ns : a -> s : 0.25\ns : b -> s : 0.25\ns : $end : 0.5\n");
    CHECK(grammar_code_length(more) > grammar_code_length(base));
}

TEST_CASE("data code length of hibye") {
    const auto c = load_corpus(oracle::fixture("hibye.txt"));
    REQUIRE(c.size() == 40);
    CHECK(data_code_length(fixture_grammar("iid.g"), c) == doctest::Approx(40.0));
    CHECK(data_code_length(fixture_grammar("alt.g"), c) == doctest::Approx(0.0));
    const auto r = two_part_length(fixture_grammar("iid.g"), c);
    CHECK(r.grammar_bits == 41.0);
    CHECK(r.total_bits == doctest::Approx(81.0));
    CHECK(r.per_sentence_bits.size() == 40);
}

TEST_CASE("per-sentence lengths sum to the data length and match the filter") {
    const auto g = fixture_grammar("random4.g");
    const auto c = corpus_of("a c\nb\na b a c\nb a\n");
    const auto per = per_sentence_code_lengths(g, c);
    double total = 0.0;
    for (double b : per) total += b;
    CHECK(total == doctest::Approx(data_code_length(g, c)));
    const auto ids = g.encode(flatten(c));
    CHECK(total == doctest::Approx(-std::log2(oracle::pfsg_prefix_prob(g, ids))).epsilon(1e-12));
}

TEST_CASE("pcfg data length sums independent sentences") {
    const auto g = fixture_grammar("contraction_pcfg_g0.g");
    const auto c = corpus_of("he is\nhere he 's\nhe 's\nhere he is\n");
    double total = 0.0;
    for (const auto& s : c) total -= std::log2(oracle::pcfg_sentence_prob(g, g.encode(s.words)));
    CHECK(data_code_length(g, c) == doctest::Approx(total));
}

TEST_CASE("crossover on Hi!/Bye! alternation") {
    const auto iid = fixture_grammar("iid.g");
    const auto alt = fixture_grammar("alt.g");
    const auto c = load_corpus(oracle::fixture("hibye.txt"));
    const auto r0 = two_part_length(iid, c), r1 = two_part_length(alt, c);
    const auto t0 = cumulative_totals(r0), t1 = cumulative_totals(r1);
    REQUIRE(t0.size() == 41);
    for (std::size_t n = 0; n < 4; ++n) CHECK(t0[n] < t1[n]);
    CHECK(t0[4] == t1[4]);
    for (std::size_t n = 5; n <= 40; ++n) CHECK(t1[n] < t0[n]);
    CHECK(crossover_point(iid, alt, c) == std::optional<std::size_t>(5));
    // The shorter grammar already wins on the empty prefix.
    CHECK(crossover_point(alt, iid, c) == std::optional<std::size_t>(0));
}

TEST_CASE("crossover index never decreases when g0-favoured data is prepended") {
    const auto iid = fixture_grammar("iid.g");
    const auto alt = fixture_grammar("alt.g");
    const auto base = load_corpus(oracle::fixture("hibye.txt"));
    // Prepending "Bye!" makes alt impossible, so it can only delay the switch.
    auto padded = base;
    padded.insert(padded.begin(), Sentence{{"Bye!"}, 0});
    const auto a = crossover_point(iid, alt, base);
    const auto b = crossover_point(iid, alt, padded);
    CHECK((!b.has_value() || *b >= *a));
}

TEST_CASE("renormalizing restriction saves one bit per context on the contraction corpus") {
    const auto g0 = fixture_grammar("contraction_g0.g");
    const auto g1 = fixture_grammar("contraction_g1.g");
    const auto c = load_corpus(oracle::fixture("contraction_corpus.txt"));
    const double d0 = data_code_length(g0, c), d1 = data_code_length(g1, c);
    CHECK(d0 - d1 == doctest::Approx(5.0));
    CHECK(grammar_code_length(g1) - grammar_code_length(g0) == 16.0);
}

TEST_CASE("out-of-vocabulary tokens name the line") {
    const auto g = fixture_grammar("iid.g");
    const auto c = corpus_of("Hi!\n\nHello\n");
    try {
        data_code_length(g, c);
        FAIL("expected OutOfVocabularyError");
    } catch (const OutOfVocabularyError& e) {
        CHECK(e.token() == "Hello");
        CHECK(e.line() == 3);
    }
}

TEST_CASE("impossible data has infinite length") {
    const auto alt = fixture_grammar("alt.g");
    CHECK(std::isinf(data_code_length(alt, corpus_of("Bye!\n"))));
}

} // TEST_SUITE
