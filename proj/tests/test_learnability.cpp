#include "helpers.hpp"

#include "simplab/errors.hpp"
#include "simplab/learnability.hpp"
#include "simplab/mdl.hpp"
#include "simplab/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace simplab;
using testing::fixture_grammar;

TEST_SUITE("learnability") {

TEST_CASE("occurrence arithmetic") {
    CHECK(occurrences_needed(20.0, 0.5) == std::optional<std::uint64_t>(20));
    CHECK(occurrences_needed(20.0, 0.75) == std::optional<std::uint64_t>(10));
    CHECK(occurrences_needed(21.0, 0.75) == std::optional<std::uint64_t>(11));
    CHECK_FALSE(occurrences_needed(20.0, 0.0).has_value());
    CHECK(occurrences_needed(0.0, 0.5) == std::optional<std::uint64_t>(0));
    CHECK_THROWS_AS(occurrences_needed(-1.0, 0.5), ParameterError);
    CHECK_THROWS_AS(occurrences_needed(5.0, 1.0), ParameterError);
    CHECK_THROWS_AS(occurrences_needed(5.0, -0.1), ParameterError);
    CHECK(occurrences_for_savings(16.0, 1.0) == std::optional<std::uint64_t>(16));
    CHECK(occurrences_for_savings(16.0, 3.0) == std::optional<std::uint64_t>(6));
    CHECK_FALSE(occurrences_for_savings(16.0, 0.0).has_value());
}

TEST_CASE("occurrences shrink as q grows") {
    std::optional<std::uint64_t> prev;
    for (double q = 0.05; q < 1.0; q += 0.05) {
        const auto n = occurrences_needed(40.0, q);
        REQUIRE(n.has_value());
        if (prev) CHECK(*n <= *prev);
        prev = n;
    }
}

TEST_CASE("years from a rate") {
    CHECK(years_needed(std::uint64_t{1000}, 500.0, 1e7) == doctest::Approx(0.2));
    CHECK(years_needed(std::uint64_t{0}, 0.0, 1e7) == 0.0);
    CHECK(std::isinf(years_needed(std::uint64_t{5}, 0.0, 1e7)));
    CHECK(std::isinf(years_needed(std::nullopt, 10.0, 1e7)));
    CHECK_THROWS_AS(years_needed(std::uint64_t{5}, -1.0, 1e7), ParameterError);
    CHECK_THROWS_AS(years_needed(std::uint64_t{5}, 1.0, 0.0), ParameterError);
}

TEST_CASE("contexts parse") {
    const auto p = parse_context("prefix: here he");
    CHECK(p.kind == LearnabilityContext::Kind::Prefix);
    CHECK(p.prefix == std::vector<std::string>{"here", "he"});
    const auto s = parse_context("states: v v2");
    CHECK(s.kind == LearnabilityContext::Kind::States);
    CHECK(s.g0_state == "v");
    CHECK(s.g1_state == "v2");
    CHECK_THROWS(parse_context("sideways: x"));
    CHECK_THROWS(parse_context("states: v"));
}

TEST_CASE("contraction pair in closed form") {
    const auto g0 = fixture_grammar("contraction_g0.g");
    const auto g1 = fixture_grammar("contraction_g1.g");
    const auto corpus = load_corpus(oracle::fixture("contraction_corpus.txt"));
    CHECK(rule_complexity_delta(g0, g1) == 16.0);
    for (const char* ctx : {"prefix: here he", "states: v v2"}) {
        CAPTURE(ctx);
        const auto c = parse_context(ctx);
        CHECK(disallowed_mass(g0, g1, c) == doctest::Approx(0.5));
        CHECK(is_renormalization(g0, g1, c));
        CHECK(count_context_occurrences(g1, c, corpus) == 5);
        const auto est = learnability_report(g0, g1, c, corpus);
        CHECK(est.method == SavingsMethod::ClosedForm);
        CHECK(est.delta_bits == 16.0);
        CHECK(est.q == doctest::Approx(0.5));
        CHECK(est.savings_bits == doctest::Approx(1.0));
        CHECK(est.occurrences_needed == std::optional<std::uint64_t>(16));
        CHECK(est.corpus_words == 43);
        CHECK(est.rate_per_million == doctest::Approx(5.0 / 43.0 * 1e6));
        CHECK(est.years_needed == doctest::Approx(16.0 / (5.0 / 43.0 * 1e7)));
    }
}

TEST_CASE("a given rate overrides the corpus") {
    const auto g0 = fixture_grammar("contraction_g0.g");
    const auto g1 = fixture_grammar("contraction_g1.g");
    LearnabilityConfig cfg;
    cfg.rate_per_million = 500.0;
    cfg.words_per_year = 1e7;
    const auto est = learnability_report(g0, g1, parse_context("prefix: here he"), {}, cfg);
    CHECK(est.years_needed == doctest::Approx(16.0 / 5000.0));
}

TEST_CASE("closed form predicts the two-part crossover") {
    const auto g0 = fixture_grammar("contraction_g0.g");
    const auto g1 = fixture_grammar("contraction_g1.g");
    const auto c = parse_context("prefix: here he");
    LearnabilityConfig cfg;
    cfg.rate_per_million = 1.0;
    const auto need = *learnability_report(g0, g1, c, {}, cfg).occurrences_needed;
    // Corpus of g1 sentences; find the crossover and count contexts before it.
    const auto corpus = split_sentences(generate(g1, 99, 20000).tokens);
    const auto cross = crossover_point(g0, g1, corpus);
    REQUIRE(cross.has_value());
    Corpus head(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(*cross));
    const auto k = count_context_occurrences(g1, c, head);
    CHECK(std::abs(static_cast<double>(k) - static_cast<double>(need)) <= 1.0);
}

TEST_CASE("non-renormalizing restriction falls back to an empirical estimate") {
    const auto g0 = fixture_grammar("contraction_g0.g");
    const auto g1 = parse_grammar(
        "format: pfsg\nstart: s\nalphabet: he here is 's\ns : he -> v : 0.5\ns : here -> n : 0.5\n"
        "n : he -> v2 : 1.0\nv : is -> a : 0.5\nv : 's -> a : 0.5\nv2 : is -> f2 : 1.0\n"
        "f2 : $end : 1.0\na : here -> f : 0.5\na : $end : 0.5\nf : $end : 1.0\n");
    const auto c = parse_context("prefix: here he");
    CHECK(is_renormalization(g0, g1, c));
    const auto d = context_distributions(g0, g1, c);
    CHECK(d.g1[2] == doctest::Approx(1.0));

    const auto g2 = parse_grammar(
        "format: pfsg\nstart: s\nalphabet: he here is 's\ns : he -> v : 0.5\ns : here -> n : 0.5\n"
        "n : he -> v2 : 1.0\nv : is -> a : 0.5\nv : 's -> a : 0.5\nv2 : is -> a : 0.9\nv2 : 's -> a : 0.1\n"
        "a : here -> f : 0.5\na : $end : 0.5\nf : $end : 1.0\n");
    CHECK_FALSE(is_renormalization(g0, g2, c));
    const auto corpus = load_corpus(oracle::fixture("contraction_corpus.txt"));
    const auto est = learnability_report(g0, g2, c, corpus);
    CHECK(est.method == SavingsMethod::Empirical);
    // Every "here he is" saves log2(0.5 / 0.9) bits relative to g0.
    CHECK(est.savings_bits == doctest::Approx(std::log2(0.9 / 0.5)));
}

TEST_CASE("g1 allowing what g0 forbids is rejected") {
    const auto g0 = fixture_grammar("contraction_g1.g");
    const auto g1 = fixture_grammar("contraction_g0.g");
    CHECK_THROWS_AS(disallowed_mass(g0, g1, parse_context("prefix: here he")), ValidationError);
}

TEST_CASE("pcfg inputs are rejected for contexts") {
    const auto g0 = fixture_grammar("contraction_pcfg_g0.g");
    const auto g1 = fixture_grammar("contraction_pcfg_g1.g");
    CHECK(rule_complexity_delta(g0, g1) == 27.0);
    CHECK_THROWS_AS(context_distributions(g0, g1, parse_context("prefix: here he")), ValidationError);
}

TEST_CASE("identical grammars need no evidence") {
    const auto g = fixture_grammar("contraction_g0.g");
    LearnabilityConfig cfg;
    cfg.rate_per_million = 1.0;
    const auto est = learnability_report(g, g, parse_context("prefix: here he"), {}, cfg);
    CHECK(est.delta_bits == 0.0);
    CHECK(est.occurrences_needed == std::optional<std::uint64_t>(0));
    CHECK_FALSE(est.warnings.empty());
}

} // TEST_SUITE
