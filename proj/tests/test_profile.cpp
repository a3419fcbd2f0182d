#include "helpers.hpp"

#include "simplab/errors.hpp"
#include "simplab/mixture.hpp"
#include "simplab/profile.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <tuple>

using namespace simplab;
using testing::fixture_grammar;
using testing::toks;

namespace {

struct Suite {
    MixturePredictor cls;
    Grammar truth;
};

Suite suite(const std::string& name) {
    const std::string base = "suite/" + name + "/";
    std::ifstream tf(oracle::fixture(base + "truth.txt"));
    std::string truth_file;
    tf >> truth_file;
    return {build_class(load_manifest(oracle::fixture(base + "class.manifest"))),
            load_grammar(oracle::fixture(base + truth_file))};
}

// Expected per-step metrics by enumerating every prefix of the truth and
// computing both predictive distributions from first principles.
std::vector<StepMetrics> brute_force(const MixturePredictor& m, const Grammar& truth_in, std::size_t horizon, int a0,
                                     double f) {
    const Grammar truth = truth_in.with_alphabet_order(m.alphabet());
    std::vector<Grammar> gs;
    std::vector<double> prior;
    for (const auto& h : m.hypotheses()) {
        gs.push_back(h.grammar);
        prior.push_back(h.prior_weight);
    }
    std::vector<StepMetrics> out(horizon);
    for (std::size_t n = 0; n < horizon; ++n) {
        for (const auto& x : testing::positive_prefixes(truth, n)) {
            const double w = oracle::pfsg_prefix_prob(truth, x);
            const auto xi = oracle::mixture_next(gs, prior, x);
            const auto mu = oracle::pfsg_next(truth, x);
            out[n].squared_error += w * (xi[a0] - mu[a0]) * (xi[a0] - mu[a0]);
            double l1 = 0.0;
            for (std::size_t k = 0; k < mu.size(); ++k) {
                l1 += std::abs(xi[k] - mu[k]);
                if (mu[k] == 0.0) out[n].overgeneral += w * xi[k];
                else if (f * xi[k] <= mu[k]) out[n].undergeneral += w * mu[k];
            }
            out[n].tv_squared += w * 0.25 * l1 * l1;
        }
    }
    return out;
}

} // namespace

TEST_SUITE("profile") {

TEST_CASE("instantaneous error with an empty prefix") {
    std::vector<HypothesisSpec> s;
    s.push_back({"iid", fixture_grammar("iid.g"), 0.5});
    s.push_back({"alt", fixture_grammar("alt.g"), 0.5});
    const auto m = build_class(std::move(s));
    const std::vector<std::string> none;
    CHECK(instantaneous_error(m, fixture_grammar("alt.g"), none) == doctest::Approx(0.0625));
    CHECK(instantaneous_error(m, fixture_grammar("alt.g"), toks("Hi! $end")) ==
          doctest::Approx(std::pow(1.0 - (2.0 / 3.0 + 0.5 / 3.0), 2)));
    CHECK_THROWS_AS(instantaneous_error(m, fixture_grammar("alt.g"), toks("Bye!")), ConditioningError);
}

TEST_CASE("exact profile equals brute-force enumeration") {
    for (const char* name : {"hibye_alt", "hibye_iid", "cycle", "agreement", "geometric"}) {
        CAPTURE(name);
        const auto s = suite(name);
        ProfileConfig cfg;
        cfg.horizon = 7;
        const auto p = convergence_profile(s.cls, s.truth, cfg);
        const auto want = brute_force(s.cls, s.truth, cfg.horizon, 0, cfg.f);
        REQUIRE(p.steps.size() == cfg.horizon);
        double cs = 0.0;
        for (std::size_t i = 0; i < cfg.horizon; ++i) {
            CHECK(p.steps[i].n == i + 1);
            CHECK(p.steps[i].s == doctest::Approx(want[i].squared_error).epsilon(1e-10));
            CHECK(p.steps[i].tv2 == doctest::Approx(want[i].tv_squared).epsilon(1e-10));
            CHECK(p.steps[i].delta == doctest::Approx(want[i].overgeneral).epsilon(1e-10));
            CHECK(p.steps[i].lambda == doctest::Approx(want[i].undergeneral).epsilon(1e-10));
            cs += p.steps[i].s;
            CHECK(p.steps[i].cum_s == doctest::Approx(cs));
            CHECK(p.steps[i].s_ci == 0.0);
        }
    }
}

TEST_CASE("bounds use the truth's code length") {
    const auto s = suite("hibye_alt");
    const auto p = convergence_profile(s.cls, s.truth, {});
    CHECK(p.truth_in_class);
    CHECK(p.bounds.truth_bits == 45.0);
    CHECK(p.bounds.prediction == doctest::Approx(std::numbers::ln2 / 2 * 45.0));
    CHECK(p.bounds.overgen == doctest::Approx(45.0 / std::numbers::ln2));
    CHECK(p.bounds.undergen == doctest::Approx(45.0 / std::log2(8.0 / std::numbers::e)));
    CHECK(p.steps.back().s < 1e-3);
}

TEST_CASE("overridden priors bound with -log2 of the weight") {
    std::vector<HypothesisSpec> sp;
    sp.push_back({"iid", fixture_grammar("iid.g"), 0.75});
    sp.push_back({"alt", fixture_grammar("alt.g"), 0.25});
    const auto m = build_class(std::move(sp));
    ProfileConfig cfg;
    cfg.horizon = 4;
    CHECK(convergence_profile(m, fixture_grammar("alt.g"), cfg).bounds.truth_bits == doctest::Approx(2.0));
}

TEST_CASE("truth outside the class uses its own code length") {
    const auto biased = parse_grammar("format: pfsg\nstart: s\nalphabet: Hi! Bye!\ns : Hi! -> done : 0.9\n"
                                      "s : Bye! -> done : 0.1\ndone : $end : 1.0\n");
    const auto m = build_class(load_manifest(oracle::fixture("suite/hibye_alt/class.manifest")));
    ProfileConfig cfg;
    cfg.horizon = 3;
    const auto p = convergence_profile(m, biased, cfg);
    CHECK_FALSE(p.truth_in_class);
    CHECK(p.bounds.truth_bits == 41.0);
}

TEST_CASE("underestimation factor must exceed e") {
    const auto s = suite("hibye_alt");
    ProfileConfig cfg;
    cfg.horizon = 3;
    for (double f : {0.5, 1.0, 2.0, std::numbers::e}) {
        cfg.f = f;
        CHECK_THROWS_AS(convergence_profile(s.cls, s.truth, cfg), ParameterError);
    }
    for (double f : {2.72, 4.0, 8.0, 32.0}) {
        cfg.f = f;
        CHECK_NOTHROW(convergence_profile(s.cls, s.truth, cfg));
    }
}

TEST_CASE("raising f never raises undergeneration terms") {
    for (const char* name : {"four_symbols", "agreement", "geometric"}) {
        CAPTURE(name);
        const auto s = suite(name);
        ProfileConfig lo, hi;
        lo.horizon = hi.horizon = 10;
        lo.f = 4.0;
        hi.f = 16.0;
        const auto a = convergence_profile(s.cls, s.truth, lo);
        const auto b = convergence_profile(s.cls, s.truth, hi);
        for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(b.steps[i].lambda <= a.steps[i].lambda + 1e-15);
    }
}

TEST_CASE("a class that only undergenerates has zero overgeneration") {
    const auto biased = parse_grammar("format: pfsg\nstart: s\nalphabet: Hi! Bye!\ns : Hi! -> done : 0.9\n"
                                      "s : Bye! -> done : 0.1\ndone : $end : 1.0\n");
    const auto hi_only = parse_grammar("format: pfsg\nstart: s\nalphabet: Hi! Bye!\ns : Hi! -> done : 1.0\n"
                                       "done : $end : 1.0\n");
    std::vector<HypothesisSpec> sp;
    sp.push_back({"biased", biased, std::nullopt});
    sp.push_back({"hi_only", hi_only, std::nullopt});
    const auto m = build_class(std::move(sp));
    ProfileConfig cfg;
    cfg.horizon = 12;
    const auto p = convergence_profile(m, fixture_grammar("iid.g"), cfg);
    CHECK_FALSE(p.truth_in_class);
    for (const auto& st : p.steps) CHECK(st.delta == 0.0);
    CHECK(p.steps.back().cum_lambda > 0.0);
}

TEST_CASE("monte-carlo agrees with exact within its confidence interval") {
    const auto s = suite("agreement");
    ProfileConfig ex;
    ex.horizon = 12;
    ProfileConfig mc = ex;
    mc.mode = ProfileMode::MonteCarlo;
    mc.trials = 10000;
    mc.seed = 17;
    const auto a = convergence_profile(s.cls, s.truth, ex);
    const auto b = convergence_profile(s.cls, s.truth, mc);
    CHECK(b.trials == 10000);
    std::size_t inside = 0, total = 0;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        for (auto [e, m, ci] : {std::tuple{a.steps[i].s, b.steps[i].s, b.steps[i].s_ci},
                                std::tuple{a.steps[i].delta, b.steps[i].delta, b.steps[i].delta_ci},
                                std::tuple{a.steps[i].lambda, b.steps[i].lambda, b.steps[i].lambda_ci}}) {
            ++total;
            if (std::abs(e - m) <= ci + 1e-12) ++inside;
            CHECK(std::abs(e - m) <= 3.0 * ci + 1e-12);
        }
    }
    // A 95% interval misses about one step in twenty.
    CHECK(static_cast<double>(inside) >= 0.85 * static_cast<double>(total));
}

TEST_CASE("monte-carlo output is deterministic in the seed") {
    const auto s = suite("cycle");
    ProfileConfig mc;
    mc.horizon = 10;
    mc.mode = ProfileMode::MonteCarlo;
    mc.trials = 500;
    mc.seed = 5;
    const auto a = convergence_profile(s.cls, s.truth, mc);
    const auto b = convergence_profile(s.cls, s.truth, mc);
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].cum_s == b.steps[i].cum_s);
    mc.trials = 0;
    CHECK_THROWS_AS(convergence_profile(s.cls, s.truth, mc), ParameterError);
}

TEST_CASE("leaf budget") {
    const auto s = suite("four_symbols");
    CHECK(count_prefixes(s.truth, 3, 1000) == testing::positive_prefixes(s.truth, 3).size());
    ProfileConfig cfg;
    cfg.horizon = 30;
    cfg.leaf_budget = 100;
    CHECK_THROWS_AS(convergence_profile(s.cls, s.truth, cfg), BudgetExceededError);
}

TEST_CASE("reference symbol validation") {
    const auto s = suite("hibye_alt");
    ProfileConfig cfg;
    cfg.horizon = 3;
    cfg.reference_symbol = 2;
    CHECK(convergence_profile(s.cls, s.truth, cfg).reference_symbol == "$end");
    cfg.reference_symbol = 3;
    CHECK_THROWS_AS(convergence_profile(s.cls, s.truth, cfg), ParameterError);
    CHECK_THROWS_AS(convergence_profile(s.cls, fixture_grammar("pcfg_unary.g"), {}), ValidationError);
}

TEST_CASE("cumulative terms stay under their bounds on the suite") {
    for (const char* name : {"hibye_alt", "hibye_iid", "geometric", "four_symbols", "agreement", "cycle"}) {
        CAPTURE(name);
        const auto s = suite(name);
        ProfileConfig cfg;
        cfg.horizon = 20;
        const auto p = convergence_profile(s.cls, s.truth, cfg);
        CHECK(p.steps.back().cum_s <= p.bounds.prediction);
        CHECK(p.steps.back().cum_delta <= p.bounds.overgen);
        CHECK(p.steps.back().cum_lambda <= p.bounds.undergen);
        for (const auto& st : p.steps) CHECK(st.s <= st.tv2 + 1e-15);
    }
}

} // TEST_SUITE
