#include "helpers.hpp"

#include "simplab/errors.hpp"
#include "simplab/form_meaning.hpp"
#include "simplab/profile.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace simplab;

namespace {

std::vector<std::string> inventory() { return load_inventory(oracle::fixture("joint/inventory.txt")); }

JointMixture joint_class() { return load_joint_class(oracle::fixture("joint/class.manifest"), inventory()); }

JointTable table(const std::string& name) { return load_joint_table(oracle::fixture("joint/" + name + ".tsv"), inventory()); }

JointTable table_of(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    return parse_joint_table(in, name, inventory());
}

// Profile terms by enumerating every outcome sequence, with the predictive
// computed directly as a ratio of mixture marginals.
std::vector<StepMetrics> brute_force(const JointMixture& m, const JointTable& truth, std::size_t horizon, int a0,
                                     double f) {
    const auto mu = m.dense(truth);
    const std::size_t k = m.outcome_count();
    std::vector<StepMetrics> out(horizon);
    auto marginal = [&](const std::vector<std::size_t>& seq) {
        double total = 0.0;
        for (std::size_t h = 0; h < m.size(); ++h) {
            double p = m.prior_weights()[h];
            for (auto o : seq) p *= m.dense(h)[o];
            total += p;
        }
        return total;
    };
    for (std::size_t n = 0; n < horizon; ++n) {
        std::vector<std::size_t> seq(n, 0);
        for (;;) {
            double w = 1.0;
            for (auto o : seq) w *= mu[o];
            if (w > 0.0) {
                const double den = marginal(seq);
                std::vector<double> xi(k);
                for (std::size_t o = 0; o < k; ++o) {
                    seq.push_back(o);
                    xi[o] = marginal(seq) / den;
                    seq.pop_back();
                }
                const auto r = static_cast<std::size_t>(a0);
                out[n].squared_error += w * (xi[r] - mu[r]) * (xi[r] - mu[r]);
                double l1 = 0.0;
                for (std::size_t o = 0; o < k; ++o) {
                    l1 += std::abs(xi[o] - mu[o]);
                    if (mu[o] == 0.0) out[n].overgeneral += w * xi[o];
                    else if (f * xi[o] <= mu[o]) out[n].undergeneral += w * mu[o];
                }
                out[n].tv_squared += w * 0.25 * l1 * l1;
            }
            std::size_t i = 0;
            while (i < n && ++seq[i] == k) seq[i++] = 0;
            if (i == n) break;
        }
    }
    return out;
}

} // namespace

TEST_SUITE("form-meaning") {

TEST_CASE("inventory and pairs parse") {
    const auto inv = inventory();
    CHECK(inv == std::vector<std::string>{"ANIMAL", "CLUB", "MOTION"});
    const auto pairs = load_pairs(oracle::fixture("joint/pairs.tsv"), inv);
    REQUIRE(pairs.size() == 7);
    CHECK(pairs[1].sentence == std::vector<std::string>{"the", "bat", "flew"});
    CHECK(pairs[1].interpretation == "MOTION");
    CHECK(pairs[1].line == 2);

    std::istringstream bad("the bat\tROBOT\n");
    CHECK_THROWS_AS(parse_pairs(bad, inv), ValidationError);
    std::istringstream notab("the bat ANIMAL\n");
    CHECK_THROWS_AS(parse_pairs(notab, inv), ParseError);
    std::istringstream dup("A\nA\n");
    CHECK_THROWS_AS(parse_inventory(dup), ParseError);
}

TEST_CASE("joint tables validate their cells") {
    CHECK_THROWS_AS(table_of("the bat\tANIMAL\t0.5\n", "t"), ValidationError);
    CHECK_THROWS_AS(table_of("the bat\tANIMAL\t0.5\nthe bat\tANIMAL\t0.5\n", "t"), ValidationError);
    CHECK_THROWS_AS(table_of("the bat\tANIMAL\tlots\n", "t"), ParseError);
    CHECK_THROWS_AS(table_of("the bat\tANIMAL\t0\nit\tCLUB\t1\n", "t"), ParseError);
    const auto t = table("truth");
    CHECK(t.name == "truth");
    CHECK(t.cells.size() == 5);
    // 3 sentences and 3 interpretations: 2 + 2 header bits, 4 free cells.
    CHECK(table_code_length(t, 3) == 4.0 + 32.0);
}

TEST_CASE("predictive joint is a distribution and obeys the chain rule") {
    auto m = joint_class();
    const auto pairs = load_pairs(oracle::fixture("joint/pairs.tsv"), inventory());
    double log2_chain = 0.0;
    for (const auto& p : pairs) {
        const auto pred = m.predictive_joint();
        CHECK(std::accumulate(pred.begin(), pred.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        std::string sentence;
        for (const auto& w : p.sentence) sentence += (sentence.empty() ? "" : " ") + w;
        log2_chain += std::log2(pred[*m.outcome_id(sentence, p.interpretation)]);
        m.observe(p);
    }
    // log2 of the mixture marginal, straight from the evidences.
    const auto ev = m.log2_evidence();
    double marg = 0.0;
    for (std::size_t h = 0; h < m.size(); ++h) marg += m.prior_weights()[h] * std::exp2(ev[h]);
    CHECK(log2_chain == doctest::Approx(std::log2(marg)).epsilon(1e-12));
}

TEST_CASE("posterior does not depend on observation order") {
    const auto m = joint_class();
    auto pairs = load_pairs(oracle::fixture("joint/pairs.tsv"), inventory());
    const auto a = learn_joint(m, pairs).posterior();
    std::reverse(pairs.begin(), pairs.end());
    const auto b = learn_joint(m, pairs).posterior();
    std::rotate(pairs.begin(), pairs.begin() + 3, pairs.end());
    const auto c = learn_joint(m, pairs).posterior();
    for (std::size_t h = 0; h < a.size(); ++h) {
        CHECK(std::abs(a[h] - b[h]) <= 1e-12);
        CHECK(std::abs(a[h] - c[h]) <= 1e-12);
    }
}

TEST_CASE("two-table class identifies the truth from 100 pairs") {
    const auto truth = table("truth");
    JointMixture m({truth, table("uniform")}, inventory(), std::vector<double>{0.5, 0.5});
    const auto learned = learn_joint(m, sample_pairs(truth, 100, 4));
    CHECK(learned.posterior()[0] > 0.99);
}

TEST_CASE("conditionals slice the predictive joint") {
    const auto m = joint_class();
    const auto given_s = m.conditional_given_sentence("the bat");
    CHECK(given_s.size() == m.interpretations().size());
    CHECK(std::accumulate(given_s.begin(), given_s.end(), 0.0) == doctest::Approx(1.0));
    const auto given_i = m.conditional_given_interpretation("MOTION");
    CHECK(given_i.size() == m.sentences().size());
    CHECK(std::accumulate(given_i.begin(), given_i.end(), 0.0) == doctest::Approx(1.0));
    const auto pred = m.predictive_joint();
    const auto s = *m.sentence_index("the bat");
    const auto ni = m.interpretations().size();
    double row = 0.0;
    for (std::size_t i = 0; i < ni; ++i) row += pred[s * ni + i];
    CHECK(given_s[0] == doctest::Approx(pred[s * ni] / row));
    CHECK_THROWS(m.conditional_given_sentence("no such sentence"));
}

TEST_CASE("observations outside every table exhaust the class and leave it unchanged") {
    JointMixture m({table("unambiguous")}, inventory());
    const auto before = m.counts();
    FormMeaningPair p{{"the", "bat"}, "CLUB", 1};
    CHECK_THROWS_AS(m.observe(p), Error);
    CHECK(m.counts() == before);
}

TEST_CASE("class construction") {
    CHECK_THROWS_AS(JointMixture({}, inventory()), ValidationError);
    CHECK_THROWS_AS(JointMixture({table("truth"), table("truth")}, inventory()), ValidationError);
    CHECK_THROWS_AS(JointMixture({table("truth"), table("swapped")}, inventory(), std::vector<double>{0.5, 0.6}),
                    ValidationError);
    const JointMixture m({table("truth"), table("swapped")}, inventory(), std::vector<double>{0.25, 0.75});
    CHECK(m.prior_weights()[1] == 0.75);
    CHECK(m.find(table("swapped")) == std::optional<std::size_t>(1));
    CHECK_FALSE(m.find(table("club")).has_value());
}

TEST_CASE("exact joint profile equals sequence enumeration") {
    const auto m = joint_class();
    const auto truth = table("truth");
    ProfileConfig cfg;
    cfg.horizon = 4;
    cfg.reference_symbol = static_cast<int>(*m.outcome_id("the bat", "ANIMAL"));
    const auto p = joint_error_profile(m, truth, cfg);
    const auto want = brute_force(m, truth, cfg.horizon, cfg.reference_symbol, cfg.f);
    REQUIRE(p.steps.size() == cfg.horizon);
    for (std::size_t i = 0; i < cfg.horizon; ++i) {
        CHECK(p.steps[i].s == doctest::Approx(want[i].squared_error).epsilon(1e-10));
        CHECK(p.steps[i].tv2 == doctest::Approx(want[i].tv_squared).epsilon(1e-10));
        CHECK(p.steps[i].delta == doctest::Approx(want[i].overgeneral).epsilon(1e-10));
        CHECK(p.steps[i].lambda == doctest::Approx(want[i].undergeneral).epsilon(1e-10));
    }
    CHECK(p.truth_in_class);
    CHECK(p.reference_symbol == "the bat\tANIMAL");
}

TEST_CASE("joint monte-carlo agrees with exact") {
    const auto m = joint_class();
    const auto truth = table("truth");
    ProfileConfig ex;
    ex.horizon = 15;
    ProfileConfig mc = ex;
    mc.mode = ProfileMode::MonteCarlo;
    mc.trials = 10000;
    mc.seed = 3;
    const auto a = joint_error_profile(m, truth, ex);
    const auto b = joint_error_profile(m, truth, mc);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        if (std::abs(a.steps[i].s - b.steps[i].s) <= b.steps[i].s_ci + 1e-12) ++inside;
        CHECK(std::abs(a.steps[i].s - b.steps[i].s) <= 3.0 * b.steps[i].s_ci + 1e-12);
    }
    CHECK(inside >= 12);
}

TEST_CASE("joint profile parameter checks") {
    const auto m = joint_class();
    ProfileConfig cfg;
    cfg.horizon = 3;
    cfg.reference_symbol = 99;
    CHECK_THROWS_AS(joint_error_profile(m, table("truth"), cfg), ParameterError);
    cfg.reference_symbol = 0;
    cfg.f = 2.0;
    CHECK_THROWS_AS(joint_error_profile(m, table("truth"), cfg), ParameterError);
}

TEST_CASE("sampled pairs follow the table") {
    const auto t = table("truth");
    const auto pairs = sample_pairs(t, 20000, 8);
    std::size_t club = 0;
    for (const auto& p : pairs) club += p.interpretation == "CLUB";
    CHECK(static_cast<double>(club) / 20000.0 == doctest::Approx(0.2).epsilon(0.05));
    CHECK(sample_pairs(t, 50, 1).size() == 50);
}

} // TEST_SUITE
