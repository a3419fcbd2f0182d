#include "simplab/profile.hpp"

#include "simplab/errors.hpp"
#include "simplab/mdl.hpp"
#include "simplab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace simplab {

namespace {

constexpr double kCi95 = 1.959963984540054;

StepMetrics& operator+=(StepMetrics& a, const StepMetrics& b) {
    a.squared_error += b.squared_error;
    a.tv_squared += b.tv_squared;
    a.overgeneral += b.overgeneral;
    a.undergeneral += b.undergeneral;
    return a;
}

StepMetrics scaled(const StepMetrics& m, double w) {
    return {m.squared_error * w, m.tv_squared * w, m.overgeneral * w, m.undergeneral * w};
}

struct ExactWalk {
    const ProfileConfig& cfg;
    std::vector<StepMetrics> sums;
    std::vector<MixturePredictor> learners; // one frame per depth
    std::vector<PfsgForward> truths;
    std::vector<SymbolDistribution> xi, mu;

    void visit(std::size_t depth, double weight) {
        auto& m = learners[depth];
        auto& t = truths[depth];
        m.predict(xi[depth]);
        t.next_distribution(mu[depth]);
        sums[depth] += scaled(step_metrics(xi[depth], mu[depth], cfg.reference_symbol, cfg.f), weight);
        if (depth + 1 >= cfg.horizon) return;
        for (std::size_t k = 0; k < mu[depth].size(); ++k) {
            const double p = mu[depth][k];
            if (p <= 0.0) continue;
            learners[depth + 1] = m;
            truths[depth + 1] = t;
            learners[depth + 1].update(static_cast<int>(k));
            truths[depth + 1].advance(static_cast<int>(k));
            visit(depth + 1, weight * p);
        }
    }
};

std::uint64_t count_from(PfsgForward& t, std::size_t remaining, std::uint64_t cap, std::uint64_t found) {
    if (remaining == 0) return found + 1;
    const auto dist = t.next_distribution();
    for (std::size_t k = 0; k < dist.size() && found <= cap; ++k) {
        if (dist[k] <= 0.0) continue;
        PfsgForward child = t;
        child.advance(static_cast<int>(k));
        found = count_from(child, remaining - 1, cap, found);
    }
    return found;
}

double truth_code_length(const MixturePredictor& prior, const Grammar& truth, int param_bits, bool& in_class) {
    const auto idx = prior.find(truth);
    in_class = idx.has_value();
    if (!idx) return grammar_code_length(truth, param_bits);
    const auto& h = prior.hypotheses()[*idx];
    // With explicit priors (or a class violating Kraft) the weight no longer
    // dominates 2^-L, so the bound is stated in terms of the weight itself.
    if (prior.priors_overridden() || prior.kraft_sum() > 1.0) return -std::log2(h.prior_weight);
    return h.description_bits;
}

} // namespace

StepMetrics step_metrics(std::span<const double> learner, std::span<const double> truth, int reference_symbol,
                         double f) {
    StepMetrics m;
    const auto a0 = static_cast<std::size_t>(reference_symbol);
    const double d0 = learner[a0] - truth[a0];
    m.squared_error = d0 * d0;
    double l1 = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        l1 += std::abs(learner[k] - truth[k]);
        if (truth[k] == 0.0)
            m.overgeneral += learner[k];
        else if (f * learner[k] <= truth[k])
            m.undergeneral += truth[k];
    }
    m.tv_squared = 0.25 * l1 * l1;
    return m;
}

void check_underestimation_factor(double f) {
    if (!(f > std::numbers::e))
        throw ParameterError("the undergeneralization bound requires f > e (2.71828...); got f = " +
                             std::to_string(f));
}

ProfileBounds make_bounds(double truth_bits, double f) {
    ProfileBounds b;
    b.truth_bits = truth_bits;
    b.prediction = std::numbers::ln2 / 2.0 * truth_bits;
    b.overgen = truth_bits / std::numbers::ln2;
    b.undergen = truth_bits / std::log2(f / std::numbers::e);
    return b;
}

void finish_steps(ConvergenceProfile& profile, std::span<const StepMetrics> means, std::span<const StepMetrics> ci) {
    profile.steps.clear();
    double cs = 0.0, cd = 0.0, cl = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        ProfileStep st;
        st.n = i + 1;
        st.s = means[i].squared_error;
        st.tv2 = means[i].tv_squared;
        st.delta = means[i].overgeneral;
        st.lambda = means[i].undergeneral;
        cs += st.s;
        cd += st.delta;
        cl += st.lambda;
        st.cum_s = cs;
        st.cum_delta = cd;
        st.cum_lambda = cl;
        if (!ci.empty()) {
            st.s_ci = ci[i].squared_error;
            st.tv2_ci = ci[i].tv_squared;
            st.delta_ci = ci[i].overgeneral;
            st.lambda_ci = ci[i].undergeneral;
        }
        profile.steps.push_back(st);
    }
}

std::uint64_t count_prefixes(const Grammar& truth, std::size_t length, std::uint64_t cap) {
    PfsgForward t(truth);
    return count_from(t, length, cap, 0);
}

ConvergenceProfile convergence_profile(const MixturePredictor& prior, const Grammar& truth_in,
                                       const ProfileConfig& cfg) {
    check_underestimation_factor(cfg.f);
    if (!truth_in.is_pfsg()) throw ValidationError("the true generator must be a PFSG");
    if (cfg.reference_symbol < 0 || static_cast<std::size_t>(cfg.reference_symbol) >= prior.symbol_count())
        throw ParameterError("reference symbol outside the alphabet");
    const Grammar truth = truth_in.with_alphabet_order(prior.alphabet());

    ConvergenceProfile profile;
    profile.mode = cfg.mode;
    profile.seed = cfg.seed;
    profile.f = cfg.f;
    profile.reference_symbol = cfg.reference_symbol == prior.end_symbol()
                                   ? std::string(kEndToken)
                                   : prior.alphabet()[static_cast<std::size_t>(cfg.reference_symbol)];
    profile.bounds = make_bounds(truth_code_length(prior, truth, cfg.param_bits, profile.truth_in_class), cfg.f);
    if (cfg.horizon == 0) return profile;

    const std::size_t symbols = prior.symbol_count();
    if (cfg.mode == ProfileMode::Exact) {
        const auto leaves = count_prefixes(truth, cfg.horizon - 1, cfg.leaf_budget);
        if (leaves > cfg.leaf_budget)
            throw BudgetExceededError("exact enumeration needs more than " + std::to_string(cfg.leaf_budget) +
                                      " prefixes at horizon " + std::to_string(cfg.horizon) +
                                      "; use monte-carlo mode");
        ExactWalk walk{cfg, std::vector<StepMetrics>(cfg.horizon), std::vector<MixturePredictor>(cfg.horizon, prior),
                       std::vector<PfsgForward>(cfg.horizon, PfsgForward(truth)),
                       std::vector<SymbolDistribution>(cfg.horizon, SymbolDistribution(symbols)),
                       std::vector<SymbolDistribution>(cfg.horizon, SymbolDistribution(symbols))};
        walk.visit(0, 1.0);
        finish_steps(profile, walk.sums, {});
        return profile;
    }

    if (cfg.trials == 0) throw ParameterError("monte-carlo mode needs at least one trial");
    profile.trials = cfg.trials;
    // trials x horizon metrics, reduced in trial order afterwards.
    std::vector<StepMetrics> per_trial(cfg.trials * cfg.horizon);
    auto run_trials = [&](std::size_t begin, std::size_t end) {
        SymbolDistribution xi(symbols), mu(symbols);
        for (std::size_t trial = begin; trial < end; ++trial) {
            Rng rng(Rng::derive(cfg.seed, trial));
            MixturePredictor m = prior;
            PfsgForward t(truth);
            for (std::size_t d = 0; d < cfg.horizon; ++d) {
                m.predict(xi);
                t.next_distribution(mu);
                per_trial[trial * cfg.horizon + d] = step_metrics(xi, mu, cfg.reference_symbol, cfg.f);
                if (d + 1 == cfg.horizon) break;
                const int k = static_cast<int>(rng.categorical(mu));
                m.update(k);
                t.advance(k);
            }
        }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, cfg.trials / 64));
    if (workers == 1) {
        run_trials(0, cfg.trials);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (cfg.trials + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(cfg.trials, b + chunk);
            if (b < e) pool.emplace_back(run_trials, b, e);
        }
    }

    std::vector<StepMetrics> mean(cfg.horizon), ci(cfg.horizon);
    const double n = static_cast<double>(cfg.trials);
    for (std::size_t d = 0; d < cfg.horizon; ++d) {
        StepMetrics sum, sq;
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            const auto& x = per_trial[trial * cfg.horizon + d];
            sum += x;
            sq += StepMetrics{x.squared_error * x.squared_error, x.tv_squared * x.tv_squared,
                              x.overgeneral * x.overgeneral, x.undergeneral * x.undergeneral};
        }
        mean[d] = scaled(sum, 1.0 / n);
        auto half_width = [&](double s, double s2) {
            if (cfg.trials < 2) return 0.0;
            const double var = std::max(0.0, (s2 - s * s / n) / (n - 1.0));
            return kCi95 * std::sqrt(var / n);
        };
        ci[d] = {half_width(sum.squared_error, sq.squared_error), half_width(sum.tv_squared, sq.tv_squared),
                 half_width(sum.overgeneral, sq.overgeneral), half_width(sum.undergeneral, sq.undergeneral)};
    }
    finish_steps(profile, mean, ci);
    return profile;
}

ConvergenceProfile expected_error_profile(const MixturePredictor& prior, const Grammar& truth,
                                          const ProfileConfig& cfg) {
    return convergence_profile(prior, truth, cfg);
}

ConvergenceProfile overgen_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg) {
    return convergence_profile(prior, truth, cfg);
}

ConvergenceProfile undergen_profile(const MixturePredictor& prior, const Grammar& truth, const ProfileConfig& cfg) {
    return convergence_profile(prior, truth, cfg);
}

double instantaneous_error(const MixturePredictor& prior, const Grammar& truth_in, std::span<const std::string> prefix,
                           int reference_symbol) {
    const Grammar truth = truth_in.with_alphabet_order(prior.alphabet());
    MixturePredictor m = prior;
    PfsgForward t(truth);
    for (const auto& tok : prefix) {
        const int k = m.symbol_id(tok);
        if (t.advance(k) == -std::numeric_limits<double>::infinity())
            throw ConditioningError("prefix has zero probability under the true generator");
        m.update(k);
    }
    const auto xi = m.predict();
    const auto mu = t.next_distribution();
    const auto a0 = static_cast<std::size_t>(reference_symbol);
    return (xi.at(a0) - mu.at(a0)) * (xi.at(a0) - mu.at(a0));
}

} // namespace simplab
