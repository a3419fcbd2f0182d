#pragma once

#include "simplab/grammar.hpp"
#include "simplab/scoring.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simplab {

struct Hypothesis {
    std::string name;
    Grammar grammar;
    double description_bits = 0.0; // L(h) under the grammar encoding scheme
    double prior_weight = 0.0;     // normalized
};

// Input to build_class: a grammar plus an optional explicit prior.
struct HypothesisSpec {
    std::string name;
    Grammar grammar;
    std::optional<double> prior;
};

// Normalizes 2^-bits over the class.
std::vector<double> normalize_priors(std::span<const double> description_bits);

// Finite Bayesian mixture over PFSG hypotheses sharing one alphabet; it
// stands in for the universal distribution. Zero-likelihood hypotheses keep
// their slot with -infinity evidence.
class MixturePredictor {
public:
    explicit MixturePredictor(std::vector<Hypothesis> hypotheses);

    const std::vector<std::string>& alphabet() const { return hypotheses_->front().grammar.alphabet(); }
    std::size_t symbol_count() const { return alphabet().size() + 1; }
    int end_symbol() const { return static_cast<int>(alphabet().size()); }
    const std::vector<Hypothesis>& hypotheses() const { return *hypotheses_; }
    std::size_t size() const { return hypotheses_->size(); }
    const std::vector<int>& observed() const { return observed_; }

    // Symbol id in the class alphabet ("$end" included); throws on unknown.
    int symbol_id(std::string_view token) const;

    void update(int symbol);
    void update(std::string_view token) { update(symbol_id(token)); }

    // Posterior-weighted next-symbol distribution; throws ClassExhaustedError
    // when every hypothesis has zero likelihood.
    SymbolDistribution predict() const;
    void predict(std::span<double> out) const;

    std::vector<double> posterior() const;
    bool exhausted() const;

    // log2 P_h(observed) for each hypothesis.
    const std::vector<double>& log2_evidence() const { return log2_evidence_; }
    // log2 of the mixture probability of the observed sequence.
    double log2_marginal() const;

    // Sum of 2^-L(h) over the class; normalized priors dominate 2^-L(h)
    // exactly when this is at most 1.
    double kraft_sum() const;
    bool priors_overridden() const { return priors_overridden_; }

    // Index of a hypothesis structurally equal to `g`, if any.
    std::optional<std::size_t> find(const Grammar& g) const;

private:
    friend MixturePredictor build_class(std::vector<HypothesisSpec> specs, int param_bits);

    // Shared and immutable so copies of a predictor keep the filters' grammars alive.
    std::shared_ptr<const std::vector<Hypothesis>> hypotheses_;
    std::vector<PfsgForward> filters_;
    std::vector<double> log2_prior_;
    std::vector<double> log2_evidence_;
    std::vector<int> observed_;
    bool priors_overridden_ = false;
    mutable std::vector<double> scratch_;
};

// Builds a class with priors from grammar_code_length (or the given priors,
// which must then be present for every hypothesis and sum to 1 within 1e-9).
// All grammars are renumbered to the first hypothesis' alphabet order.
// Throws ValidationError on an empty class, non-PFSG members, alphabet
// mismatch or duplicate grammars.
MixturePredictor build_class(std::vector<HypothesisSpec> specs, int param_bits = 8);

// Class manifest: one `hypothesis: <path> [prior=<decimal>]` per line; '#'
// comments; relative paths resolve against the manifest's directory.
std::vector<HypothesisSpec> load_manifest(const std::string& path);

// lambda(y | x) / mu(y | x) where the mixture `m` has already observed x and
// `truth` is filtered to the same x. Throws ConditioningError when
// mu(y | x) = 0.
double production_ratio(const MixturePredictor& m, const PfsgForward& truth, std::span<const int> continuation);
double production_ratio(const MixturePredictor& m, const Grammar& truth, std::span<const std::string> prefix,
                        std::span<const std::string> continuation);

// Autoregressive sample of `length` tokens from the mixture's predictive
// distribution, updating a copy of `m` as it goes.
TokenSequence sample_continuation(const MixturePredictor& m, std::size_t length, std::uint64_t seed);

} // namespace simplab
