#pragma once

#include "simplab/profile.hpp"

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simplab {

struct FormMeaningPair {
    std::vector<std::string> sentence;
    std::string interpretation;
    std::size_t line = 0;
};

// One interpretation label per line; blank and '#' lines skipped.
std::vector<std::string> parse_inventory(std::istream& in);

// `sentence<TAB>interpretation` per line. Repeated lines are kept.
std::vector<FormMeaningPair> parse_pairs(std::istream& in, std::span<const std::string> inventory);

struct JointCell {
    std::string sentence; // words joined by single spaces
    std::string interpretation;
    double prob = 0.0;
};

// A joint distribution over (sentence, interpretation) given by its
// positive cells. Sentences and interpretations may map many-to-many.
struct JointTable {
    std::string name;
    std::vector<JointCell> cells;
};

// `sentence<TAB>interpretation<TAB>probability` per line; cells must be
// distinct, positive and sum to 1 within 1e-9.
JointTable parse_joint_table(std::istream& in, std::string name, std::span<const std::string> inventory);

// Encoding cost of a table: ceil(log2(S + 1)) + ceil(log2(I + 1)) header
// bits for its sentence and interpretation counts, plus `param_bits` per
// free cell probability (the last positive cell is implied).
double table_code_length(const JointTable& t, std::size_t interpretation_count, int param_bits = 8);

// Bayesian mixture over joint tables for iid form-meaning pairs. The
// posterior depends on the observations only through per-outcome counts.
class JointMixture {
public:
    JointMixture(std::vector<JointTable> tables, std::vector<std::string> inventory,
                 std::optional<std::vector<double>> priors = std::nullopt, int param_bits = 8);

    const std::vector<std::string>& sentences() const { return sentences_; }
    const std::vector<std::string>& interpretations() const { return interpretations_; }
    std::size_t outcome_count() const { return sentences_.size() * interpretations_.size(); }
    std::size_t size() const { return tables_.size(); }
    const std::vector<JointTable>& tables() const { return tables_; }
    const std::vector<double>& description_bits() const { return description_bits_; }
    const std::vector<double>& prior_weights() const { return prior_; }

    std::optional<std::size_t> sentence_index(std::string_view sentence) const;
    std::optional<std::size_t> interpretation_index(std::string_view label) const;
    std::optional<std::size_t> outcome_id(std::string_view sentence, std::string_view label) const;

    // Dense probabilities of `table` over the outcome space.
    std::vector<double> dense(const JointTable& table) const;
    const std::vector<double>& dense(std::size_t hypothesis) const { return dense_[hypothesis]; }

    // Throws ClassExhaustedError if no hypothesis supports the observations
    // afterwards; the mixture is left unchanged in that case.
    void observe(std::size_t outcome);
    void observe(const FormMeaningPair& pair);

    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::vector<double> log2_evidence() const;
    std::vector<double> posterior() const;
    // Predictive probability of every outcome, indexed sentence * I + interpretation.
    std::vector<double> predictive_joint() const;

    // Normalized slices of the predictive joint; throw ConditioningError when
    // the conditioning event has zero predictive probability.
    std::vector<double> conditional_given_sentence(std::string_view sentence) const;
    std::vector<double> conditional_given_interpretation(std::string_view label) const;

    std::optional<std::size_t> find(const JointTable& t) const;

private:
    std::vector<JointTable> tables_;
    std::vector<std::string> sentences_;
    std::vector<std::string> interpretations_;
    std::vector<std::vector<double>> dense_;
    std::vector<double> description_bits_;
    std::vector<double> prior_;
    std::vector<std::uint64_t> counts_;
    bool priors_overridden_ = false;

    friend ConvergenceProfile joint_error_profile(const JointMixture&, const JointTable&, const ProfileConfig&);
};

std::vector<std::string> load_inventory(const std::string& path);
std::vector<FormMeaningPair> load_pairs(const std::string& path, std::span<const std::string> inventory);
// The table is named after the file stem.
JointTable load_joint_table(const std::string& path, std::span<const std::string> inventory);

// Table class manifest, same syntax as a grammar class manifest:
// `hypothesis: <table path> [prior=<decimal>]` per line.
JointMixture load_joint_class(const std::string& manifest, std::vector<std::string> inventory, int param_bits = 8);

// Sequentially conditions a copy of `prior` on `pairs`.
JointMixture learn_joint(const JointMixture& prior, std::span<const FormMeaningPair> pairs);

// Convergence profile with pair outcomes as the symbols: the reference
// symbol indexes the outcome space. Exact mode enumerates outcome count
// vectors (pairs are iid, so counts determine the posterior).
ConvergenceProfile joint_error_profile(const JointMixture& prior, const JointTable& truth, const ProfileConfig& cfg);

// Draws `n` iid pairs from a table.
std::vector<FormMeaningPair> sample_pairs(const JointTable& table, std::size_t n, std::uint64_t seed);

} // namespace simplab
