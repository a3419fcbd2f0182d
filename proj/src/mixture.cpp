#include "simplab/mixture.hpp"

#include "simplab/errors.hpp"
#include "simplab/mdl.hpp"
#include "simplab/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace simplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPriorSumTolerance = 1e-9;

// log2(sum 2^x) over finite entries; -inf if none.
double log2_sum_exp2(std::span<const double> xs) {
    double hi = -kInf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == -kInf) return -kInf;
    double acc = 0.0;
    for (double x : xs)
        if (x != -kInf) acc += std::exp2(x - hi);
    return hi + std::log2(acc);
}

} // namespace

std::vector<double> normalize_priors(std::span<const double> description_bits) {
    std::vector<double> neg(description_bits.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -description_bits[i];
    const double z = log2_sum_exp2(neg);
    std::vector<double> out(neg.size());
    for (std::size_t i = 0; i < neg.size(); ++i) out[i] = std::exp2(neg[i] - z);
    return out;
}

MixturePredictor::MixturePredictor(std::vector<Hypothesis> hypotheses) {
    if (hypotheses.empty()) throw ValidationError("empty hypothesis class");
    double total = 0.0;
    for (const auto& h : hypotheses) {
        if (!h.grammar.is_pfsg()) throw ValidationError("hypothesis '" + h.name + "' is not a PFSG");
        if (!(h.prior_weight > 0.0 && h.prior_weight <= 1.0))
            throw ValidationError("hypothesis '" + h.name + "' has a prior outside (0, 1]");
        if (h.grammar.alphabet() != hypotheses.front().grammar.alphabet())
            throw ValidationError("alphabet mismatch between '" + hypotheses.front().name + "' and '" + h.name + "'");
        total += h.prior_weight;
    }
    if (std::abs(total - 1.0) > kPriorSumTolerance) throw ValidationError("prior weights do not sum to 1");

    hypotheses_ = std::make_shared<const std::vector<Hypothesis>>(std::move(hypotheses));
    for (const auto& h : *hypotheses_) {
        filters_.emplace_back(h.grammar);
        log2_prior_.push_back(std::log2(h.prior_weight));
    }
    log2_evidence_.assign(hypotheses_->size(), 0.0);
}

int MixturePredictor::symbol_id(std::string_view token) const {
    if (token == kEndToken) return end_symbol();
    const auto& a = alphabet();
    auto it = std::find(a.begin(), a.end(), token);
    if (it == a.end()) throw OutOfVocabularyError(std::string(token));
    return static_cast<int>(it - a.begin());
}

void MixturePredictor::update(int symbol) {
    if (symbol < 0 || symbol > end_symbol()) throw std::out_of_range("symbol id outside the class alphabet");
    for (std::size_t h = 0; h < filters_.size(); ++h) {
        if (log2_evidence_[h] == -kInf) continue;
        log2_evidence_[h] += filters_[h].advance(symbol);
    }
    observed_.push_back(symbol);
}

std::vector<double> MixturePredictor::posterior() const {
    std::vector<double> joint(log2_prior_.size());
    for (std::size_t h = 0; h < joint.size(); ++h) joint[h] = log2_prior_[h] + log2_evidence_[h];
    const double z = log2_sum_exp2(joint);
    if (z == -kInf) throw ClassExhaustedError("class exhausted: every hypothesis assigns zero probability");
    for (double& v : joint) v = v == -kInf ? 0.0 : std::exp2(v - z);
    return joint;
}

bool MixturePredictor::exhausted() const {
    return std::all_of(log2_evidence_.begin(), log2_evidence_.end(), [](double e) { return e == -kInf; });
}

void MixturePredictor::predict(std::span<double> out) const {
    const auto w = posterior();
    std::fill(out.begin(), out.end(), 0.0);
    scratch_.resize(symbol_count());
    for (std::size_t h = 0; h < w.size(); ++h) {
        if (w[h] == 0.0) continue;
        filters_[h].next_distribution(scratch_);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w[h] * scratch_[k];
    }
}

SymbolDistribution MixturePredictor::predict() const {
    SymbolDistribution out(symbol_count());
    predict(out);
    return out;
}

double MixturePredictor::log2_marginal() const {
    std::vector<double> joint(log2_prior_.size());
    for (std::size_t h = 0; h < joint.size(); ++h) joint[h] = log2_prior_[h] + log2_evidence_[h];
    return log2_sum_exp2(joint);
}

double MixturePredictor::kraft_sum() const {
    double total = 0.0;
    for (const auto& h : *hypotheses_) total += std::exp2(-h.description_bits);
    return total;
}

std::optional<std::size_t> MixturePredictor::find(const Grammar& g) const {
    if (g.alphabet().size() != alphabet().size()) return std::nullopt;
    std::optional<Grammar> reordered;
    try {
        reordered = g.with_alphabet_order(alphabet());
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    for (std::size_t h = 0; h < hypotheses_->size(); ++h)
        if ((*hypotheses_)[h].grammar == *reordered) return h;
    return std::nullopt;
}

MixturePredictor build_class(std::vector<HypothesisSpec> specs, int param_bits) {
    if (specs.empty()) throw ValidationError("empty hypothesis class");
    const auto order = specs.front().grammar.alphabet();
    const auto given = std::count_if(specs.begin(), specs.end(), [](const auto& s) { return s.prior.has_value(); });
    if (given != 0 && static_cast<std::size_t>(given) != specs.size())
        throw ValidationError("either every hypothesis or none must carry a prior");

    std::vector<Hypothesis> hyps;
    for (auto& s : specs) {
        if (!s.grammar.is_pfsg()) throw ValidationError("hypothesis '" + s.name + "' is not a PFSG");
        Grammar g = [&] {
            try {
                return s.grammar.with_alphabet_order(order);
            } catch (const ValidationError& e) {
                throw ValidationError("hypothesis '" + s.name + "': " + e.what());
            }
        }();
        for (const auto& h : hyps)
            if (h.grammar == g) throw ValidationError("duplicate grammar: '" + s.name + "' equals '" + h.name + "'");
        Hypothesis h{s.name, std::move(g), 0.0, 0.0};
        h.description_bits = grammar_code_length(h.grammar, param_bits);
        h.prior_weight = s.prior.value_or(0.0);
        hyps.push_back(std::move(h));
    }

    const bool overridden = given != 0;
    if (overridden) {
        double total = 0.0;
        for (const auto& h : hyps) total += h.prior_weight;
        if (std::abs(total - 1.0) > kPriorSumTolerance)
            throw ValidationError("manifest priors sum to " + std::to_string(total) + ", not 1");
    } else {
        std::vector<double> bits;
        for (const auto& h : hyps) bits.push_back(h.description_bits);
        const auto w = normalize_priors(bits);
        for (std::size_t i = 0; i < hyps.size(); ++i) hyps[i].prior_weight = w[i];
    }
    MixturePredictor m(std::move(hyps));
    m.priors_overridden_ = overridden;
    return m;
}

std::vector<HypothesisSpec> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open class manifest '" + path + "'");
    const auto dir = std::filesystem::path(path).parent_path();
    std::vector<HypothesisSpec> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string key;
        if (!(words >> key)) continue;
        if (key != "hypothesis:")
            throw ParseError("expected 'hypothesis: <path> [prior=<p>]'", line_no, 1).in_source(path);
        std::string file;
        if (!(words >> file)) throw ParseError("missing grammar path", line_no).in_source(path);
        std::optional<double> prior;
        std::string opt;
        if (words >> opt) {
            if (opt.rfind("prior=", 0) != 0)
                throw ParseError("unknown option '" + opt + "'", line_no).in_source(path);
            double p = 0.0;
            const char* first = opt.data() + 6;
            const char* last = opt.data() + opt.size();
            auto [ptr, ec] = std::from_chars(first, last, p);
            if (ec != std::errc() || ptr != last || !(p > 0.0 && p <= 1.0))
                throw ParseError("invalid prior '" + opt.substr(6) + "'", line_no).in_source(path);
            prior = p;
        }
        if (words >> opt) throw ParseError("trailing text '" + opt + "'", line_no).in_source(path);
        const auto resolved = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : dir / file;
        out.push_back({std::filesystem::path(file).stem().string(), load_grammar(resolved.string()), prior});
    }
    return out;
}

double production_ratio(const MixturePredictor& m, const PfsgForward& truth, std::span<const int> continuation) {
    MixturePredictor learner = m;
    PfsgForward mu = truth;
    double log2_learner = 0.0;
    double log2_truth = 0.0;
    SymbolDistribution dist(learner.symbol_count());
    for (int k : continuation) {
        const double pt = mu.dead() ? 0.0 : mu.probability_of(k);
        if (pt <= 0.0) throw ConditioningError("production ratio undefined: the continuation has zero true probability");
        log2_truth += std::log2(pt);
        mu.advance(k);
        learner.predict(dist);
        log2_learner += dist[static_cast<std::size_t>(k)] > 0.0 ? std::log2(dist[static_cast<std::size_t>(k)]) : -kInf;
        learner.update(k);
    }
    return std::exp2(log2_learner - log2_truth);
}

double production_ratio(const MixturePredictor& m, const Grammar& truth, std::span<const std::string> prefix,
                        std::span<const std::string> continuation) {
    const Grammar g = truth.with_alphabet_order(m.alphabet());
    MixturePredictor learner = m;
    PfsgForward mu(g);
    for (const auto& t : prefix) {
        const int k = learner.symbol_id(t);
        if (mu.advance(k) == -kInf) throw ConditioningError("prefix has zero true probability");
        learner.update(k);
    }
    std::vector<int> y;
    for (const auto& t : continuation) y.push_back(learner.symbol_id(t));
    return production_ratio(learner, mu, y);
}

TokenSequence sample_continuation(const MixturePredictor& m, std::size_t length, std::uint64_t seed) {
    MixturePredictor learner = m;
    Rng rng(seed);
    TokenSequence out;
    SymbolDistribution dist(learner.symbol_count());
    for (std::size_t i = 0; i < length; ++i) {
        learner.predict(dist);
        const int k = static_cast<int>(rng.categorical(dist));
        out.emplace_back(k == learner.end_symbol() ? std::string(kEndToken) : learner.alphabet()[static_cast<std::size_t>(k)]);
        learner.update(k);
    }
    return out;
}

} // namespace simplab
