#include "simplab/learnability.hpp"

#include "simplab/errors.hpp"
#include "simplab/log.hpp"
#include "simplab/mdl.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace simplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRenormTolerance = 1e-9;
// Slack so that ratios like 20 / 1.0000000000000002 do not round up.
constexpr double kCeilSlack = 1e-9;
constexpr double kPointMass = 1.0 - 1e-12;

void require_pfsg(const Grammar& g, const char* which) {
    if (!g.is_pfsg())
        throw ValidationError(std::string("learnability contexts need PFSGs; ") + which + " is a PCFG");
}

SymbolDistribution distribution_at(const Grammar& g, const LearnabilityContext& c, const std::string& state) {
    if (c.kind == LearnabilityContext::Kind::Prefix) return next_symbol_dist(g, c.prefix);
    const auto id = g.source_id(state);
    if (!id) throw ValidationError("unknown state '" + state + "'");
    PfsgForward f(g);
    f.reset_to_state(*id);
    return f.next_distribution();
}

} // namespace

std::string LearnabilityContext::to_string() const {
    std::string out = kind == Kind::Prefix ? "prefix:" : "states: " + g0_state + " " + g1_state;
    if (kind == Kind::Prefix)
        for (const auto& w : prefix) out += " " + w;
    return out;
}

LearnabilityContext parse_context(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string key;
    if (!(in >> key)) throw ParseError("empty context", 1, 1);
    LearnabilityContext c;
    if (key == "prefix:") {
        c.kind = LearnabilityContext::Kind::Prefix;
        std::string w;
        while (in >> w) {
            if (w == kEndToken) throw ParseError("a prefix context cannot contain $end", 1);
            c.prefix.push_back(w);
        }
        return c;
    }
    if (key == "states:") {
        c.kind = LearnabilityContext::Kind::States;
        std::string extra;
        if (!(in >> c.g0_state >> c.g1_state) || (in >> extra))
            throw ParseError("expected 'states: <g0 state> <g1 state>'", 1);
        return c;
    }
    throw ParseError("expected 'prefix: <words>' or 'states: <g0 state> <g1 state>'", 1, 1);
}

double rule_complexity_delta(const Grammar& g0, const Grammar& g1, int param_bits) {
    const double d = grammar_code_length(g1, param_bits) - grammar_code_length(g0, param_bits);
    if (d <= 0.0) log_warning("restricted grammar is not more complex than the overgeneral one (delta = " +
                              std::to_string(d) + " bits)");
    return d;
}

ContextDistributions context_distributions(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context) {
    require_pfsg(g0, "g0");
    require_pfsg(g1, "g1");
    ContextDistributions out;
    out.g0 = distribution_at(g0, context, context.g0_state);
    const auto raw = distribution_at(g1, context, context.g1_state);
    out.g1.assign(out.g0.size(), 0.0);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (static_cast<int>(k) == g1.end_symbol()) {
            out.g1[static_cast<std::size_t>(g0.end_symbol())] = raw[k];
            continue;
        }
        const auto& name = g1.alphabet()[k];
        const auto id = g0.terminal_id(name);
        if (!id) {
            if (raw[k] > 0.0)
                throw ValidationError("not an overgeneral/restricted pair: g1 allows '" + name +
                                      "' in this context but g0 does not know it");
            continue;
        }
        out.g1[static_cast<std::size_t>(*id)] = raw[k];
    }
    return out;
}

double disallowed_mass(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context) {
    const auto d = context_distributions(g0, g1, context);
    double q = 0.0;
    for (std::size_t k = 0; k < d.g0.size(); ++k) {
        if (d.g1[k] > 0.0 && d.g0[k] <= 0.0)
            throw ValidationError("not an overgeneral/restricted pair: g1 allows '" +
                                  std::string(g0.symbol_name(static_cast<int>(k))) +
                                  "' in this context but g0 forbids it");
        if (d.g1[k] <= 0.0) q += d.g0[k];
    }
    return q;
}

bool is_renormalization(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context) {
    const auto d = context_distributions(g0, g1, context);
    const double q = disallowed_mass(g0, g1, context);
    if (q >= 1.0) return false;
    for (std::size_t k = 0; k < d.g0.size(); ++k)
        if (d.g1[k] > 0.0 && std::abs(d.g1[k] - d.g0[k] / (1.0 - q)) > kRenormTolerance) return false;
    return true;
}

std::optional<std::uint64_t> occurrences_for_savings(double delta_bits, double savings_bits) {
    if (!(delta_bits >= 0.0)) throw ParameterError("delta must be nonnegative");
    if (delta_bits == 0.0) return std::uint64_t{0};
    if (!(savings_bits > 0.0)) return std::nullopt;
    return static_cast<std::uint64_t>(std::ceil(delta_bits / savings_bits - kCeilSlack));
}

std::optional<std::uint64_t> occurrences_needed(double delta_bits, double q) {
    if (!(q >= 0.0 && q < 1.0)) throw ParameterError("disallowed mass q must lie in [0, 1)");
    return occurrences_for_savings(delta_bits, -std::log2(1.0 - q));
}

double years_needed(std::optional<std::uint64_t> occurrences, double rate_per_million, double words_per_year) {
    if (!(words_per_year > 0.0)) throw ParameterError("words per year must be positive");
    if (!(rate_per_million >= 0.0)) throw ParameterError("context rate must be nonnegative");
    if (!occurrences) return kInf;
    if (*occurrences == 0) return 0.0;
    if (rate_per_million == 0.0) return kInf;
    return static_cast<double>(*occurrences) / (rate_per_million * (words_per_year / 1e6));
}

std::size_t count_context_occurrences(const Grammar& g1, const LearnabilityContext& context, const Corpus& corpus) {
    std::size_t count = 0;
    if (context.kind == LearnabilityContext::Kind::Prefix) {
        for (const auto& s : corpus) {
            if (s.words.size() < context.prefix.size()) continue;
            if (std::equal(context.prefix.begin(), context.prefix.end(), s.words.begin())) ++count;
        }
        return count;
    }
    require_pfsg(g1, "g1");
    const auto state = g1.source_id(context.g1_state);
    if (!state) throw ValidationError("unknown state '" + context.g1_state + "'");
    PfsgForward f(g1);
    for (const auto& s : corpus) {
        std::vector<int> ids;
        try {
            ids = g1.encode(s.words);
        } catch (const OutOfVocabularyError& e) {
            throw OutOfVocabularyError(e.token(), s.line);
        }
        ids.push_back(g1.end_symbol());
        for (int id : ids) {
            if (f.belief()[static_cast<std::size_t>(*state)] >= kPointMass) ++count;
            if (f.advance(id) == -kInf) {
                f.reset();
                break;
            }
        }
    }
    return count;
}

LearnabilityEstimate learnability_report(const Grammar& g0, const Grammar& g1, const LearnabilityContext& context,
                                         const Corpus& corpus, const LearnabilityConfig& cfg) {
    LearnabilityEstimate e;
    e.words_per_year = cfg.words_per_year;
    if (!(cfg.words_per_year > 0.0)) throw ParameterError("words per year must be positive");
    e.delta_bits = grammar_code_length(g1, cfg.param_bits) - grammar_code_length(g0, cfg.param_bits);
    if (e.delta_bits <= 0.0) {
        e.warnings.push_back("restricted grammar is not more complex than the overgeneral one");
        log_warning(e.warnings.back());
    }
    e.q = disallowed_mass(g0, g1, context);
    if (e.q >= 1.0) throw ValidationError("g1 forbids every continuation g0 allows in this context");

    for (const auto& s : corpus) e.corpus_words += s.words.size();
    e.context_occurrences = count_context_occurrences(g1, context, corpus);

    if (is_renormalization(g0, g1, context)) {
        e.method = SavingsMethod::ClosedForm;
        e.savings_bits = -std::log2(1.0 - e.q);
    } else {
        e.method = SavingsMethod::Empirical;
        if (e.context_occurrences == 0)
            throw ValidationError("g1 is not a renormalization of g0 in this context and the corpus has no "
                                  "context occurrences to measure savings on");
        const double d0 = data_code_length(g0, corpus);
        const double d1 = data_code_length(g1, corpus);
        if (d0 == kInf) throw ValidationError("the corpus has zero probability under g0");
        e.savings_bits = (d0 - d1) / static_cast<double>(e.context_occurrences);
        if (d1 == kInf) {
            e.savings_bits = -kInf;
            e.warnings.push_back("the corpus contains forms the restricted grammar forbids");
        }
    }

    if (cfg.rate_per_million) {
        e.rate_per_million = *cfg.rate_per_million;
    } else {
        if (e.corpus_words == 0) throw ParameterError("context rate is undefined on a corpus with no words");
        e.rate_per_million =
            static_cast<double>(e.context_occurrences) * 1e6 / static_cast<double>(e.corpus_words);
    }

    e.occurrences_needed = occurrences_for_savings(std::max(0.0, e.delta_bits), e.savings_bits);
    e.years_needed = years_needed(e.occurrences_needed, e.rate_per_million, e.words_per_year);
    return e;
}

std::string to_string(SavingsMethod m) { return m == SavingsMethod::ClosedForm ? "closed_form" : "empirical"; }

} // namespace simplab
