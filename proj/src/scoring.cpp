#include "simplab/scoring.hpp"

#include "simplab/errors.hpp"
#include "simplab/log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace simplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> encode_sentence(const Grammar& g, std::span<const std::string> sentence) {
    if (sentence.empty() || sentence.back() != kEndToken)
        throw std::invalid_argument("sentence must end with $end");
    auto ids = g.encode(sentence);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
        if (ids[i] == g.end_symbol()) throw std::invalid_argument("sentence contains $end before its last token");
    return ids;
}

} // namespace

PfsgForward::PfsgForward(const Grammar& g) : grammar_(&g) {
    if (!g.is_pfsg()) throw std::invalid_argument("forward filtering requires a PFSG");
    const std::size_t states = g.sources().size();
    const std::size_t symbols = g.symbol_count();
    auto tables = std::make_shared<Tables>();
    tables->emit.assign(states * symbols, 0.0);
    for (const auto& a : g.arcs())
        tables->emit[static_cast<std::size_t>(a.source) * symbols + static_cast<std::size_t>(a.symbol)] += a.prob;
    tables_ = std::move(tables);
    scratch_.resize(states);
    reset();
}

void PfsgForward::reset() { reset_to_state(grammar_->start()); }

void PfsgForward::reset_to_state(int state) {
    belief_.assign(grammar_->sources().size(), 0.0);
    belief_.at(static_cast<std::size_t>(state)) = 1.0;
    log2_mass_ = 0.0;
    dead_ = false;
}

void PfsgForward::next_distribution(std::span<double> out) const {
    if (dead_) throw ConditioningError("conditioning on a zero-probability prefix");
    const std::size_t symbols = grammar_->symbol_count();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t s = 0; s < belief_.size(); ++s) {
        const double b = belief_[s];
        if (b == 0.0) continue;
        const double* row = &tables_->emit[s * symbols];
        for (std::size_t k = 0; k < symbols; ++k) out[k] += b * row[k];
    }
    // Belief is normalized, so this only removes rounding drift.
    double total = 0.0;
    for (double v : out) total += v;
    for (double& v : out) v /= total;
}

SymbolDistribution PfsgForward::next_distribution() const {
    SymbolDistribution out(grammar_->symbol_count());
    next_distribution(out);
    return out;
}

double PfsgForward::probability_of(int symbol) const {
    if (dead_) throw ConditioningError("conditioning on a zero-probability prefix");
    const std::size_t symbols = grammar_->symbol_count();
    double p = 0.0;
    for (std::size_t s = 0; s < belief_.size(); ++s) p += belief_[s] * tables_->emit[s * symbols + static_cast<std::size_t>(symbol)];
    return p;
}

double PfsgForward::advance(int symbol) {
    if (dead_) return -kInf;
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    for (std::size_t s = 0; s < belief_.size(); ++s) {
        const double b = belief_[s];
        if (b == 0.0) continue;
        for (const auto& a : grammar_->arcs_from(static_cast<int>(s)))
            if (a.symbol == symbol) scratch_[static_cast<std::size_t>(a.target)] += b * a.prob;
    }
    double total = 0.0;
    for (double v : scratch_) total += v;
    if (total <= 0.0) {
        dead_ = true;
        log2_mass_ = -kInf;
        return -kInf;
    }
    for (std::size_t s = 0; s < belief_.size(); ++s) belief_[s] = scratch_[s] / total;
    const double lp = std::log2(total);
    log2_mass_ += lp;
    return lp;
}

double pcfg_inside_probability(const Grammar& g, std::span<const int> words) {
    if (g.is_pfsg()) throw std::invalid_argument("inside algorithm requires a PCFG");
    const std::size_t n = words.size();
    const std::size_t nts = g.sources().size();
    if (n == 0) return 0.0;

    // Unary nonterminal chains are closed in one step: inside = (I - U)^-1 * base.
    Eigen::MatrixXd unary = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nts), static_cast<Eigen::Index>(nts));
    std::vector<const PcfgRule*> lexical;
    std::vector<const PcfgRule*> longer;
    for (const auto& r : g.rules()) {
        if (r.rhs.size() == 1 && r.rhs[0].nonterminal)
            unary(r.lhs, r.rhs[0].id) += r.prob;
        else if (r.rhs.size() == 1)
            lexical.push_back(&r);
        else
            longer.push_back(&r);
    }
    const Eigen::MatrixXd closure =
        (Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nts), static_cast<Eigen::Index>(nts)) - unary).inverse();

    auto span_index = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };
    std::vector<Eigen::VectorXd> chart((n + 1) * (n + 1));

    // partial[r][m-1][(i,j)]: probability that the first m rhs symbols of
    // rule r derive words[i, j).
    std::vector<std::vector<std::vector<double>>> partial(longer.size());
    for (std::size_t r = 0; r < longer.size(); ++r)
        partial[r].assign(longer[r]->rhs.size() - 1, std::vector<double>((n + 1) * (n + 1), 0.0));

    auto sym_inside = [&](const PcfgSymbol& s, std::size_t i, std::size_t j) -> double {
        if (!s.nonterminal) return (j == i + 1 && words[i] == s.id) ? 1.0 : 0.0;
        const auto& cell = chart[span_index(i, j)];
        return cell.size() ? cell(s.id) : 0.0;
    };

    for (std::size_t len = 1; len <= n; ++len) {
        for (std::size_t i = 0; i + len <= n; ++i) {
            const std::size_t j = i + len;
            Eigen::VectorXd base = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nts));
            if (len == 1)
                for (const auto* r : lexical)
                    if (r->rhs[0].id == words[i]) base(r->lhs) += r->prob;
            for (std::size_t ri = 0; ri < longer.size(); ++ri) {
                const auto& r = *longer[ri];
                const std::size_t k = r.rhs.size();
                if (k > len) continue;
                double sum = 0.0;
                for (std::size_t l = i + k - 1; l < j; ++l) sum += partial[ri][k - 2][span_index(i, l)] * sym_inside(r.rhs[k - 1], l, j);
                base(r.lhs) += r.prob * sum;
            }
            chart[span_index(i, j)] = closure * base;

            for (std::size_t ri = 0; ri < longer.size(); ++ri) {
                const auto& r = *longer[ri];
                const std::size_t k = r.rhs.size();
                for (std::size_t m = 1; m < k && m <= len; ++m) {
                    double v = 0.0;
                    if (m == 1) {
                        v = sym_inside(r.rhs[0], i, j);
                    } else {
                        for (std::size_t l = i + m - 1; l < j; ++l)
                            v += partial[ri][m - 2][span_index(i, l)] * sym_inside(r.rhs[m - 1], l, j);
                    }
                    partial[ri][m - 1][span_index(i, j)] = v;
                }
            }
        }
    }
    return std::max(0.0, chart[span_index(0, n)](g.start()));
}

double sentence_log_loss(const Grammar& g, std::span<const std::string> sentence) {
    const auto ids = encode_sentence(g, sentence);
    if (g.is_pfsg()) {
        PfsgForward fwd(g);
        double bits = 0.0;
        for (int id : ids) {
            const double lp = fwd.advance(id);
            if (lp == -kInf) return kInf;
            bits -= lp;
        }
        return bits;
    }
    const double p = pcfg_inside_probability(g, std::span<const int>(ids).first(ids.size() - 1));
    if (p <= 0.0) return kInf;
    return -std::log2(p);
}

SymbolDistribution next_symbol_dist(const Grammar& g, std::span<const std::string> prefix) {
    if (!g.is_pfsg()) throw ValidationError("next-symbol distributions require a PFSG");
    PfsgForward fwd(g);
    for (int id : g.encode(prefix))
        if (fwd.advance(id) == -kInf) throw ConditioningError("prefix has zero probability under the grammar");
    return fwd.next_distribution();
}

bool is_grammatical(const Grammar& g, std::span<const std::string> sentence) {
    try {
        return sentence_log_loss(g, sentence) < kInf;
    } catch (const OutOfVocabularyError& e) {
        log_warning(e.what());
        return false;
    }
}

} // namespace simplab
