#include "simplab/sampling.hpp"

#include <vector>

namespace simplab {

std::size_t Rng::categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;
}

std::uint64_t Rng::derive(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

void generate_pfsg(const Grammar& g, Rng& rng, std::size_t max_tokens, std::size_t max_sentences,
                   GeneratedSequence& out) {
    int state = g.start();
    std::size_t sentences = 0;
    std::vector<double> probs;
    while (out.tokens.size() < max_tokens && sentences < max_sentences) {
        const auto arcs = g.arcs_from(state);
        probs.clear();
        for (const auto& a : arcs) probs.push_back(a.prob);
        const auto& arc = arcs[rng.categorical(probs)];
        out.tokens.emplace_back(g.symbol_name(arc.symbol));
        if (arc.symbol == g.end_symbol()) ++sentences;
        state = arc.target;
    }
}

void generate_pcfg(const Grammar& g, Rng& rng, std::size_t max_tokens, std::size_t max_sentences,
                   GeneratedSequence& out) {
    std::vector<std::vector<const PcfgRule*>> by_lhs(g.sources().size());
    for (const auto& r : g.rules()) by_lhs[static_cast<std::size_t>(r.lhs)].push_back(&r);
    std::vector<double> probs;
    std::vector<PcfgSymbol> stack;
    std::size_t sentences = 0;
    while (out.tokens.size() < max_tokens && sentences < max_sentences) {
        // Leftmost expansion; terminals are emitted as soon as they surface.
        stack.assign(1, PcfgSymbol{true, g.start()});
        while (!stack.empty() && out.tokens.size() < max_tokens) {
            const PcfgSymbol top = stack.back();
            stack.pop_back();
            if (!top.nonterminal) {
                out.tokens.emplace_back(g.symbol_name(top.id));
                continue;
            }
            const auto& rules = by_lhs[static_cast<std::size_t>(top.id)];
            probs.clear();
            for (const auto* r : rules) probs.push_back(r->prob);
            const auto* r = rules[rng.categorical(probs)];
            for (auto it = r->rhs.rbegin(); it != r->rhs.rend(); ++it) stack.push_back(*it);
        }
        if (!stack.empty() || out.tokens.size() >= max_tokens) break;
        out.tokens.emplace_back(kEndToken);
        ++sentences;
    }
}

} // namespace

GeneratedSequence generate(const Grammar& g, std::uint64_t seed, std::size_t max_tokens, std::size_t max_sentences) {
    GeneratedSequence out;
    Rng rng(seed);
    if (g.is_pfsg())
        generate_pfsg(g, rng, max_tokens, max_sentences, out);
    else
        generate_pcfg(g, rng, max_tokens, max_sentences, out);
    out.truncated = out.tokens.empty() ? max_sentences > 0 : out.tokens.back() != kEndToken;
    return out;
}

} // namespace simplab
