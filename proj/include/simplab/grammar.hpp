#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simplab {

// Reserved terminal marking the end of a sentence.
inline constexpr std::string_view kEndToken = "$end";

// A flat token stream; sentences are delimited by kEndToken.
using TokenSequence = std::vector<std::string>;

enum class Formalism { Pfsg, Pcfg };

enum class SymbolKind { Terminal, Nonterminal, State, End };

struct Symbol {
    std::string name;
    SymbolKind kind;
};

// One PFSG transition. `symbol` indexes the alphabet, or equals
// Grammar::end_symbol() for a sentence end. A `$end` rule without a named
// successor returns to the start state.
struct PfsgArc {
    int source = 0;
    int symbol = 0;
    int target = 0;
    bool named_target = true;
    double prob = 0.0;
};

struct PcfgSymbol {
    bool nonterminal = false;
    int id = 0;

    friend auto operator<=>(const PcfgSymbol&, const PcfgSymbol&) = default;
};

struct PcfgRule {
    int lhs = 0;
    std::vector<PcfgSymbol> rhs;
    double prob = 0.0;
};

// An immutable, validated probabilistic grammar. Terminal ids are
// 0..alphabet().size()-1 and end_symbol() == alphabet().size(). Source ids
// index states (PFSG) or nonterminals (PCFG).
class Grammar {
public:
    Formalism formalism() const { return formalism_; }
    bool is_pfsg() const { return formalism_ == Formalism::Pfsg; }

    const std::vector<std::string>& alphabet() const { return alphabet_; }
    const std::vector<std::string>& sources() const { return sources_; }
    int start() const { return start_; }
    int end_symbol() const { return static_cast<int>(alphabet_.size()); }
    std::size_t symbol_count() const { return alphabet_.size() + 1; }

    std::optional<int> terminal_id(std::string_view name) const;
    std::optional<int> source_id(std::string_view name) const;
    // Terminal name, or kEndToken for end_symbol().
    std::string_view symbol_name(int symbol) const;

    // Maps tokens to symbol ids; "$end" maps to end_symbol().
    // Throws OutOfVocabularyError naming the first unknown token.
    std::vector<int> encode(std::span<const std::string> tokens) const;

    std::span<const PfsgArc> arcs() const { return arcs_; }
    std::span<const PfsgArc> arcs_from(int state) const;
    std::span<const PcfgRule> rules() const { return rules_; }

    std::size_t rule_count() const;
    // Number of rules whose source is `source`.
    std::size_t rules_of(int source) const;

    // Every declared symbol with its kind, sources first.
    std::vector<Symbol> symbols() const;

    // Canonical grammar-file text; parse_grammar(g.to_text()) reproduces g.
    std::string to_text() const;

    // Same grammar with terminal ids renumbered to follow `order`, which must
    // be a permutation of alphabet(). Throws ValidationError otherwise.
    Grammar with_alphabet_order(std::span<const std::string> order) const;

    friend bool operator==(const Grammar& a, const Grammar& b) { return a.to_text() == b.to_text(); }

private:
    friend class GrammarBuilder;
    Grammar() = default;

    void index();

    Formalism formalism_ = Formalism::Pfsg;
    std::vector<std::string> alphabet_;
    std::vector<std::string> sources_;
    int start_ = 0;
    std::vector<PfsgArc> arcs_;         // sorted by source
    std::vector<std::size_t> arc_begin_; // per state, size sources+1
    std::vector<PcfgRule> rules_;
};

// Parses and validates grammar-file text:
//
//   format: pfsg | pcfg
//   start: <name>
//   [alphabet: <t> <t> ...]
//   <NT> -> <sym> [<sym> ...] : <prob>                 (pcfg)
//   <state> : <terminal> -> <state> : <prob>            (pfsg)
//   <state> : $end [-> <state>] : <prob>                (pfsg)
//
// '#' starts a comment. Throws ParseError for syntax problems and
// ValidationError for probability sums, undeclared symbols and
// non-terminating grammars.
Grammar parse_grammar(std::string_view text);

Grammar load_grammar(const std::string& path);

// Spectral radius of the PCFG mean matrix restricted to nonterminals
// reachable from the start symbol.
double pcfg_spectral_radius(const Grammar& g);

} // namespace simplab
