#include "simplab/grammar.hpp"

#include "simplab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace simplab {

namespace {

constexpr double kSumTolerance = 1e-6;
constexpr double kRadiusTolerance = 1e-9;

struct Token {
    std::string text;
    std::size_t column; // 1-based byte column
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        const std::size_t begin = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back({std::string(line.substr(begin, i - begin)), begin + 1});
    }
    return out;
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

double parse_probability(const Token& tok, std::size_t line) {
    double value = 0.0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
        throw ParseError("expected a decimal probability, got '" + tok.text + "'", line, tok.column);
    if (!(value > 0.0 && value <= 1.0))
        throw ParseError("probability " + tok.text + " outside (0, 1]", line, tok.column);
    return value;
}

bool reserved_name(std::string_view s) { return s == ":" || s == "->" || s == kEndToken; }

// Header line "key: value..." -> (key, value tokens).
std::optional<std::pair<std::string, std::vector<Token>>> header_line(std::string_view line) {
    auto toks = tokenize(line);
    if (toks.empty()) return std::nullopt;
    std::string key;
    std::size_t rest = 0;
    if (toks[0].text.size() > 1 && toks[0].text.back() == ':') {
        key = toks[0].text.substr(0, toks[0].text.size() - 1);
        rest = 1;
    } else if (toks.size() > 1 && toks[1].text == ":") {
        key = toks[0].text;
        rest = 2;
    } else {
        return std::nullopt;
    }
    if (key != "format" && key != "start" && key != "alphabet") return std::nullopt;
    return std::make_pair(key, std::vector<Token>(toks.begin() + static_cast<std::ptrdiff_t>(rest), toks.end()));
}

std::string format_prob(double p) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", p);
    return buf;
}

} // namespace

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : Error([&] {
          std::string where = "line " + std::to_string(line);
          if (column > 0) where += ", column " + std::to_string(column);
          return where + ": " + what;
      }()),
      line_(line), column_(column) {}

ParseError::ParseError(Prefixed, const std::string& full, std::size_t line, std::size_t column)
    : Error(full), line_(line), column_(column) {}

ParseError ParseError::in_source(const std::string& source) const {
    return ParseError(Prefixed{}, source + ": " + what(), line_, column_);
}

OutOfVocabularyError::OutOfVocabularyError(const std::string& token, std::size_t line)
    : Error("out-of-vocabulary token '" + token + "'" + (line ? " on line " + std::to_string(line) : std::string())),
      token_(token), line_(line) {}

// Assembles a Grammar from parsed rule lines and checks its invariants.
class GrammarBuilder {
public:
    struct RawRule {
        std::string source;
        std::vector<std::string> emission; // pcfg rhs, or {terminal} / {"$end"} for pfsg
        std::optional<std::string> target;  // pfsg only
        double prob;
        std::size_t line;
    };

    Formalism formalism = Formalism::Pfsg;
    std::string start;
    std::size_t start_line = 0;
    std::optional<std::vector<std::string>> declared_alphabet;
    std::vector<RawRule> raw;

    Grammar build() const {
        Grammar g;
        g.formalism_ = formalism;
        if (formalism == Formalism::Pfsg)
            build_pfsg(g);
        else
            build_pcfg(g);
        g.index();
        check_sums(g);
        if (formalism == Formalism::Pfsg)
            check_pfsg_termination(g);
        else
            check_pcfg_termination(g);
        return g;
    }

private:
    static int intern(std::vector<std::string>& names, std::map<std::string, int>& ids, const std::string& name) {
        auto [it, inserted] = ids.emplace(name, static_cast<int>(names.size()));
        if (inserted) names.push_back(name);
        return it->second;
    }

    void seed_alphabet(std::vector<std::string>& alphabet, std::map<std::string, int>& ids) const {
        if (!declared_alphabet) return;
        for (const auto& t : *declared_alphabet) {
            if (reserved_name(t)) throw ValidationError("reserved name '" + t + "' in alphabet");
            if (ids.count(t)) throw ValidationError("terminal '" + t + "' declared twice in alphabet");
            intern(alphabet, ids, t);
        }
    }

    int terminal(std::vector<std::string>& alphabet, std::map<std::string, int>& ids, const std::string& name,
                 std::size_t line) const {
        if (declared_alphabet && !ids.count(name))
            throw ValidationError("line " + std::to_string(line) + ": undeclared terminal '" + name + "'");
        return intern(alphabet, ids, name);
    }

    void build_pfsg(Grammar& g) const {
        std::map<std::string, int> state_ids;
        for (const auto& r : raw) intern(g.sources_, state_ids, r.source);
        std::map<std::string, int> term_ids;
        seed_alphabet(g.alphabet_, term_ids);
        for (const auto& r : raw)
            if (r.emission[0] != kEndToken) terminal(g.alphabet_, term_ids, r.emission[0], r.line);
        for (const auto& name : g.alphabet_)
            if (state_ids.count(name))
                throw ValidationError("symbol '" + name + "' is used both as a state and a terminal");

        auto start_it = state_ids.find(start);
        if (start_it == state_ids.end())
            throw ValidationError("line " + std::to_string(start_line) + ": start state '" + start +
                                  "' has no rules");
        g.start_ = start_it->second;

        const int end = static_cast<int>(g.alphabet_.size());
        std::set<std::tuple<int, int, int, bool>> seen;
        for (const auto& r : raw) {
            PfsgArc arc;
            arc.source = state_ids.at(r.source);
            arc.symbol = r.emission[0] == kEndToken ? end : term_ids.at(r.emission[0]);
            arc.prob = r.prob;
            if (r.target) {
                auto t = state_ids.find(*r.target);
                if (t == state_ids.end())
                    throw ValidationError("line " + std::to_string(r.line) + ": undeclared state '" + *r.target +
                                          "' (no rules leave it)");
                arc.target = t->second;
                arc.named_target = true;
            } else {
                arc.target = g.start_;
                arc.named_target = false;
            }
            if (!seen.emplace(arc.source, arc.symbol, arc.target, arc.named_target).second)
                throw ValidationError("line " + std::to_string(r.line) + ": duplicate rule for state '" + r.source +
                                      "'");
            g.arcs_.push_back(arc);
        }
        std::stable_sort(g.arcs_.begin(), g.arcs_.end(),
                         [](const PfsgArc& a, const PfsgArc& b) { return a.source < b.source; });
    }

    void build_pcfg(Grammar& g) const {
        std::map<std::string, int> nt_ids;
        for (const auto& r : raw) intern(g.sources_, nt_ids, r.source);
        std::map<std::string, int> term_ids;
        seed_alphabet(g.alphabet_, term_ids);
        for (const auto& name : g.alphabet_)
            if (nt_ids.count(name))
                throw ValidationError("symbol '" + name + "' is used both as a nonterminal and a terminal");

        auto start_it = nt_ids.find(start);
        if (start_it == nt_ids.end())
            throw ValidationError("line " + std::to_string(start_line) + ": start symbol '" + start +
                                  "' has no rules");
        g.start_ = start_it->second;

        std::set<std::pair<int, std::vector<PcfgSymbol>>> seen;
        for (const auto& r : raw) {
            PcfgRule rule;
            rule.lhs = nt_ids.at(r.source);
            rule.prob = r.prob;
            for (const auto& sym : r.emission) {
                if (auto nt = nt_ids.find(sym); nt != nt_ids.end())
                    rule.rhs.push_back({true, nt->second});
                else
                    rule.rhs.push_back({false, terminal(g.alphabet_, term_ids, sym, r.line)});
            }
            if (!seen.emplace(rule.lhs, rule.rhs).second)
                throw ValidationError("line " + std::to_string(r.line) + ": duplicate rule for '" + r.source + "'");
            g.rules_.push_back(std::move(rule));
        }
        std::stable_sort(g.rules_.begin(), g.rules_.end(),
                         [](const PcfgRule& a, const PcfgRule& b) { return a.lhs < b.lhs; });
    }

    void check_sums(const Grammar& g) const {
        std::vector<double> sums(g.sources_.size(), 0.0);
        if (g.is_pfsg())
            for (const auto& a : g.arcs_) sums[a.source] += a.prob;
        else
            for (const auto& r : g.rules_) sums[r.lhs] += r.prob;
        for (std::size_t s = 0; s < sums.size(); ++s)
            if (std::abs(sums[s] - 1.0) > kSumTolerance) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.9g", sums[s]);
                throw ValidationError("probabilities of '" + g.sources_[s] + "' sum to " + buf + ", not 1");
            }
    }

    static void check_pfsg_termination(const Grammar& g) {
        const std::size_t n = g.sources_.size();
        const int end = g.end_symbol();
        std::vector<char> reachable(n, 0);
        std::vector<int> stack{g.start_};
        reachable[g.start_] = 1;
        while (!stack.empty()) {
            const int s = stack.back();
            stack.pop_back();
            for (const auto& a : g.arcs_from(s))
                if (!reachable[a.target]) {
                    reachable[a.target] = 1;
                    stack.push_back(a.target);
                }
        }
        // States from which a sentence end is reachable without passing an end.
        std::vector<char> can_end(n, 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& a : g.arcs_) {
                if (can_end[a.source]) continue;
                if (a.symbol == end || can_end[a.target]) {
                    can_end[a.source] = 1;
                    changed = true;
                }
            }
        }
        for (std::size_t s = 0; s < n; ++s)
            if (reachable[s] && !can_end[s])
                throw ValidationError("non-terminating grammar: state '" + g.sources_[s] + "' cannot reach $end");
    }

    static void check_pcfg_termination(const Grammar& g) {
        const double rho = pcfg_spectral_radius(g);
        if (!(rho < 1.0 - kRadiusTolerance)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.9g", rho);
            throw ValidationError(std::string("non-terminating grammar: mean-matrix spectral radius ") + buf +
                                  " is not below 1");
        }
    }
};

std::optional<int> Grammar::terminal_id(std::string_view name) const {
    if (name == kEndToken) return end_symbol();
    auto it = std::find(alphabet_.begin(), alphabet_.end(), name);
    if (it == alphabet_.end()) return std::nullopt;
    return static_cast<int>(it - alphabet_.begin());
}

std::optional<int> Grammar::source_id(std::string_view name) const {
    auto it = std::find(sources_.begin(), sources_.end(), name);
    if (it == sources_.end()) return std::nullopt;
    return static_cast<int>(it - sources_.begin());
}

std::string_view Grammar::symbol_name(int symbol) const {
    if (symbol == end_symbol()) return kEndToken;
    return alphabet_.at(static_cast<std::size_t>(symbol));
}

std::vector<int> Grammar::encode(std::span<const std::string> tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto id = terminal_id(t);
        if (!id) throw OutOfVocabularyError(t);
        out.push_back(*id);
    }
    return out;
}

std::span<const PfsgArc> Grammar::arcs_from(int state) const {
    const auto s = static_cast<std::size_t>(state);
    return std::span<const PfsgArc>(arcs_).subspan(arc_begin_[s], arc_begin_[s + 1] - arc_begin_[s]);
}

std::size_t Grammar::rule_count() const { return is_pfsg() ? arcs_.size() : rules_.size(); }

std::size_t Grammar::rules_of(int source) const {
    if (is_pfsg()) return arcs_from(source).size();
    return static_cast<std::size_t>(
        std::count_if(rules_.begin(), rules_.end(), [&](const PcfgRule& r) { return r.lhs == source; }));
}

std::vector<Symbol> Grammar::symbols() const {
    std::vector<Symbol> out;
    const auto kind = is_pfsg() ? SymbolKind::State : SymbolKind::Nonterminal;
    for (const auto& s : sources_) out.push_back({s, kind});
    for (const auto& t : alphabet_) out.push_back({t, SymbolKind::Terminal});
    out.push_back({std::string(kEndToken), SymbolKind::End});
    return out;
}

void Grammar::index() {
    arc_begin_.assign(sources_.size() + 1, 0);
    for (const auto& a : arcs_) ++arc_begin_[static_cast<std::size_t>(a.source) + 1];
    for (std::size_t s = 0; s < sources_.size(); ++s) arc_begin_[s + 1] += arc_begin_[s];
}

std::string Grammar::to_text() const {
    std::ostringstream out;
    out << "format: " << (is_pfsg() ? "pfsg" : "pcfg") << '\n';
    out << "start: " << sources_[start_] << '\n';
    out << "alphabet:";
    for (const auto& t : alphabet_) out << ' ' << t;
    out << '\n';
    if (is_pfsg()) {
        for (const auto& a : arcs_) {
            out << sources_[a.source] << " : " << symbol_name(a.symbol);
            if (a.named_target) out << " -> " << sources_[a.target];
            out << " : " << format_prob(a.prob) << '\n';
        }
    } else {
        for (const auto& r : rules_) {
            out << sources_[r.lhs] << " ->";
            for (const auto& s : r.rhs) out << ' ' << (s.nonterminal ? sources_[s.id] : alphabet_[s.id]);
            out << " : " << format_prob(r.prob) << '\n';
        }
    }
    return out.str();
}

Grammar Grammar::with_alphabet_order(std::span<const std::string> order) const {
    if (order.size() != alphabet_.size())
        throw ValidationError("alphabet mismatch: expected " + std::to_string(order.size()) + " terminals, grammar has " +
                              std::to_string(alphabet_.size()));
    std::vector<int> remap(alphabet_.size() + 1);
    for (std::size_t i = 0; i < alphabet_.size(); ++i) {
        auto it = std::find(order.begin(), order.end(), alphabet_[i]);
        if (it == order.end()) throw ValidationError("alphabet mismatch: terminal '" + alphabet_[i] + "'");
        remap[i] = static_cast<int>(it - order.begin());
    }
    remap[alphabet_.size()] = static_cast<int>(order.size());
    Grammar g = *this;
    g.alphabet_.assign(order.begin(), order.end());
    for (auto& a : g.arcs_) a.symbol = remap[static_cast<std::size_t>(a.symbol)];
    for (auto& r : g.rules_)
        for (auto& s : r.rhs)
            if (!s.nonterminal) s.id = remap[static_cast<std::size_t>(s.id)];
    return g;
}

Grammar parse_grammar(std::string_view text) {
    GrammarBuilder b;
    bool have_format = false;
    bool have_start = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw_line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = strip_comment(raw_line);
        auto toks = tokenize(line);
        if (toks.empty()) continue;

        if (!have_format) {
            auto h = header_line(line);
            if (!h || h->first != "format" || h->second.size() != 1)
                throw ParseError("expected 'format: pfsg' or 'format: pcfg'", line_no, toks[0].column);
            const auto& v = h->second[0];
            if (v.text == "pfsg")
                b.formalism = Formalism::Pfsg;
            else if (v.text == "pcfg")
                b.formalism = Formalism::Pcfg;
            else
                throw ParseError("unknown format '" + v.text + "'", line_no, v.column);
            have_format = true;
            continue;
        }
        if (!have_start) {
            auto h = header_line(line);
            if (!h || h->first != "start" || h->second.size() != 1)
                throw ParseError("expected 'start: <name>'", line_no, toks[0].column);
            if (reserved_name(h->second[0].text))
                throw ParseError("reserved name as start symbol", line_no, h->second[0].column);
            b.start = h->second[0].text;
            b.start_line = line_no;
            have_start = true;
            continue;
        }
        if (auto h = header_line(line); h && h->first == "alphabet" && b.raw.empty() && !b.declared_alphabet) {
            std::vector<std::string> names;
            for (const auto& t : h->second) names.push_back(t.text);
            b.declared_alphabet = std::move(names);
            continue;
        }

        GrammarBuilder::RawRule rule;
        rule.line = line_no;
        auto expect = [&](std::size_t i, std::string_view what) {
            if (i >= toks.size()) {
                const auto col = toks.back().column + toks.back().text.size();
                throw ParseError("expected '" + std::string(what) + "'", line_no, col);
            }
            if (toks[i].text != what)
                throw ParseError("expected '" + std::string(what) + "', got '" + toks[i].text + "'", line_no,
                                 toks[i].column);
        };
        auto name_at = [&](std::size_t i) -> const std::string& {
            if (i >= toks.size()) {
                const auto col = toks.back().column + toks.back().text.size();
                throw ParseError("missing symbol", line_no, col);
            }
            if (reserved_name(toks[i].text))
                throw ParseError("unexpected '" + toks[i].text + "'", line_no, toks[i].column);
            return toks[i].text;
        };

        if (b.formalism == Formalism::Pcfg) {
            // NT -> s1 ... sk : p
            rule.source = name_at(0);
            expect(1, "->");
            std::size_t i = 2;
            while (i < toks.size() && toks[i].text != ":") rule.emission.push_back(name_at(i++));
            if (rule.emission.empty())
                throw ParseError("rule has an empty right-hand side", line_no,
                                 i < toks.size() ? toks[i].column : toks.back().column);
            expect(i, ":");
            if (i + 1 >= toks.size()) throw ParseError("missing probability", line_no, toks[i].column + 1);
            rule.prob = parse_probability(toks[i + 1], line_no);
            if (i + 2 < toks.size()) throw ParseError("trailing text after probability", line_no, toks[i + 2].column);
        } else {
            // state : t -> state : p   |   state : $end [-> state] : p
            rule.source = name_at(0);
            expect(1, ":");
            if (toks.size() < 3) throw ParseError("missing emission", line_no, toks[1].column + 1);
            const bool is_end = toks[2].text == kEndToken;
            rule.emission.push_back(is_end ? std::string(kEndToken) : name_at(2));
            std::size_t i = 3;
            if (i < toks.size() && toks[i].text == "->") {
                rule.target = name_at(i + 1);
                i += 2;
            } else if (!is_end) {
                expect(i, "->");
            }
            expect(i, ":");
            if (i + 1 >= toks.size()) throw ParseError("missing probability", line_no, toks[i].column + 1);
            rule.prob = parse_probability(toks[i + 1], line_no);
            if (i + 2 < toks.size()) throw ParseError("trailing text after probability", line_no, toks[i + 2].column);
        }
        b.raw.push_back(std::move(rule));
    }
    if (!have_format) throw ParseError("empty grammar: missing 'format:' line", line_no);
    if (!have_start) throw ParseError("missing 'start:' line", line_no);
    if (b.raw.empty()) throw ValidationError("grammar has no rules");
    return b.build();
}

Grammar load_grammar(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open grammar file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_grammar(buf.str());
    } catch (const ParseError& e) {
        throw e.in_source(path);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + std::string(e.what()));
    }
}

double pcfg_spectral_radius(const Grammar& g) {
    const std::size_t n = g.sources().size();
    std::vector<char> reachable(n, 0);
    std::vector<int> stack{g.start()};
    reachable[static_cast<std::size_t>(g.start())] = 1;
    while (!stack.empty()) {
        const int a = stack.back();
        stack.pop_back();
        for (const auto& r : g.rules())
            if (r.lhs == a)
                for (const auto& s : r.rhs)
                    if (s.nonterminal && !reachable[static_cast<std::size_t>(s.id)]) {
                        reachable[static_cast<std::size_t>(s.id)] = 1;
                        stack.push_back(s.id);
                    }
    }
    std::vector<int> local(n, -1);
    int m = 0;
    for (std::size_t a = 0; a < n; ++a)
        if (reachable[a]) local[a] = m++;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
    for (const auto& r : g.rules()) {
        const int i = local[static_cast<std::size_t>(r.lhs)];
        if (i < 0) continue;
        for (const auto& s : r.rhs)
            if (s.nonterminal) mean(i, local[static_cast<std::size_t>(s.id)]) += r.prob;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(mean, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace simplab
