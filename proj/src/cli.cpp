#include "simplab/cli.hpp"

#include "simplab/corpus.hpp"
#include "simplab/corpus_stats.hpp"
#include "simplab/digest.hpp"
#include "simplab/errors.hpp"
#include "simplab/form_meaning.hpp"
#include "simplab/grammar.hpp"
#include "simplab/learnability.hpp"
#include "simplab/mdl.hpp"
#include "simplab/mixture.hpp"
#include "simplab/profile.hpp"
#include "simplab/report.hpp"
#include "simplab/sampling.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <list>

namespace simplab::cli {

namespace {

using Json = nlohmann::ordered_json;

// Raised for bad flag values detected after parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string format = "json";
    std::string out_path;
    std::string seed_text;
    int param_bits = kDefaultParamBits;
};

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError(std::string("invalid seed '") + text + "' from " + origin);
    return v;
}

std::uint64_t resolve_seed(const Common& c) {
    if (!c.seed_text.empty()) return parse_seed(c.seed_text, "--seed");
    if (const char* env = std::getenv("SIMPLICITY_LAB_SEED")) return parse_seed(env, "SIMPLICITY_LAB_SEED");
    return 0;
}

Json envelope(const std::string& command, Json config, const std::vector<std::string>& inputs) {
    Json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = std::move(config);
    auto in = Json::array();
    for (const auto& path : inputs) in.push_back({{"path", path}, {"sha256", sha256_file(path)}});
    j["inputs"] = std::move(in);
    return j;
}

// Comment lines carrying the envelope at the top of CSV and text reports.
std::string comment_header(const Json& env) {
    std::string h = "# " + env["version"].get<std::string>() + "\n";
    h += "# command: " + env["command"].get<std::string>() + "\n";
    h += "# config: " + env["config"].dump() + "\n";
    for (const auto& i : env["inputs"])
        h += "# input: " + i["path"].get<std::string>() + " sha256=" + i["sha256"].get<std::string>() + "\n";
    return h;
}

std::string render_json(const Json& j) { return j.dump(2) + "\n"; }

std::string key_value_csv(const Json& env, const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string s = comment_header(env) + "key,value\n";
    for (const auto& [k, v] : rows) s += k + "," + v + "\n";
    return s;
}

Json bits_json(const std::vector<double>& xs) {
    auto a = Json::array();
    for (double x : xs) a.push_back(json_number(x));
    return a;
}

Json code_length_json(const CodeLengthReport& r) {
    Json j;
    j["grammar_bits"] = json_number(r.grammar_bits);
    j["data_bits"] = json_number(r.data_bits);
    j["total_bits"] = json_number(r.total_bits);
    j["per_sentence_bits"] = bits_json(r.per_sentence_bits);
    return j;
}

Json profile_config_json(const ProfileConfig& cfg) {
    Json j;
    j["mode"] = to_string(cfg.mode);
    j["horizon"] = cfg.horizon;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["f"] = json_number(cfg.f);
    j["leaf_budget"] = cfg.leaf_budget;
    j["param_bits"] = cfg.param_bits;
    return j;
}

ProfileMode parse_mode(const std::string& m) { return m == "exact" ? ProfileMode::Exact : ProfileMode::MonteCarlo; }

Common& add_common(std::list<Common>& all, CLI::App* sub, std::vector<std::string> formats) {
    Common& c = all.emplace_back();
    c.format = formats.front();
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
    sub->add_option("--out", c.out_path, "Write the report to this file instead of stdout");
    sub->add_option("--seed", c.seed_text, "Random seed (falls back to SIMPLICITY_LAB_SEED, then 0)");
    sub->add_option("--param-bits", c.param_bits, "Bits per free probability parameter")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();
    return c;
}

struct ProfileOptions {
    std::string mode = "exact";
    std::size_t horizon = 30;
    std::size_t trials = 10000;
    double f = 8.0;
    std::uint64_t leaf_budget = std::uint64_t{1} << 22;
    std::string plot;
};

void add_profile_options(CLI::App* sub, ProfileOptions& p) {
    sub->add_option("--mode", p.mode, "exact or monte-carlo")
        ->check(CLI::IsMember({"exact", "monte-carlo"}))
        ->capture_default_str();
    sub->add_option("--horizon", p.horizon, "Number of predicted positions")->capture_default_str();
    sub->add_option("--trials", p.trials, "Monte-Carlo trials")->capture_default_str();
    sub->add_option("--f", p.f, "Underestimation factor (must exceed e)")->capture_default_str();
    sub->add_option("--leaf-budget", p.leaf_budget, "Exact-mode enumeration budget")->capture_default_str();
    sub->add_option("--plot", p.plot, "Also write an SVG plot of the profile here");
}

ProfileConfig make_profile_config(const ProfileOptions& p, const Common& c) {
    ProfileConfig cfg;
    cfg.mode = parse_mode(p.mode);
    cfg.horizon = p.horizon;
    cfg.trials = p.trials;
    cfg.f = p.f;
    cfg.leaf_budget = p.leaf_budget;
    cfg.param_bits = c.param_bits;
    cfg.seed = resolve_seed(c);
    return cfg;
}

std::string profile_report(const ConvergenceProfile& profile, Json env, const Common& c) {
    if (c.format == "csv") return comment_header(env) + profile_csv(profile);
    env["profile"] = profile_json(profile);
    return render_json(env);
}

Grammar load_checked(const std::string& path) { return load_grammar(path); }

std::string join_words(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    return s;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simplicity-principle language learning lab", "simplab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::list<Common> commons;
    const Common* active = nullptr;
    std::function<std::string()> action;

    // grammar check
    auto* grammar_cmd = app.add_subcommand("grammar", "Grammar utilities");
    grammar_cmd->require_subcommand(1);
    auto* check = grammar_cmd->add_subcommand("check", "Validate a grammar file and report its code length");
    std::string check_path;
    check->add_option("grammar", check_path, "Grammar file")->required();
    Common& ck = add_common(commons, check, {"json", "csv"});
    check->callback([&] {
        active = &ck;
        action = [&] {
            const Grammar g = load_checked(check_path);
            Json cfg{{"grammar", check_path}, {"param_bits", ck.param_bits}};
            auto env = envelope("grammar check", cfg, {check_path});
            const bool pfsg = g.is_pfsg();
            const double bits = grammar_code_length(g, ck.param_bits);
            if (ck.format == "csv") {
                std::vector<std::pair<std::string, std::string>> rows{
                    {"valid", "true"},
                    {"formalism", pfsg ? "pfsg" : "pcfg"},
                    {"start", g.sources()[static_cast<std::size_t>(g.start())]},
                    {"terminals", std::to_string(g.alphabet().size())},
                    {"sources", std::to_string(g.sources().size())},
                    {"rules", std::to_string(g.rule_count())},
                    {"description_bits", format_number(bits)}};
                if (!pfsg) rows.emplace_back("spectral_radius", format_number(pcfg_spectral_radius(g)));
                return key_value_csv(env, rows);
            }
            env["valid"] = true;
            env["formalism"] = pfsg ? "pfsg" : "pcfg";
            env["start"] = g.sources()[static_cast<std::size_t>(g.start())];
            env["alphabet"] = g.alphabet();
            env["sources"] = g.sources();
            env["rules"] = g.rule_count();
            env["description_bits"] = json_number(bits);
            if (!pfsg) env["spectral_radius"] = json_number(pcfg_spectral_radius(g));
            return render_json(env);
        };
    });

    // generate
    auto* gen = app.add_subcommand("generate", "Sample a token stream from a grammar");
    std::string gen_grammar;
    std::size_t gen_tokens = 100;
    std::size_t gen_sentences = kUnlimited;
    gen->add_option("--grammar", gen_grammar, "Grammar file")->required();
    gen->add_option("--tokens", gen_tokens, "Token budget, END markers included")->capture_default_str();
    gen->add_option("--sentences", gen_sentences, "Stop after this many sentences");
    Common& gc = add_common(commons, gen, {"text", "json"});
    gen->callback([&] {
        active = &gc;
        action = [&] {
            const Grammar g = load_checked(gen_grammar);
            const auto seed = resolve_seed(gc);
            const auto seq = generate(g, seed, gen_tokens, gen_sentences);
            Json cfg{{"grammar", gen_grammar}, {"tokens", gen_tokens}, {"seed", seed}};
            if (gen_sentences != kUnlimited) cfg["sentences"] = gen_sentences;
            auto env = envelope("generate", cfg, {gen_grammar});
            const auto sentences = split_sentences(seq.tokens);
            if (gc.format == "json") {
                env["tokens"] = seq.tokens;
                env["sentence_count"] = sentences.size();
                env["truncated"] = seq.truncated;
                return render_json(env);
            }
            std::string text = comment_header(env) + to_corpus_text(sentences);
            if (seq.truncated && !seq.tokens.empty() && seq.tokens.back() != kEndToken) {
                std::vector<std::string> open;
                for (auto it = seq.tokens.rbegin(); it != seq.tokens.rend() && *it != kEndToken; ++it)
                    open.insert(open.begin(), *it);
                text += "# truncated: " + join_words(open) + "\n";
            }
            return text;
        };
    });

    // encode
    auto* enc = app.add_subcommand("encode", "Two-part code length of a corpus under a grammar");
    std::string enc_grammar, enc_corpus;
    enc->add_option("--grammar", enc_grammar, "Grammar file")->required();
    enc->add_option("--corpus", enc_corpus, "Corpus file")->required();
    Common& ec = add_common(commons, enc, {"json", "csv"});
    enc->callback([&] {
        active = &ec;
        action = [&] {
            const Grammar g = load_checked(enc_grammar);
            const Corpus c = load_corpus(enc_corpus);
            const auto r = two_part_length(g, c, ec.param_bits);
            Json cfg{{"grammar", enc_grammar}, {"corpus", enc_corpus}, {"param_bits", ec.param_bits}};
            auto env = envelope("encode", cfg, {enc_grammar, enc_corpus});
            if (ec.format == "csv") {
                std::string s = comment_header(env) + "sentence,line,bits,cum_total_bits\n";
                const auto totals = cumulative_totals(r);
                for (std::size_t i = 0; i < c.size(); ++i)
                    s += std::to_string(i + 1) + "," + std::to_string(c[i].line) + "," +
                         format_number(r.per_sentence_bits[i]) + "," + format_number(totals[i + 1]) + "\n";
                return s;
            }
            env.update(code_length_json(r));
            return render_json(env);
        };
    });

    // compare
    auto* cmp = app.add_subcommand("compare", "Compare two grammars' two-part code lengths on a corpus");
    std::string cmp_g0, cmp_g1, cmp_corpus;
    cmp->add_option("--g0", cmp_g0, "Baseline grammar")->required();
    cmp->add_option("--g1", cmp_g1, "Alternative grammar")->required();
    cmp->add_option("--corpus", cmp_corpus, "Corpus file")->required();
    Common& cc = add_common(commons, cmp, {"json", "csv"});
    cmp->callback([&] {
        active = &cc;
        action = [&] {
            const Grammar g0 = load_checked(cmp_g0);
            const Grammar g1 = load_checked(cmp_g1);
            const Corpus c = load_corpus(cmp_corpus);
            const auto r0 = two_part_length(g0, c, cc.param_bits);
            const auto r1 = two_part_length(g1, c, cc.param_bits);
            const auto cross = crossover_point(r0, r1);
            Json cfg{{"g0", cmp_g0}, {"g1", cmp_g1}, {"corpus", cmp_corpus}, {"param_bits", cc.param_bits}};
            auto env = envelope("compare", cfg, {cmp_g0, cmp_g1, cmp_corpus});
            if (cc.format == "csv") {
                const auto t0 = cumulative_totals(r0), t1 = cumulative_totals(r1);
                std::string s = comment_header(env);
                s += "# crossover_sentence_index: " + (cross ? std::to_string(*cross) : std::string("none")) + "\n";
                s += "n,total_g0,total_g1\n";
                for (std::size_t n = 0; n < t0.size(); ++n)
                    s += std::to_string(n) + "," + format_number(t0[n]) + "," + format_number(t1[n]) + "\n";
                return s;
            }
            env["g0"] = code_length_json(r0);
            env["g1"] = code_length_json(r1);
            env["crossover_sentence_index"] = cross ? Json(*cross) : Json(nullptr);
            return render_json(env);
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Convergence profile of the ideal learner");
    std::string sim_truth, sim_class, sim_reference;
    ProfileOptions sim_opts;
    sim->add_option("--truth", sim_truth, "True generating PFSG")->required();
    sim->add_option("--class", sim_class, "Hypothesis class manifest")->required();
    sim->add_option("--reference", sim_reference, "Symbol tracked by s_n (default: first terminal)");
    add_profile_options(sim, sim_opts);
    Common& sc = add_common(commons, sim, {"csv", "json"});
    sim->callback([&] {
        active = &sc;
        action = [&] {
            const Grammar truth = load_checked(sim_truth);
            const auto prior = build_class(load_manifest(sim_class), sc.param_bits);
            auto cfg = make_profile_config(sim_opts, sc);
            cfg.reference_symbol = sim_reference.empty() ? 0 : prior.symbol_id(sim_reference);
            const auto profile = convergence_profile(prior, truth, cfg);
            Json cj{{"truth", sim_truth}, {"class", sim_class}};
            cj.update(profile_config_json(cfg));
            cj["reference"] = profile.reference_symbol;
            std::vector<std::string> inputs{sim_truth, sim_class};
            for (const auto& h : prior.hypotheses()) cj["hypotheses"].push_back(h.name);
            auto env = envelope("simulate", cj, inputs);
            if (!sim_opts.plot.empty()) write_profile_svg(profile, sim_opts.plot);
            return profile_report(profile, env, sc);
        };
    });

    // formmeaning
    auto* fm = app.add_subcommand("formmeaning", "Learn joint sentence-interpretation distributions");
    std::string fm_inventory, fm_class, fm_truth, fm_pairs;
    std::size_t fm_reference = 0;
    ProfileOptions fm_opts;
    fm->add_option("--inventory", fm_inventory, "Interpretation inventory file")->required();
    fm->add_option("--class", fm_class, "Joint-table class manifest")->required();
    fm->add_option("--truth", fm_truth, "True joint table; produces a convergence profile");
    fm->add_option("--pairs", fm_pairs, "Observed pairs; produces the learned posterior");
    fm->add_option("--reference-outcome", fm_reference, "Outcome index tracked by s_n")->capture_default_str();
    add_profile_options(fm, fm_opts);
    Common& fc = add_common(commons, fm, {"json", "csv"});
    fm->callback([&] {
        active = &fc;
        action = [&]() -> std::string {
            if (fm_truth.empty() && fm_pairs.empty()) throw UsageError("formmeaning needs --truth and/or --pairs");
            auto inventory = load_inventory(fm_inventory);
            const auto prior = load_joint_class(fm_class, inventory, fc.param_bits);
            Json cj{{"inventory", fm_inventory}, {"class", fm_class}, {"param_bits", fc.param_bits}};
            std::vector<std::string> inputs{fm_inventory, fm_class};
            for (const auto& t : prior.tables()) cj["tables"].push_back(t.name);
            if (!fm_truth.empty()) {
                const auto truth = load_joint_table(fm_truth, inventory);
                auto cfg = make_profile_config(fm_opts, fc);
                cfg.reference_symbol = static_cast<int>(fm_reference);
                const auto profile = joint_error_profile(prior, truth, cfg);
                cj["truth"] = fm_truth;
                cj.update(profile_config_json(cfg));
                cj["reference_outcome"] = fm_reference;
                inputs.push_back(fm_truth);
                if (!fm_pairs.empty()) {
                    cj["pairs"] = fm_pairs;
                    inputs.push_back(fm_pairs);
                }
                auto env = envelope("formmeaning", cj, inputs);
                if (!fm_opts.plot.empty()) write_profile_svg(profile, fm_opts.plot);
                if (!fm_pairs.empty() && fc.format == "json") {
                    const auto learned = learn_joint(prior, load_pairs(fm_pairs, inventory));
                    env["posterior"] = bits_json(learned.posterior());
                }
                return profile_report(profile, env, fc);
            }
            cj["pairs"] = fm_pairs;
            inputs.push_back(fm_pairs);
            auto env = envelope("formmeaning", cj, inputs);
            const auto pairs = load_pairs(fm_pairs, inventory);
            const auto learned = learn_joint(prior, pairs);
            const auto joint = learned.predictive_joint();
            const auto& sentences = learned.sentences();
            const auto& labels = learned.interpretations();
            if (fc.format == "csv") {
                std::string s = comment_header(env) + "sentence,interpretation,predictive\n";
                for (std::size_t i = 0; i < sentences.size(); ++i)
                    for (std::size_t k = 0; k < labels.size(); ++k)
                        s += sentences[i] + "," + labels[k] + "," + format_number(joint[i * labels.size() + k]) + "\n";
                return s;
            }
            env["pair_count"] = pairs.size();
            Json post = Json::array();
            const auto w = learned.posterior();
            for (std::size_t h = 0; h < w.size(); ++h)
                post.push_back({{"table", learned.tables()[h].name},
                                {"description_bits", json_number(learned.description_bits()[h])},
                                {"posterior", json_number(w[h])}});
            env["posterior"] = std::move(post);
            Json cells = Json::array();
            for (std::size_t i = 0; i < sentences.size(); ++i)
                for (std::size_t k = 0; k < labels.size(); ++k)
                    cells.push_back({{"sentence", sentences[i]},
                                     {"interpretation", labels[k]},
                                     {"predictive", json_number(joint[i * labels.size() + k])}});
            env["predictive_joint"] = std::move(cells);
            return render_json(env);
        };
    });

    // learnability
    auto* learn = app.add_subcommand("learnability", "Occurrences and years of input needed to learn a restriction");
    std::string l_g0, l_g1, l_context, l_corpus, l_pattern;
    std::optional<double> l_rate;
    double l_wpy = kDefaultWordsPerYear;
    learn->add_option("--g0", l_g0, "Overgeneral grammar")->required();
    learn->add_option("--g1", l_g1, "Restricted grammar")->required();
    learn->add_option("--context", l_context, "'prefix: <words>' or 'states: <g0 state> <g1 state>'")->required();
    learn->add_option("--corpus", l_corpus, "Corpus supplying the context rate")->required();
    learn->add_option("--rate", l_rate, "Context rate per million words (overrides corpus measurement)");
    learn->add_option("--pattern", l_pattern, "Measure the context rate by this token pattern on the corpus");
    learn->add_option("--words-per-year", l_wpy, "Words of input per year")->capture_default_str();
    Common& lc = add_common(commons, learn, {"json", "csv"});
    learn->callback([&] {
        active = &lc;
        action = [&] {
            if (l_rate && !l_pattern.empty()) throw UsageError("--rate and --pattern are mutually exclusive");
            const Grammar g0 = load_checked(l_g0);
            const Grammar g1 = load_checked(l_g1);
            const auto context = parse_context(l_context);
            const Corpus corpus = load_corpus(l_corpus);
            LearnabilityConfig cfg;
            cfg.words_per_year = l_wpy;
            cfg.param_bits = lc.param_bits;
            std::string rate_source = "grammar_context";
            if (l_rate) {
                cfg.rate_per_million = *l_rate;
                rate_source = "given";
            } else if (!l_pattern.empty()) {
                const auto stats = ingest_file(l_corpus, {l_pattern});
                cfg.rate_per_million = per_million(stats.patterns.front().count, stats.word_count);
                rate_source = "pattern";
            }
            const auto e = learnability_report(g0, g1, context, corpus, cfg);
            Json cj{{"g0", l_g0}, {"g1", l_g1}, {"context", context.to_string()}, {"corpus", l_corpus},
                    {"words_per_year", json_number(l_wpy)}, {"param_bits", lc.param_bits}};
            if (l_rate) cj["rate"] = json_number(*l_rate);
            if (!l_pattern.empty()) cj["pattern"] = l_pattern;
            auto env = envelope("learnability", cj, {l_g0, l_g1, l_corpus});
            const Json occ = e.occurrences_needed ? Json(*e.occurrences_needed) : Json("inf");
            if (lc.format == "csv")
                return key_value_csv(env, {{"delta_bits", format_number(e.delta_bits)},
                                           {"q", format_number(e.q)},
                                           {"savings_bits", format_number(e.savings_bits)},
                                           {"occurrences_needed", e.occurrences_needed
                                                                      ? std::to_string(*e.occurrences_needed)
                                                                      : std::string("inf")},
                                           {"rate_per_million", format_number(e.rate_per_million)},
                                           {"words_per_year", format_number(e.words_per_year)},
                                           {"years_needed", format_number(e.years_needed)},
                                           {"method", to_string(e.method)},
                                           {"rate_source", rate_source},
                                           {"context_occurrences", std::to_string(e.context_occurrences)}});
            env["delta_bits"] = json_number(e.delta_bits);
            env["q"] = json_number(e.q);
            env["savings_bits"] = json_number(e.savings_bits);
            env["occurrences_needed"] = occ;
            env["rate_per_million"] = json_number(e.rate_per_million);
            env["words_per_year"] = json_number(e.words_per_year);
            env["years_needed"] = json_number(e.years_needed);
            env["method"] = to_string(e.method);
            env["rate_source"] = rate_source;
            env["context_occurrences"] = e.context_occurrences;
            env["warnings"] = e.warnings;
            return render_json(env);
        };
    });

    // corpus stats
    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
    corpus_cmd->require_subcommand(1);
    auto* stats_cmd = corpus_cmd->add_subcommand("stats", "Word, sentence and pattern counts of a corpus");
    std::string s_corpus;
    std::vector<std::string> s_patterns;
    double s_wpy = kDefaultWordsPerYear;
    stats_cmd->add_option("corpus", s_corpus, "Corpus file")->required();
    stats_cmd->add_option("--pattern", s_patterns, "Token pattern ('*' matches one token); repeatable");
    stats_cmd->add_option("--words-per-year", s_wpy, "Words of input per year")->capture_default_str();
    Common& stc = add_common(commons, stats_cmd, {"json", "csv"});
    stats_cmd->callback([&] {
        active = &stc;
        action = [&] {
            const auto st = ingest_file(s_corpus, s_patterns);
            Json cj{{"corpus", s_corpus}, {"patterns", s_patterns}, {"words_per_year", json_number(s_wpy)}};
            auto env = envelope("corpus stats", cj, {s_corpus});
            if (stc.format == "csv") {
                std::string s = comment_header(env);
                s += "# word_count: " + std::to_string(st.word_count) + "\n";
                s += "# sentence_count: " + std::to_string(st.sentence_count) + "\n";
                s += "pattern,count,per_million,per_year\n";
                for (const auto& p : st.patterns)
                    s += "\"" + p.pattern + "\"," + std::to_string(p.count) + "," +
                         format_number(per_million(p.count, st.word_count)) + "," +
                         format_number(occurrence_rate_per_year(p.count, st.word_count, s_wpy)) + "\n";
                return s;
            }
            env["word_count"] = st.word_count;
            env["sentence_count"] = st.sentence_count;
            Json pats = Json::array();
            for (const auto& p : st.patterns)
                pats.push_back({{"pattern", p.pattern},
                                {"count", p.count},
                                {"per_million", json_number(per_million(p.count, st.word_count))},
                                {"per_year", json_number(occurrence_rate_per_year(p.count, st.word_count, s_wpy))}});
            env["patterns"] = std::move(pats);
            env["sha256"] = st.digests.front();
            return render_json(env);
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    auto one_line = [](std::string s) {
        std::replace(s.begin(), s.end(), '\n', ' ');
        return s;
    };
    try {
        if (!action) throw UsageError("no subcommand given");
        const std::string report = action();
        if (active->out_path.empty()) {
            out << report;
        } else {
            std::ofstream f(active->out_path, std::ios::binary);
            if (!f) throw Error("cannot write report '" + active->out_path + "'");
            f << report;
            if (!f) throw Error("failed writing report '" + active->out_path + "'");
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << one_line(e.what()) << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << one_line(e.what()) << "\n";
        return kExitDomainError;
    }
}

} // namespace simplab::cli
