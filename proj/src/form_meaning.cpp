#include "simplab/form_meaning.hpp"

#include "simplab/errors.hpp"
#include "simplab/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace simplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_words(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

bool skip_line(const std::string& line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

std::vector<double> normalize_log2(std::vector<double> logw) {
    double hi = -kInf;
    for (double v : logw) hi = std::max(hi, v);
    if (hi == -kInf) throw ClassExhaustedError("class exhausted: no joint hypothesis supports the observed pairs");
    double z = 0.0;
    for (double v : logw)
        if (v != -kInf) z += std::exp2(v - hi);
    for (double& v : logw) v = v == -kInf ? 0.0 : std::exp2(v - hi) / z;
    return logw;
}

} // namespace

std::vector<std::string> parse_inventory(std::istream& in) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        auto label = trim(line);
        if (label.find_first_of(" \t") != std::string::npos)
            throw ParseError("interpretation labels cannot contain whitespace", line_no);
        if (!seen.insert(label).second) throw ParseError("duplicate interpretation '" + label + "'", line_no);
        out.push_back(std::move(label));
    }
    return out;
}

std::vector<FormMeaningPair> parse_pairs(std::istream& in, std::span<const std::string> inventory) {
    std::vector<FormMeaningPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected 'sentence<TAB>interpretation'", line_no);
        FormMeaningPair p;
        p.sentence = split_words(std::string_view(line).substr(0, tab));
        p.interpretation = trim(std::string_view(line).substr(tab + 1));
        p.line = line_no;
        if (p.sentence.empty()) throw ParseError("empty sentence", line_no, 1);
        if (p.interpretation.empty() || p.interpretation.find('\t') != std::string::npos)
            throw ParseError("malformed interpretation field", line_no, tab + 2);
        if (std::find(inventory.begin(), inventory.end(), p.interpretation) == inventory.end())
            throw ValidationError("line " + std::to_string(line_no) + ": undeclared interpretation '" +
                                  p.interpretation + "'");
        out.push_back(std::move(p));
    }
    return out;
}

JointTable parse_joint_table(std::istream& in, std::string name, std::span<const std::string> inventory) {
    JointTable t;
    t.name = std::move(name);
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    double total = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw ParseError("expected 'sentence<TAB>interpretation<TAB>probability'", line_no);
        JointCell c;
        c.sentence = join(split_words(std::string_view(line).substr(0, t1)));
        c.interpretation = trim(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
        const auto prob = trim(std::string_view(line).substr(t2 + 1));
        auto [ptr, ec] = std::from_chars(prob.data(), prob.data() + prob.size(), c.prob);
        if (ec != std::errc() || ptr != prob.data() + prob.size() || !(c.prob > 0.0 && c.prob <= 1.0))
            throw ParseError("cell probability must be a decimal in (0, 1]", line_no, t2 + 2);
        if (c.sentence.empty()) throw ParseError("empty sentence", line_no, 1);
        if (std::find(inventory.begin(), inventory.end(), c.interpretation) == inventory.end())
            throw ValidationError("line " + std::to_string(line_no) + ": undeclared interpretation '" +
                                  c.interpretation + "'");
        if (!seen.emplace(c.sentence, c.interpretation).second)
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate cell");
        total += c.prob;
        t.cells.push_back(std::move(c));
    }
    if (t.cells.empty()) throw ValidationError("joint table '" + t.name + "' has no cells");
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("joint table '" + t.name + "' does not sum to 1");
    return t;
}

double table_code_length(const JointTable& t, std::size_t interpretation_count, int param_bits) {
    std::set<std::string> sentences;
    for (const auto& c : t.cells) sentences.insert(c.sentence);
    const double header = std::ceil(std::log2(static_cast<double>(sentences.size() + 1))) +
                          std::ceil(std::log2(static_cast<double>(interpretation_count + 1)));
    return header + static_cast<double>(param_bits) * static_cast<double>(t.cells.size() - 1);
}

JointMixture::JointMixture(std::vector<JointTable> tables, std::vector<std::string> inventory,
                           std::optional<std::vector<double>> priors, int param_bits)
    : tables_(std::move(tables)), interpretations_(std::move(inventory)) {
    if (tables_.empty()) throw ValidationError("empty joint hypothesis class");
    for (const auto& t : tables_)
        for (const auto& c : t.cells)
            if (std::find(sentences_.begin(), sentences_.end(), c.sentence) == sentences_.end())
                sentences_.push_back(c.sentence);
    for (const auto& t : tables_) {
        dense_.push_back(dense(t));
        description_bits_.push_back(table_code_length(t, interpretations_.size(), param_bits));
    }
    for (std::size_t a = 0; a < dense_.size(); ++a)
        for (std::size_t b = 0; b < a; ++b)
            if (dense_[a] == dense_[b])
                throw ValidationError("duplicate joint table: '" + tables_[a].name + "' equals '" + tables_[b].name + "'");
    if (priors) {
        if (priors->size() != tables_.size()) throw ValidationError("one prior per table required");
        double total = 0.0;
        for (double p : *priors) {
            if (!(p > 0.0 && p <= 1.0)) throw ValidationError("prior outside (0, 1]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ValidationError("priors do not sum to 1");
        prior_ = *priors;
        priors_overridden_ = true;
    } else {
        std::vector<double> logw;
        for (double b : description_bits_) logw.push_back(-b);
        prior_ = normalize_log2(std::move(logw));
    }
    counts_.assign(outcome_count(), 0);
}

std::optional<std::size_t> JointMixture::sentence_index(std::string_view sentence) const {
    auto it = std::find(sentences_.begin(), sentences_.end(), sentence);
    if (it == sentences_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - sentences_.begin());
}

std::optional<std::size_t> JointMixture::interpretation_index(std::string_view label) const {
    auto it = std::find(interpretations_.begin(), interpretations_.end(), label);
    if (it == interpretations_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - interpretations_.begin());
}

std::optional<std::size_t> JointMixture::outcome_id(std::string_view sentence, std::string_view label) const {
    auto s = sentence_index(sentence);
    auto i = interpretation_index(label);
    if (!s || !i) return std::nullopt;
    return *s * interpretations_.size() + *i;
}

std::vector<double> JointMixture::dense(const JointTable& table) const {
    std::vector<double> out(outcome_count(), 0.0);
    for (const auto& c : table.cells) {
        auto id = outcome_id(c.sentence, c.interpretation);
        if (!id)
            throw ValidationError("table '" + table.name + "' has cell (" + c.sentence + ", " + c.interpretation +
                                  ") outside the class outcome space");
        out[*id] = c.prob;
    }
    return out;
}

std::vector<double> JointMixture::log2_evidence() const {
    std::vector<double> out(tables_.size(), 0.0);
    for (std::size_t h = 0; h < tables_.size(); ++h)
        for (std::size_t c = 0; c < counts_.size(); ++c) {
            if (counts_[c] == 0) continue;
            const double p = dense_[h][c];
            if (p <= 0.0) {
                out[h] = -kInf;
                break;
            }
            out[h] += static_cast<double>(counts_[c]) * std::log2(p);
        }
    return out;
}

std::vector<double> JointMixture::posterior() const {
    auto ev = log2_evidence();
    for (std::size_t h = 0; h < ev.size(); ++h) ev[h] += std::log2(prior_[h]);
    return normalize_log2(std::move(ev));
}

void JointMixture::observe(std::size_t outcome) {
    if (outcome >= counts_.size()) throw std::out_of_range("outcome outside the joint space");
    ++counts_[outcome];
    try {
        (void)posterior();
    } catch (const ClassExhaustedError&) {
        --counts_[outcome];
        throw;
    }
}

void JointMixture::observe(const FormMeaningPair& pair) {
    const auto sentence = join(pair.sentence);
    auto id = outcome_id(sentence, pair.interpretation);
    if (!id)
        throw ClassExhaustedError("class exhausted: no joint hypothesis covers (" + sentence + ", " +
                                  pair.interpretation + ")" +
                                  (pair.line ? " on line " + std::to_string(pair.line) : std::string()));
    observe(*id);
}

std::vector<double> JointMixture::predictive_joint() const {
    const auto w = posterior();
    std::vector<double> out(outcome_count(), 0.0);
    for (std::size_t h = 0; h < w.size(); ++h)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[h] * dense_[h][c];
    return out;
}

std::vector<double> JointMixture::conditional_given_sentence(std::string_view sentence) const {
    auto s = sentence_index(sentence);
    if (!s) throw ConditioningError("sentence '" + std::string(sentence) + "' has zero predictive probability");
    const auto joint = predictive_joint();
    const std::size_t ni = interpretations_.size();
    std::vector<double> out(joint.begin() + static_cast<std::ptrdiff_t>(*s * ni),
                            joint.begin() + static_cast<std::ptrdiff_t>((*s + 1) * ni));
    double z = 0.0;
    for (double v : out) z += v;
    if (z <= 0.0) throw ConditioningError("sentence '" + std::string(sentence) + "' has zero predictive probability");
    for (double& v : out) v /= z;
    return out;
}

std::vector<double> JointMixture::conditional_given_interpretation(std::string_view label) const {
    auto i = interpretation_index(label);
    if (!i) throw ConditioningError("unknown interpretation '" + std::string(label) + "'");
    const auto joint = predictive_joint();
    const std::size_t ni = interpretations_.size();
    std::vector<double> out(sentences_.size());
    double z = 0.0;
    for (std::size_t s = 0; s < out.size(); ++s) {
        out[s] = joint[s * ni + *i];
        z += out[s];
    }
    if (z <= 0.0)
        throw ConditioningError("interpretation '" + std::string(label) + "' has zero predictive probability");
    for (double& v : out) v /= z;
    return out;
}

std::optional<std::size_t> JointMixture::find(const JointTable& t) const {
    std::vector<double> d;
    try {
        d = dense(t);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    for (std::size_t h = 0; h < dense_.size(); ++h)
        if (dense_[h] == d) return h;
    return std::nullopt;
}

std::vector<std::string> load_inventory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open inventory '" + path + "'");
    try {
        return parse_inventory(in);
    } catch (const ParseError& e) {
        throw e.in_source(path);
    }
}

std::vector<FormMeaningPair> load_pairs(const std::string& path, std::span<const std::string> inventory) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open pairs file '" + path + "'");
    try {
        return parse_pairs(in, inventory);
    } catch (const ParseError& e) {
        throw e.in_source(path);
    }
}

JointTable load_joint_table(const std::string& path, std::span<const std::string> inventory) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open joint table '" + path + "'");
    try {
        return parse_joint_table(in, std::filesystem::path(path).stem().string(), inventory);
    } catch (const ParseError& e) {
        throw e.in_source(path);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

JointMixture load_joint_class(const std::string& manifest, std::vector<std::string> inventory, int param_bits) {
    std::ifstream in(manifest);
    if (!in) throw Error("cannot open class manifest '" + manifest + "'");
    const auto dir = std::filesystem::path(manifest).parent_path();
    std::vector<JointTable> tables;
    std::vector<double> priors;
    std::size_t with_prior = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string key, file, opt;
        if (!(words >> key)) continue;
        if (key != "hypothesis:" || !(words >> file))
            throw ParseError("expected 'hypothesis: <path> [prior=<p>]'", line_no, 1).in_source(manifest);
        double prior = 0.0;
        if (words >> opt) {
            const char* first = opt.data() + 6;
            const char* last = opt.data() + opt.size();
            auto [ptr, ec] = std::from_chars(first, last, prior);
            if (opt.rfind("prior=", 0) != 0 || ec != std::errc() || ptr != last)
                throw ParseError("invalid option '" + opt + "'", line_no).in_source(manifest);
            ++with_prior;
        }
        if (words >> opt) throw ParseError("trailing text '" + opt + "'", line_no).in_source(manifest);
        const auto p = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : dir / file;
        tables.push_back(load_joint_table(p.string(), inventory));
        priors.push_back(prior);
    }
    if (with_prior != 0 && with_prior != tables.size())
        throw ValidationError("either every table or none must carry a prior");
    return JointMixture(std::move(tables), std::move(inventory),
                        with_prior ? std::optional<std::vector<double>>(priors) : std::nullopt, param_bits);
}

JointMixture learn_joint(const JointMixture& prior, std::span<const FormMeaningPair> pairs) {
    JointMixture m = prior;
    for (const auto& p : pairs) m.observe(p);
    return m;
}

namespace {

// Posterior-predictive joint for given log2 evidence (prior included).
void predictive_from(const JointMixture& m, std::vector<double> log_joint, std::vector<double>& out) {
    const auto w = normalize_log2(std::move(log_joint));
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t h = 0; h < w.size(); ++h) {
        if (w[h] == 0.0) continue;
        const auto& d = m.dense(h);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[h] * d[c];
    }
}

StepMetrics& accumulate(StepMetrics& a, const StepMetrics& b, double w) {
    a.squared_error += w * b.squared_error;
    a.tv_squared += w * b.tv_squared;
    a.overgeneral += w * b.overgeneral;
    a.undergeneral += w * b.undergeneral;
    return a;
}

} // namespace

ConvergenceProfile joint_error_profile(const JointMixture& prior, const JointTable& truth, const ProfileConfig& cfg) {
    check_underestimation_factor(cfg.f);
    const std::size_t outcomes = prior.outcome_count();
    if (cfg.reference_symbol < 0 || static_cast<std::size_t>(cfg.reference_symbol) >= outcomes)
        throw ParameterError("reference outcome outside the joint space");
    const auto mu = prior.dense(truth);
    const std::size_t hyps = prior.size();

    ConvergenceProfile profile;
    profile.mode = cfg.mode;
    profile.seed = cfg.seed;
    profile.f = cfg.f;
    {
        const auto ref = static_cast<std::size_t>(cfg.reference_symbol);
        const std::size_t ni = prior.interpretations().size();
        profile.reference_symbol = prior.sentences()[ref / ni] + "\t" + prior.interpretations()[ref % ni];
    }
    const auto idx = prior.find(truth);
    profile.truth_in_class = idx.has_value();
    double kraft = 0.0;
    for (double b : prior.description_bits()) kraft += std::exp2(-b);
    double truth_bits = table_code_length(truth, prior.interpretations().size(), cfg.param_bits);
    if (idx) {
        truth_bits = (prior.priors_overridden_ || kraft > 1.0) ? -std::log2(prior.prior_weights()[*idx])
                                                               : prior.description_bits()[*idx];
    }
    profile.bounds = make_bounds(truth_bits, cfg.f);
    if (cfg.horizon == 0) return profile;

    std::vector<double> base(hyps);
    {
        const auto ev = prior.log2_evidence();
        for (std::size_t h = 0; h < hyps; ++h) base[h] = ev[h] + std::log2(prior.prior_weights()[h]);
    }

    if (cfg.mode == ProfileMode::Exact) {
        // Outcomes with identical likelihood under every hypothesis are
        // interchangeable for the posterior; enumerate counts per group.
        std::map<std::vector<double>, std::size_t> group_of;
        std::vector<std::vector<double>> group_log2p; // per group, per hypothesis
        std::vector<double> group_mu;
        for (std::size_t c = 0; c < outcomes; ++c) {
            if (mu[c] <= 0.0) continue;
            std::vector<double> key(hyps);
            for (std::size_t h = 0; h < hyps; ++h) key[h] = prior.dense(h)[c];
            auto [it, inserted] = group_of.emplace(key, group_log2p.size());
            if (inserted) {
                std::vector<double> lp(hyps);
                for (std::size_t h = 0; h < hyps; ++h) lp[h] = key[h] > 0.0 ? std::log2(key[h]) : -kInf;
                group_log2p.push_back(std::move(lp));
                group_mu.push_back(0.0);
            }
            group_mu[it->second] += mu[c];
        }
        const std::size_t groups = group_mu.size();
        // Compositions of horizon-1 into `groups` parts.
        double leaves = 1.0;
        for (std::size_t k = 1; k < groups; ++k)
            leaves = leaves * static_cast<double>(cfg.horizon - 1 + k) / static_cast<double>(k);
        if (leaves > static_cast<double>(cfg.leaf_budget))
            throw BudgetExceededError("exact enumeration needs more than " + std::to_string(cfg.leaf_budget) +
                                      " count vectors; use monte-carlo mode");

        std::vector<StepMetrics> sums(cfg.horizon);
        std::vector<std::size_t> count(groups, 0);
        std::vector<double> xi(outcomes);
        std::vector<double> log_joint(hyps);
        for (std::size_t n = 0; n < cfg.horizon; ++n) {
            // Depth-first over count vectors in lexicographic order.
            auto recurse = [&](auto&& self, std::size_t g, std::size_t remaining, double log_weight) -> void {
                if (g + 1 == groups) {
                    count[g] = remaining;
                    const double lw = log_weight - std::lgamma(static_cast<double>(remaining) + 1.0) +
                                      static_cast<double>(remaining) * std::log(group_mu[g]);
                    for (std::size_t h = 0; h < hyps; ++h) {
                        double v = base[h];
                        for (std::size_t q = 0; q < groups && v != -kInf; ++q)
                            if (count[q]) v += group_log2p[q][h] == -kInf ? -kInf : static_cast<double>(count[q]) * group_log2p[q][h];
                        log_joint[h] = v;
                    }
                    predictive_from(prior, log_joint, xi);
                    accumulate(sums[n], step_metrics(xi, mu, cfg.reference_symbol, cfg.f),
                               std::exp(lw + std::lgamma(static_cast<double>(n) + 1.0)));
                    return;
                }
                for (std::size_t c = 0; c <= remaining; ++c) {
                    count[g] = c;
                    self(self, g + 1, remaining - c,
                         log_weight - std::lgamma(static_cast<double>(c) + 1.0) + static_cast<double>(c) * std::log(group_mu[g]));
                }
            };
            recurse(recurse, 0, n, 0.0);
        }
        finish_steps(profile, sums, {});
        return profile;
    }

    if (cfg.trials == 0) throw ParameterError("monte-carlo mode needs at least one trial");
    profile.trials = cfg.trials;
    std::vector<StepMetrics> sum(cfg.horizon), sq(cfg.horizon);
    std::vector<double> xi(outcomes);
    std::vector<double> log2p(hyps * outcomes);
    for (std::size_t h = 0; h < hyps; ++h)
        for (std::size_t c = 0; c < outcomes; ++c)
            log2p[h * outcomes + c] = prior.dense(h)[c] > 0.0 ? std::log2(prior.dense(h)[c]) : -kInf;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        Rng rng(Rng::derive(cfg.seed, trial));
        std::vector<double> log_joint = base;
        for (std::size_t d = 0; d < cfg.horizon; ++d) {
            predictive_from(prior, log_joint, xi);
            const auto m = step_metrics(xi, mu, cfg.reference_symbol, cfg.f);
            accumulate(sum[d], m, 1.0);
            accumulate(sq[d], StepMetrics{m.squared_error * m.squared_error, m.tv_squared * m.tv_squared,
                                          m.overgeneral * m.overgeneral, m.undergeneral * m.undergeneral},
                       1.0);
            const std::size_t c = rng.categorical(mu);
            for (std::size_t h = 0; h < hyps; ++h) log_joint[h] += log2p[h * outcomes + c];
        }
    }
    const double n = static_cast<double>(cfg.trials);
    std::vector<StepMetrics> mean(cfg.horizon), ci(cfg.horizon);
    auto half = [&](double s, double s2) {
        if (cfg.trials < 2) return 0.0;
        return 1.959963984540054 * std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0)) / n);
    };
    for (std::size_t d = 0; d < cfg.horizon; ++d) {
        accumulate(mean[d], sum[d], 1.0 / n);
        ci[d] = {half(sum[d].squared_error, sq[d].squared_error), half(sum[d].tv_squared, sq[d].tv_squared),
                 half(sum[d].overgeneral, sq[d].overgeneral), half(sum[d].undergeneral, sq[d].undergeneral)};
    }
    finish_steps(profile, mean, ci);
    return profile;
}

std::vector<FormMeaningPair> sample_pairs(const JointTable& table, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> probs;
    for (const auto& c : table.cells) probs.push_back(c.prob);
    std::vector<FormMeaningPair> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = table.cells[rng.categorical(probs)];
        out.push_back({split_words(c.sentence), c.interpretation, 0});
    }
    return out;
}

} // namespace simplab
