#include "simplab/corpus_stats.hpp"

#include <fstream>
#include <sstream>

namespace simplab {

EncodingError::EncodingError(std::uint64_t offset)
    : Error("invalid UTF-8 at byte offset " + std::to_string(offset)), offset_(offset) {}

std::optional<std::size_t> find_invalid_utf8(std::string_view bytes) {
    const auto* s = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    std::size_t i = 0;
    while (i < n) {
        const unsigned c = s[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len = 0;
        unsigned lo = 0x80, hi = 0xBF; // range of the second byte
        if (c >= 0xC2 && c <= 0xDF) {
            len = 2;
        } else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            if (c == 0xE0) lo = 0xA0;
            if (c == 0xED) hi = 0x9F; // surrogates
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            if (c == 0xF0) lo = 0x90;
            if (c == 0xF4) hi = 0x8F;
        } else {
            return i;
        }
        for (std::size_t k = 1; k < len; ++k) {
            if (i + k >= n) return i;
            const unsigned b = s[i + k];
            const unsigned l = k == 1 ? lo : 0x80, h = k == 1 ? hi : 0xBF;
            if (b < l || b > h) return i;
        }
        i += len;
    }
    return std::nullopt;
}

TokenPattern::TokenPattern(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) {
        if (!text_.empty()) text_.push_back(' ');
        text_ += w;
        tokens_.push_back(w == "*" ? std::nullopt : std::optional<std::string>(w));
    }
    if (tokens_.empty()) throw ParameterError("empty pattern");
}

std::uint64_t TokenPattern::count_in(const std::vector<std::string>& words) const {
    if (words.size() < tokens_.size()) return 0;
    std::uint64_t count = 0;
    for (std::size_t i = 0; i + tokens_.size() <= words.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < tokens_.size() && ok; ++k)
            ok = !tokens_[k] || *tokens_[k] == words[i + k];
        count += ok ? 1 : 0;
    }
    return count;
}

double per_million(std::uint64_t count, std::uint64_t word_count) {
    if (word_count == 0) throw ParameterError("rate is undefined on a corpus with no words");
    return static_cast<double>(count) * 1e6 / static_cast<double>(word_count);
}

double occurrence_rate_per_year(std::uint64_t count, std::uint64_t word_count, double words_per_year) {
    if (word_count == 0) throw ParameterError("rate is undefined on a corpus with no words");
    if (!(words_per_year > 0.0)) throw ParameterError("words per year must be positive");
    return static_cast<double>(count) * words_per_year / static_cast<double>(word_count);
}

CorpusStatsBuilder::CorpusStatsBuilder(std::vector<std::string> patterns) {
    for (const auto& p : patterns) {
        patterns_.emplace_back(p);
        stats_.patterns.push_back({patterns_.back().text(), 0});
    }
}

void CorpusStatsBuilder::line(std::string_view text) {
    if (auto bad = find_invalid_utf8(text)) throw EncodingError(consumed_ + *bad);
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) words.push_back(std::move(w));
    if (words.empty() || words.front().front() == '#') return;
    ++stats_.sentence_count;
    stats_.word_count += words.size();
    for (std::size_t i = 0; i < patterns_.size(); ++i) stats_.patterns[i].count += patterns_[i].count_in(words);
}

void CorpusStatsBuilder::feed(std::string_view bytes) {
    hash_.update(bytes);
    pending_.append(bytes);
    std::size_t start = 0;
    for (std::size_t nl; (nl = pending_.find('\n', start)) != std::string::npos; start = nl + 1) {
        line(std::string_view(pending_).substr(start, nl - start));
        consumed_ += nl + 1 - start;
    }
    pending_.erase(0, start);
}

CorpusStats CorpusStatsBuilder::finish() {
    if (!pending_.empty()) {
        line(pending_);
        consumed_ += pending_.size();
        pending_.clear();
    }
    stats_.digests.push_back(hash_.hex_digest());
    return std::move(stats_);
}

CorpusStats ingest(std::istream& in, const std::vector<std::string>& patterns) {
    CorpusStatsBuilder b(patterns);
    std::string chunk(1 << 16, '\0');
    while (in) {
        in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
        b.feed(std::string_view(chunk.data(), static_cast<std::size_t>(in.gcount())));
    }
    return b.finish();
}

CorpusStats ingest_file(const std::string& path, const std::vector<std::string>& patterns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus '" + path + "'");
    return ingest(in, patterns);
}

CorpusStats merge(const CorpusStats& a, const CorpusStats& b) {
    if (a.patterns.size() != b.patterns.size()) throw ParameterError("cannot merge stats with different patterns");
    CorpusStats out = a;
    out.word_count += b.word_count;
    out.sentence_count += b.sentence_count;
    for (std::size_t i = 0; i < out.patterns.size(); ++i) {
        if (out.patterns[i].pattern != b.patterns[i].pattern)
            throw ParameterError("cannot merge stats with different patterns");
        out.patterns[i].count += b.patterns[i].count;
    }
    out.digests.insert(out.digests.end(), b.digests.begin(), b.digests.end());
    return out;
}

} // namespace simplab
