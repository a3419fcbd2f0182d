#pragma once

#include "simplab/digest.hpp"
#include "simplab/errors.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simplab {

// Invalid UTF-8; `offset` is the 0-based byte offset of the first bad byte.
class EncodingError : public Error {
public:
    explicit EncodingError(std::uint64_t offset);
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

// Offset where the first invalid UTF-8 sequence starts, if any.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

// Whitespace-separated token pattern; "*" matches any single token.
class TokenPattern {
public:
    explicit TokenPattern(std::string_view text);

    const std::string& text() const { return text_; }
    std::size_t length() const { return tokens_.size(); }
    // Matches of the pattern anchored at every position of `words`.
    std::uint64_t count_in(const std::vector<std::string>& words) const;

private:
    std::string text_;
    std::vector<std::optional<std::string>> tokens_; // nullopt = wildcard
};

struct PatternCount {
    std::string pattern;
    std::uint64_t count = 0;
};

struct CorpusStats {
    std::uint64_t word_count = 0;
    std::uint64_t sentence_count = 0;
    std::vector<PatternCount> patterns;
    // SHA-256 of each ingested source, in ingestion order.
    std::vector<std::string> digests;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// count * 1e6 / word_count; throws ParameterError on a corpus with no words.
double per_million(std::uint64_t count, std::uint64_t word_count);

// count * words_per_year / word_count.
double occurrence_rate_per_year(std::uint64_t count, std::uint64_t word_count, double words_per_year);

// Single-pass ingestion of corpus text fed in arbitrary chunks. Lines follow
// the corpus format: blank and '#' lines are skipped, the rest are sentences.
class CorpusStatsBuilder {
public:
    explicit CorpusStatsBuilder(std::vector<std::string> patterns = {});

    void feed(std::string_view bytes);
    // Flushes a trailing line without newline. The builder is spent afterwards.
    CorpusStats finish();

private:
    void line(std::string_view text);

    std::vector<TokenPattern> patterns_;
    CorpusStats stats_;
    Sha256 hash_;
    std::string pending_;
    std::uint64_t consumed_ = 0; // bytes before pending_
};

CorpusStats ingest(std::istream& in, const std::vector<std::string>& patterns = {});
CorpusStats ingest_file(const std::string& path, const std::vector<std::string>& patterns = {});

// Stats of the concatenation of two corpora with the same pattern list.
CorpusStats merge(const CorpusStats& a, const CorpusStats& b);

} // namespace simplab
