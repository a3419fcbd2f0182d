#include "simplab/corpus.hpp"

#include "simplab/errors.hpp"

#include <fstream>
#include <sstream>

namespace simplab {

Corpus parse_corpus(std::istream& in) {
    Corpus out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream words(line);
        Sentence s;
        s.line = line_no;
        std::string w;
        while (words >> w) {
            if (s.words.empty() && w.front() == '#') break;
            if (w == kEndToken) throw ParseError("reserved token $end in corpus text", line_no);
            s.words.push_back(std::move(w));
        }
        if (!s.words.empty()) out.push_back(std::move(s));
    }
    return out;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file '" + path + "'");
    try {
        return parse_corpus(in);
    } catch (const ParseError& e) {
        throw e.in_source(path);
    }
}

TokenSequence flatten(const Corpus& corpus) {
    TokenSequence out;
    for (const auto& s : corpus) {
        out.insert(out.end(), s.words.begin(), s.words.end());
        out.emplace_back(kEndToken);
    }
    return out;
}

Corpus split_sentences(std::span<const std::string> tokens) {
    Corpus out;
    Sentence cur;
    for (const auto& t : tokens) {
        if (t == kEndToken) {
            out.push_back(std::move(cur));
            cur = Sentence{};
        } else {
            cur.words.push_back(t);
        }
    }
    return out;
}

std::string to_corpus_text(const Corpus& corpus) {
    std::string out;
    for (const auto& s : corpus) {
        for (std::size_t i = 0; i < s.words.size(); ++i) {
            if (i) out.push_back(' ');
            out += s.words[i];
        }
        out.push_back('\n');
    }
    return out;
}

} // namespace simplab
