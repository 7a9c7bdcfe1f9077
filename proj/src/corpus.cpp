#include "lbg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lbg {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            current.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!current.empty()) {
            if (current.size() >= 2) tokens.push_back(current);
            current.clear();
        }
    }
    if (current.size() >= 2) tokens.push_back(current);
    return tokens;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words = {
        "about", "after", "all", "also", "an", "and", "any", "are", "as", "at",
        "be", "because", "been", "but", "by", "can", "could", "did", "do",
        "does", "for", "from", "had", "has", "have", "he", "her", "here",
        "him", "his", "how", "if", "in", "into", "is", "it", "its", "just",
        "me", "more", "most", "my", "no", "not", "of", "on", "only", "or",
        "other", "our", "out", "over", "she", "so", "some", "such", "than",
        "that", "the", "their", "them", "then", "there", "these", "they",
        "this", "those", "through", "to", "under", "up", "very", "was", "we",
        "were", "what", "when", "where", "which", "who", "why", "will",
        "with", "would", "you", "your"};
    return words;
}

Codebook build_codebook(const RawCorpus& corpus, const std::set<std::string>& stopwords,
                        int min_df) {
    require(!corpus.docs.empty(), "build_codebook: empty corpus");
    std::map<std::string, int> df; // lexicographic order gives stable indices
    for (const TokenCounts& doc : corpus.docs) {
        for (const auto& [word, count] : doc) {
            if (count > 0) ++df[word];
        }
    }
    Codebook cb;
    for (const auto& [word, freq] : df) {
        if (freq < min_df) continue;
        if (stopwords.count(word)) continue;
        cb.words.push_back(word);
        cb.document_frequency.push_back(freq);
    }
    if (cb.words.empty())
        throw std::runtime_error("build_codebook: no token survives filtering");
    cb.rebuild_index();
    return cb;
}

namespace {

DocumentMatrix vectorize_impl(const RawCorpus& corpus, const Codebook& codebook, bool tfidf,
                              std::size_t idf_docs) {
    const std::size_t m = corpus.docs.size();
    const std::size_t n = codebook.size();
    require(m > 0, "vectorize: empty corpus");

    std::vector<double> idf(n, 1.0);
    if (tfidf) {
        const double idf_m = static_cast<double>(idf_docs > 0 ? idf_docs : m);
        for (std::size_t i = 0; i < n; ++i) {
            idf[i] = std::log((1.0 + idf_m) /
                              (1.0 + static_cast<double>(codebook.document_frequency[i]))) +
                     1.0;
        }
    }

    DocumentMatrix out(m, n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double doc_total = 0.0;
        for (const auto& [word, count] : corpus.docs[j]) {
            auto it = codebook.index.find(word);
            if (it == codebook.index.end()) continue; // out-of-vocabulary: dropped
            out(j, it->second) = static_cast<double>(count);
            doc_total += count;
        }
        if (doc_total <= 0.0)
            throw std::runtime_error("vectorize: document " + std::to_string(j + 1) +
                                     " has no in-vocabulary token");
        if (tfidf) {
            for (std::size_t i = 0; i < n; ++i)
                out(j, i) = out(j, i) / doc_total * idf[i];
        }
    }
    return out;
}

} // namespace

DocumentMatrix vectorize_tfidf(const RawCorpus& corpus, const Codebook& codebook,
                               std::size_t idf_docs) {
    return vectorize_impl(corpus, codebook, true, idf_docs);
}

DocumentMatrix vectorize_counts(const RawCorpus& corpus, const Codebook& codebook) {
    return vectorize_impl(corpus, codebook, false, 0);
}

RawCorpus load_plaintext(const std::string& path, const std::set<std::string>& stopwords) {
    std::ifstream in = open_or_throw(path);
    RawCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        TokenCounts doc;
        for (const std::string& tok : tokenize(line)) {
            if (stopwords.count(tok)) continue;
            ++doc[tok];
        }
        if (doc.empty()) parse_fail(path, lineno, "document has no usable token");
        corpus.docs.push_back(std::move(doc));
    }
    if (corpus.docs.empty()) throw std::runtime_error(path + ": no documents");
    return corpus;
}

std::vector<int> load_labels(const std::string& path, std::size_t expected_docs) {
    std::ifstream in = open_or_throw(path);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            parse_fail(path, lineno, "expected an integer label");
        }
    }
    if (labels.size() != expected_docs)
        throw std::runtime_error(path + ": " + std::to_string(labels.size()) +
                                 " labels for " + std::to_string(expected_docs) + " documents");
    return labels;
}

std::pair<RawCorpus, Codebook> load_docword(const std::string& docword_path,
                                            const std::string& vocab_path) {
    Codebook cb;
    {
        std::ifstream vin = open_or_throw(vocab_path);
        std::string word;
        while (std::getline(vin, word)) {
            if (!word.empty() && word.back() == '\r') word.pop_back();
            if (word.empty()) continue;
            cb.words.push_back(word);
        }
        if (cb.words.empty()) throw std::runtime_error(vocab_path + ": empty vocabulary");
    }

    std::ifstream in = open_or_throw(docword_path);
    std::size_t lineno = 0;
    auto read_header = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) parse_fail(docword_path, lineno + 1, std::string("missing header: ") + what);
        ++lineno;
        try {
            long v = std::stol(line);
            if (v < 0) throw std::out_of_range("negative");
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            parse_fail(docword_path, lineno, std::string("bad header value for ") + what);
        }
    };
    const std::size_t m = read_header("document count");
    const std::size_t n = read_header("vocabulary size");
    const std::size_t nnz = read_header("non-zero count");
    if (m == 0) parse_fail(docword_path, 1, "document count is zero");
    if (n != cb.words.size())
        throw std::runtime_error(docword_path + ": header vocabulary size " + std::to_string(n) +
                                 " does not match " + vocab_path + " (" +
                                 std::to_string(cb.words.size()) + " words)");

    RawCorpus corpus;
    corpus.docs.resize(m);
    std::vector<int> df(n, 0);
    std::string line;
    std::size_t seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long doc_id = 0, word_id = 0, count = 0;
        if (!(ls >> doc_id >> word_id >> count))
            parse_fail(docword_path, lineno, "expected 'docID wordID count'");
        if (doc_id < 1 || static_cast<std::size_t>(doc_id) > m)
            parse_fail(docword_path, lineno, "docID out of range");
        if (word_id < 1 || static_cast<std::size_t>(word_id) > n)
            parse_fail(docword_path, lineno, "wordID out of range");
        if (count < 1) parse_fail(docword_path, lineno, "count must be positive");
        const std::string& word = cb.words[static_cast<std::size_t>(word_id - 1)];
        int& slot = corpus.docs[static_cast<std::size_t>(doc_id - 1)][word];
        if (slot == 0) ++df[static_cast<std::size_t>(word_id - 1)];
        slot += static_cast<int>(count);
        ++seen;
    }
    if (seen != nnz)
        throw std::runtime_error(docword_path + ": header promised " + std::to_string(nnz) +
                                 " entries, found " + std::to_string(seen));
    for (std::size_t j = 0; j < m; ++j) {
        if (corpus.docs[j].empty())
            throw std::runtime_error(docword_path + ": document " + std::to_string(j + 1) +
                                     " has no entries");
    }
    cb.document_frequency = std::move(df);
    cb.rebuild_index();
    return {std::move(corpus), std::move(cb)};
}

void save_codebook(const Codebook& codebook, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < codebook.words.size(); ++i)
        out << codebook.words[i] << '\t' << codebook.document_frequency[i] << '\n';
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    Codebook cb;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) parse_fail(path, lineno, "expected 'word<TAB>df'");
        cb.words.push_back(line.substr(0, tab));
        try {
            cb.document_frequency.push_back(std::stoi(line.substr(tab + 1)));
        } catch (const std::exception&) {
            parse_fail(path, lineno, "bad document frequency");
        }
    }
    if (cb.words.empty()) throw std::runtime_error(path + ": empty codebook");
    cb.rebuild_index();
    return cb;
}

} // namespace lbg
