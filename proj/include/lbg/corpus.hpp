#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lbg/matrix.hpp"

namespace lbg {

// A document is an unordered bag of tokens, kept as token -> count.
using TokenCounts = std::map<std::string, int>;

struct RawCorpus {
    std::vector<TokenCounts> docs;
    std::vector<int> labels; // optional, empty when absent; values are 1-based

    std::size_t size() const { return docs.size(); }
};

// Fixed vocabulary mapping words to stable indices 0..n-1.
struct Codebook {
    std::vector<std::string> words;
    std::vector<int> document_frequency;
    std::unordered_map<std::string, std::size_t> index;

    std::size_t size() const { return words.size(); }

    void rebuild_index() {
        index.clear();
        for (std::size_t i = 0; i < words.size(); ++i) index[words[i]] = i;
    }
};

// Lowercase, split on non-alphanumeric, drop tokens shorter than 2 chars.
std::vector<std::string> tokenize(const std::string& text);

// A small default English stop-word list; callers may extend or replace it.
const std::set<std::string>& default_stopwords();

// All tokens with document frequency >= min_df and not in stopwords,
// ordered lexicographically. Throws if nothing survives filtering.
Codebook build_codebook(const RawCorpus& corpus, const std::set<std::string>& stopwords,
                        int min_df);

// tf-idf weights: tf = count / in-vocabulary doc length,
// idf = ln((1+m)/(1+df)) + 1. Out-of-vocabulary tokens are dropped;
// a document with no in-vocabulary token is an error. idf_docs overrides the
// document count m used in idf (0 = this corpus), so novel documents can be
// weighted with the statistics of the training corpus.
DocumentMatrix vectorize_tfidf(const RawCorpus& corpus, const Codebook& codebook,
                               std::size_t idf_docs = 0);

// Raw per-document counts over the codebook (same vocabulary intersection
// rule as vectorize_tfidf). Consumed by count-based models.
DocumentMatrix vectorize_counts(const RawCorpus& corpus, const Codebook& codebook);

// One document per UTF-8 line. Documents with no token after tokenization
// (and removal of `stopwords`, which may be empty) are rejected.
RawCorpus load_plaintext(const std::string& path,
                         const std::set<std::string>& stopwords = {});

// One integer label per line; must match the corpus document count.
std::vector<int> load_labels(const std::string& path, std::size_t expected_docs);

// UCI bag-of-words layout: three header lines (docs, vocab, nnz) followed by
// nnz lines of "docID wordID count" with 1-based ids, plus a sibling
// vocabulary file of one word per line.
std::pair<RawCorpus, Codebook> load_docword(const std::string& docword_path,
                                            const std::string& vocab_path);

void save_codebook(const Codebook& codebook, const std::string& path);
Codebook load_codebook(const std::string& path);

} // namespace lbg
