#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lbg/matrix.hpp"
#include "lbg/model.hpp"

namespace lbg {

struct SyntheticCorpus {
    Matrix counts;                 // m x n word counts, every row sums to N
    std::vector<std::size_t> true_topics;
    IndicatorMatrix true_indicators;
    ModelParams params_used;
};

struct SampledDocument {
    std::vector<double> counts;
    std::size_t topic = 0;
    std::vector<std::uint8_t> indicator;
};

// One pass of the generative word-die process: draw a topic, coin-flip the
// keyword indicator, build the word die from keyword/cross means scaled by
// 1/N, then draw N words from it. Means must be non-negative; an all-zero
// die is an error.
SampledDocument sample_document(const ModelParams& params, int doc_length,
                                std::mt19937_64& rng);

SyntheticCorpus sample_corpus(const ModelParams& params, std::size_t docs,
                              int doc_length, std::uint64_t seed);

// Parameters for a synthetic model with disjoint per-topic keyword blocks.
// keyword_fraction < 1 leaves the tail of the vocabulary topic-unspecific:
// those words are only ever drawn through the cross Gaussian.
struct BlockTemplateConfig {
    std::size_t k = 3;
    std::size_t n = 60;
    std::vector<double> lambda;    // empty = uniform
    double keyword_fraction = 1.0; // share of vocabulary covered by blocks
    double p_keyword = 0.9;        // keyword probability inside the own block
    double p_other = 0.01;         // keyword probability elsewhere
    double mean_keyword = 8.0;     // keyword Gaussian mean
    double mean_cross = 2.0;       // cross Gaussian mean
    double sigma2 = 1.0;
};

ModelParams make_block_template(const BlockTemplateConfig& config);

// Counts as fed to fitting, optionally pushed through the tf-idf transform
// for end-to-end pipeline runs (raw counts are the default fitting input for
// sampled corpora).
Matrix corpus_matrix(const SyntheticCorpus& corpus, bool apply_tfidf);

// Writes counts in docword format plus "w000001"-style vocabulary, a
// one-topic-per-line sidecar (1-based) and the ground-truth model JSON.
void save_synthetic_corpus(const SyntheticCorpus& corpus,
                           const std::string& docword_path,
                           const std::string& vocab_path,
                           const std::string& topics_path,
                           const std::string& truth_model_path);

} // namespace lbg
