#include "lbg/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lbg/core.hpp"
#include "lbg/model.hpp"

namespace lbg {

namespace {

std::size_t draw_categorical(const std::vector<double>& weights, std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cum = 0.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        cum += weights[s];
        if (u < cum) return s;
    }
    return weights.size() - 1;
}

} // namespace

SampledDocument sample_document(const ModelParams& params, int doc_length,
                                std::mt19937_64& rng) {
    require(doc_length >= 1, "sample_document: doc_length must be >= 1");
    for (double v : params.c.data())
        require(v >= 0.0, "sample_document: negative keyword mean");
    for (double v : params.cross_c)
        require(v >= 0.0, "sample_document: negative cross mean");

    SampledDocument out;
    out.topic = draw_categorical(params.lambda, rng);
    out.indicator.resize(params.n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < params.n; ++i)
        out.indicator[i] = unit(rng) < params.p(out.topic, i) ? 1 : 0;

    // word die: keyword faces take the topic mean, the rest the cross mean
    std::vector<double> cum(params.n);
    double z = 0.0;
    for (std::size_t i = 0; i < params.n; ++i) {
        const double face = (out.indicator[i] ? params.c(out.topic, i) : params.cross_c[i]) /
                            static_cast<double>(doc_length);
        z += face;
        cum[i] = z;
    }
    if (z <= 0.0) throw std::runtime_error("sample_document: degenerate word die");
    for (double& v : cum) v /= z;

    out.counts.assign(params.n, 0.0);
    for (int w = 0; w < doc_length; ++w) {
        const double u = unit(rng);
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t face = std::min(
            static_cast<std::size_t>(it - cum.begin()), params.n - 1);
        out.counts[face] += 1.0;
    }
    return out;
}

SyntheticCorpus sample_corpus(const ModelParams& params, std::size_t docs,
                              int doc_length, std::uint64_t seed) {
    params.validate();
    require(docs >= 1, "sample_corpus: need at least one document");

    SyntheticCorpus corpus;
    corpus.params_used = params;
    corpus.counts = Matrix(docs, params.n);
    corpus.true_topics.resize(docs);
    corpus.true_indicators = IndicatorMatrix(docs, params.n);

    std::mt19937_64 rng(seed);
    for (std::size_t j = 0; j < docs; ++j) {
        SampledDocument doc = sample_document(params, doc_length, rng);
        corpus.true_topics[j] = doc.topic;
        for (std::size_t i = 0; i < params.n; ++i) {
            corpus.counts(j, i) = doc.counts[i];
            corpus.true_indicators.set(j, i, doc.indicator[i] != 0);
        }
    }
    return corpus;
}

ModelParams make_block_template(const BlockTemplateConfig& config) {
    const std::size_t k = config.k, n = config.n;
    require(k >= 1 && n >= k, "block template: need n >= k >= 1");
    require(config.keyword_fraction > 0.0 && config.keyword_fraction <= 1.0,
            "block template: keyword_fraction outside (0, 1]");

    ModelParams params;
    params.k = k;
    params.n = n;
    if (config.lambda.empty()) {
        params.lambda.assign(k, 1.0 / static_cast<double>(k));
    } else {
        require(config.lambda.size() == k, "block template: lambda size mismatch");
        double total = std::accumulate(config.lambda.begin(), config.lambda.end(), 0.0);
        require(total > 0.0, "block template: lambda must have positive mass");
        params.lambda = config.lambda;
        for (double& l : params.lambda) l /= total;
    }

    const std::size_t keyword_words = std::max(
        k, static_cast<std::size_t>(std::llround(config.keyword_fraction * static_cast<double>(n))));
    const std::size_t usable = std::min(keyword_words, n);

    params.p = Matrix(k, n, config.p_other);
    params.c = Matrix(k, n, config.mean_cross);
    params.sigma2 = Matrix(k, n, config.sigma2);
    params.cross_c.assign(n, config.mean_cross);
    params.cross_sigma2.assign(n, config.sigma2);

    // contiguous disjoint blocks over the first `usable` words
    for (std::size_t s = 0; s < k; ++s) {
        const std::size_t begin = s * usable / k;
        const std::size_t end = (s + 1) * usable / k;
        for (std::size_t i = begin; i < end; ++i) {
            params.p(s, i) = config.p_keyword;
            params.c(s, i) = config.mean_keyword;
        }
    }

    params.q.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) expected += params.p(s, i);
        params.q[s] = std::clamp(round_half_up(expected), 1, static_cast<int>(n));
    }
    params.validate();
    return params;
}

Matrix corpus_matrix(const SyntheticCorpus& corpus, bool apply_tfidf) {
    if (!apply_tfidf) return corpus.counts;
    const std::size_t m = corpus.counts.rows(), n = corpus.counts.cols();
    std::vector<double> df(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (corpus.counts(j, i) > 0.0) df[i] += 1.0;
        }
    }
    Matrix out(m, n);
    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += corpus.counts(j, i);
        for (std::size_t i = 0; i < n; ++i) {
            const double idf = std::log((1.0 + static_cast<double>(m)) / (1.0 + df[i])) + 1.0;
            out(j, i) = corpus.counts(j, i) / total * idf;
        }
    }
    return out;
}

void save_synthetic_corpus(const SyntheticCorpus& corpus,
                           const std::string& docword_path,
                           const std::string& vocab_path,
                           const std::string& topics_path,
                           const std::string& truth_model_path) {
    const std::size_t m = corpus.counts.rows(), n = corpus.counts.cols();

    {
        std::ofstream vocab(vocab_path);
        if (!vocab) throw std::runtime_error("cannot write " + vocab_path);
        char buf[16];
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "w%06zu", i + 1);
            vocab << buf << '\n';
        }
    }
    {
        std::size_t nnz = 0;
        for (double v : corpus.counts.data()) {
            if (v > 0.0) ++nnz;
        }
        std::ofstream out(docword_path);
        if (!out) throw std::runtime_error("cannot write " + docword_path);
        out << m << '\n' << n << '\n' << nnz << '\n';
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const double v = corpus.counts(j, i);
                if (v > 0.0)
                    out << (j + 1) << ' ' << (i + 1) << ' '
                        << static_cast<long long>(std::llround(v)) << '\n';
            }
        }
    }
    {
        std::ofstream out(topics_path);
        if (!out) throw std::runtime_error("cannot write " + topics_path);
        for (std::size_t topic : corpus.true_topics) out << (topic + 1) << '\n';
    }
    save_model_json(corpus.params_used, truth_model_path, hash_file(vocab_path), m);
}

} // namespace lbg
