#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbg/matrix.hpp"

namespace lbg {

// Fitted parameters of the latent Bernoulli-Gauss mixture.
//
// Per topic s and word i: p(s,i) is the probability that word i is a keyword
// under topic s, (c, sigma2) the keyword (topic-specific) Gaussian, and
// (cross_c, cross_sigma2) the shared non-keyword Gaussian per word.
// q[s] is the integer keyword count characteristic of topic s.
struct ModelParams {
    std::size_t k = 0;
    std::size_t n = 0;
    std::vector<double> lambda; // k mixture weights, sums to 1
    Matrix p;                   // k x n keyword probabilities in [0,1]
    Matrix c;                   // k x n keyword Gaussian means
    Matrix sigma2;              // k x n keyword Gaussian variances (floored)
    std::vector<double> cross_c;      // n non-keyword means
    std::vector<double> cross_sigma2; // n non-keyword variances (floored)
    std::vector<int> q;         // k keyword counts, each in [1, n]
    double prob_clamp = 1e-6;   // applied to p before any log

    void validate() const;
};

struct FitConfig {
    std::size_t k = 1;
    int max_iters = 200;
    double epsilon = 1.0;       // stop when sum_s (q_s - sum_i p_si)^2 < epsilon
    std::uint64_t seed = 0;
    double variance_floor = 1e-6;
    double prob_clamp = 1e-6;
    int q_init = 0;             // 0 = max(1, round(0.1 * n))

    void validate() const;
};

struct FitIterationStats {
    int iter = 0;
    double loglik = 0.0;
    double residual = 0.0;
    std::vector<int> q;
};

struct ReseedEvent {
    int iter = 0;
    int topic = 0;
    int doc = 0;
};

struct FitTrace {
    std::vector<FitIterationStats> iterations;
    std::vector<ReseedEvent> reseeds;
    bool converged = false;
};

struct FitResult {
    ModelParams params;
    PosteriorMatrix mu; // k x m
    IndicatorMatrix x;  // m x n
    FitTrace trace;
};

// Model file round-trips exactly: doubles are written with 17 significant
// digits. `codebook_hash` ties a model to the vocabulary it was fit on and
// `trained_docs` preserves the document count needed to reapply idf.
void save_model_json(const ModelParams& params, const std::string& path,
                     const std::string& codebook_hash = "",
                     std::size_t trained_docs = 0);

struct LoadedModel {
    ModelParams params;
    std::string codebook_hash;
    std::size_t trained_docs = 0;
};

LoadedModel load_model_json(const std::string& path);

// CSV with columns iter, loglik, residual, q_1..q_k.
void save_trace_csv(const FitTrace& trace, std::size_t k, const std::string& path);

// FNV-1a 64-bit over the raw file bytes, as 16 hex chars.
std::string hash_file(const std::string& path);
std::string hash_bytes(const std::string& bytes);

// 17-significant-digit decimal form; round-trips any double exactly.
std::string format_double(double v);

} // namespace lbg
