#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbg/matrix.hpp"

namespace lbg {

// Mixture-of-unigrams baseline: one topic per document, multinomial word die
// per topic.
struct MouModel {
    std::size_t k = 0;
    std::size_t n = 0;
    std::vector<double> lambda;
    Matrix beta; // k x n, rows sum to 1
};

struct MouConfig {
    int max_iters = 200;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    double alpha_smooth = 1e-2; // additive smoothing per word
};

struct MouFitInfo {
    int iterations = 0;
    bool converged = false;     // log-likelihood change fell below rel_tol
    std::vector<double> loglik; // per-iteration observed-data log-likelihood
};

// Multinomial-mixture EM on integer counts (non-integer input is rejected).
MouModel mou_fit(const DocumentMatrix& counts, std::size_t k, const MouConfig& config,
                 MouFitInfo* info = nullptr);

struct MouClassification {
    std::size_t topic = 0;
    std::vector<double> posterior;
};

MouClassification mou_classify(std::span<const double> counts_row, const MouModel& model);

// Observed-data log-likelihood of a count matrix under the model.
double mou_loglik(const DocumentMatrix& counts, const MouModel& model);

void save_mou_model_json(const MouModel& model, const std::string& path);
MouModel load_mou_model_json(const std::string& path);

} // namespace lbg
