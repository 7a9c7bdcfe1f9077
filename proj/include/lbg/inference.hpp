#pragma once

#include <vector>

#include "lbg/matrix.hpp"
#include "lbg/model.hpp"

namespace lbg {

struct InferenceResult {
    std::vector<std::uint8_t> x; // keyword indicator row
    std::vector<double> mu;      // posterior over topics, sums to 1
    double log_prob = 0.0;       // log Pr(d)
    std::size_t map_topic = 0;   // argmax_s mu_s, lowest index on ties
};

// Two-step indicator estimate for a document the model has not seen:
// score the top-q_s indicator of every topic, then keep the top
// round(sum_s mu_s q_s) entries under the resulting posterior weights.
std::vector<std::uint8_t> estimate_indicator_novel(std::span<const double> doc,
                                                   const ModelParams& params);

// Posterior, document log-probability and MAP topic for a novel document.
InferenceResult infer(std::span<const double> doc, const ModelParams& params);

} // namespace lbg
