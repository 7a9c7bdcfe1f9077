#include "lbg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lbg/core.hpp"

namespace lbg {

namespace {

// Indicator of the `count` largest positive entries (value desc, index asc).
std::vector<std::uint8_t> top_entries(std::span<const double> doc, std::size_t count) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        if (doc[i] > 0.0) order.push_back(i);
    }
    count = std::min(count, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count),
                      order.end(), [&doc](std::size_t a, std::size_t b) {
                          if (doc[a] != doc[b]) return doc[a] > doc[b];
                          return a < b;
                      });
    std::vector<std::uint8_t> x(doc.size(), 0);
    for (std::size_t t = 0; t < count; ++t) x[order[t]] = 1;
    return x;
}

std::size_t positive_count(std::span<const double> doc) {
    std::size_t nnz = 0;
    for (double v : doc) {
        if (v > 0.0) ++nnz;
    }
    return nnz;
}

// lambda-weighted posterior over topics for a fixed indicator row.
std::vector<double> posterior_for(std::span<const double> doc,
                                  std::span<const std::uint8_t> x,
                                  const ModelParams& params, double* log_prob) {
    const std::size_t k = params.k;
    std::vector<double> w(k);
    for (std::size_t s = 0; s < k; ++s) {
        const double ll = params.lambda[s] > 0.0
                              ? std::log(params.lambda[s])
                              : -std::numeric_limits<double>::infinity();
        w[s] = ll + log_density_given_topic(doc, x, s, params);
    }
    const double lse = log_sum_exp(w);
    std::vector<double> mu(k);
    if (std::isfinite(lse)) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            mu[s] = std::exp(w[s] - lse);
            total += mu[s];
        }
        for (std::size_t s = 0; s < k; ++s) mu[s] /= total;
    } else {
        std::fill(mu.begin(), mu.end(), 1.0 / static_cast<double>(k));
    }
    if (log_prob) *log_prob = lse;
    return mu;
}

} // namespace

std::vector<std::uint8_t> estimate_indicator_novel(std::span<const double> doc,
                                                   const ModelParams& params) {
    require(doc.size() == params.n, "estimate_indicator_novel: size mismatch");
    const std::size_t nnz = positive_count(doc);
    require(nnz >= 1, "estimate_indicator_novel: all-zero document");

    // step 1: score each topic with its own top-q_s indicator
    std::vector<double> w(params.k);
    for (std::size_t s = 0; s < params.k; ++s) {
        const std::vector<std::uint8_t> xs =
            top_entries(doc, static_cast<std::size_t>(params.q[s]));
        const double ll = params.lambda[s] > 0.0
                              ? std::log(params.lambda[s])
                              : -std::numeric_limits<double>::infinity();
        w[s] = ll + log_density_given_topic(doc, xs, s, params);
    }
    const double lse = log_sum_exp(w);
    std::vector<double> mu_hat(params.k, 1.0 / static_cast<double>(params.k));
    if (std::isfinite(lse)) {
        double total = 0.0;
        for (std::size_t s = 0; s < params.k; ++s) {
            mu_hat[s] = std::exp(w[s] - lse);
            total += mu_hat[s];
        }
        for (std::size_t s = 0; s < params.k; ++s) mu_hat[s] /= total;
    }

    // step 2: keep the posterior-weighted mean keyword count
    double expected = 0.0;
    for (std::size_t s = 0; s < params.k; ++s)
        expected += mu_hat[s] * static_cast<double>(params.q[s]);
    const std::size_t g = static_cast<std::size_t>(
        std::clamp(round_half_up(expected), 1, static_cast<int>(nnz)));
    return top_entries(doc, g);
}

InferenceResult infer(std::span<const double> doc, const ModelParams& params) {
    params.validate();
    InferenceResult result;
    result.x = estimate_indicator_novel(doc, params);
    result.mu = posterior_for(doc, result.x, params, &result.log_prob);
    result.map_topic = 0;
    for (std::size_t s = 1; s < params.k; ++s) {
        if (result.mu[s] > result.mu[result.map_topic]) result.map_topic = s;
    }
    return result;
}

} // namespace lbg
