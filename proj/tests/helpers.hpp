#pragma once

#include <random>
#include <vector>

#include "lbg/matrix.hpp"
#include "lbg/model.hpp"

namespace testutil {

// A valid model with values drawn away from the clamp boundaries.
inline lbg::ModelParams random_params(std::size_t k, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    std::uniform_real_distribution<double> mean(0.0, 3.0);
    std::uniform_real_distribution<double> var(0.3, 2.0);

    lbg::ModelParams params;
    params.k = k;
    params.n = n;
    params.lambda.resize(k);
    double total = 0.0;
    for (auto& l : params.lambda) {
        l = unit(rng);
        total += l;
    }
    for (auto& l : params.lambda) l /= total;
    params.p = lbg::Matrix(k, n);
    params.c = lbg::Matrix(k, n);
    params.sigma2 = lbg::Matrix(k, n);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            params.p(s, i) = unit(rng);
            params.c(s, i) = mean(rng);
            params.sigma2(s, i) = var(rng);
        }
    }
    params.cross_c.resize(n);
    params.cross_sigma2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        params.cross_c[i] = mean(rng);
        params.cross_sigma2[i] = var(rng);
    }
    params.q.resize(k);
    std::uniform_int_distribution<int> qdist(1, static_cast<int>(n));
    for (auto& qs : params.q) qs = qdist(rng);
    return params;
}

// Strictly positive document rows.
inline lbg::DocumentMatrix random_documents(std::size_t m, std::size_t n,
                                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(0.05, 3.0);
    lbg::DocumentMatrix docs(m, n);
    for (auto& v : docs.data()) v = value(rng);
    return docs;
}

// Random indicators with at least one keyword per row.
inline lbg::IndicatorMatrix random_indicators(std::size_t m, std::size_t n,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.4);
    lbg::IndicatorMatrix x(m, n);
    for (std::size_t j = 0; j < m; ++j) {
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            const bool v = coin(rng);
            x.set(j, i, v);
            any = any || v;
        }
        if (!any) x.set(j, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng), true);
    }
    return x;
}

// Column-normalized random responsibilities.
inline lbg::PosteriorMatrix random_posteriors(std::size_t k, std::size_t m,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    lbg::PosteriorMatrix mu(k, m);
    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            mu(s, j) = unit(rng);
            total += mu(s, j);
        }
        for (std::size_t s = 0; s < k; ++s) mu(s, j) /= total;
    }
    return mu;
}

} // namespace testutil
