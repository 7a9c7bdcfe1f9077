#include "lbg/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace lbg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kDegenerateResponsibility = 1e-12;

double clamp_prob(double p, double clamp) {
    return std::min(std::max(p, clamp), 1.0 - clamp);
}

double sq_distance(std::span<const double> a, std::span<const double> b,
                   const std::vector<std::size_t>& columns) {
    double d = 0.0;
    if (columns.empty()) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = a[i] - b[i];
            d += diff * diff;
        }
    } else {
        for (std::size_t i : columns) {
            const double diff = a[i] - b[i];
            d += diff * diff;
        }
    }
    return d;
}

// Column mean and population variance of every column, variance floored.
void column_stats(const DocumentMatrix& docs, double variance_floor,
                  std::vector<double>& mean, std::vector<double>& var) {
    const std::size_t m = docs.rows(), n = docs.cols();
    mean.assign(n, 0.0);
    var.assign(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        auto row = docs.row(j);
        for (std::size_t i = 0; i < n; ++i) mean[i] += row[i];
    }
    for (std::size_t i = 0; i < n; ++i) mean[i] /= static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        auto row = docs.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = row[i] - mean[i];
            var[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        var[i] = std::max(var[i] / static_cast<double>(m), variance_floor);
}

} // namespace

double log_gaussian(double z, double mean, double variance) {
    const double d = z - mean;
    return -0.5 * (kLog2Pi + std::log(variance)) - d * d / (2.0 * variance);
}

double log_sum_exp(std::span<const double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - mx);
    return mx + std::log(sum);
}

int round_half_up(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

double log_density_given_topic(std::span<const double> doc,
                               std::span<const std::uint8_t> x_row,
                               std::size_t s, const ModelParams& params) {
    require(doc.size() == params.n, "log_density: document size mismatch");
    require(x_row.size() == params.n, "log_density: indicator size mismatch");
    require(s < params.k, "log_density: topic out of range");
    const double clamp = params.prob_clamp;
    double total = 0.0;
    for (std::size_t i = 0; i < params.n; ++i) {
        const double p = clamp_prob(params.p(s, i), clamp);
        if (x_row[i]) {
            total += std::log(p) + log_gaussian(doc[i], params.c(s, i), params.sigma2(s, i));
        } else {
            total += std::log1p(-p) +
                     log_gaussian(doc[i], params.cross_c[i], params.cross_sigma2[i]);
        }
    }
    return total;
}

PosteriorMatrix e_step(const DocumentMatrix& docs, const IndicatorMatrix& x,
                       const ModelParams& params, double* loglik,
                       std::vector<double>* per_doc_loglik) {
    const std::size_t m = docs.rows(), k = params.k;
    require(docs.cols() == params.n, "e_step: vocabulary size mismatch");
    require(x.rows() == m && x.cols() == params.n, "e_step: indicator shape mismatch");

    std::vector<double> log_lambda(k);
    for (std::size_t s = 0; s < k; ++s)
        log_lambda[s] = params.lambda[s] > 0.0
                            ? std::log(params.lambda[s])
                            : -std::numeric_limits<double>::infinity();

    PosteriorMatrix mu(k, m);
    if (per_doc_loglik) per_doc_loglik->assign(m, 0.0);
    double total = 0.0;
    std::vector<double> w(k);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t s = 0; s < k; ++s)
            w[s] = log_lambda[s] + log_density_given_topic(docs.row(j), x.row(j), s, params);
        const double lse = log_sum_exp(w);
        if (std::isfinite(lse)) {
            double colsum = 0.0;
            for (std::size_t s = 0; s < k; ++s) {
                mu(s, j) = std::exp(w[s] - lse);
                colsum += mu(s, j);
            }
            for (std::size_t s = 0; s < k; ++s) mu(s, j) /= colsum;
        } else {
            // every topic underflowed: uniform posterior for this document
            for (std::size_t s = 0; s < k; ++s) mu(s, j) = 1.0 / static_cast<double>(k);
        }
        total += lse;
        if (per_doc_loglik) (*per_doc_loglik)[j] = lse;
    }
    if (loglik) *loglik = total;
    return mu;
}

MStepUpdate m_step(const DocumentMatrix& docs, const IndicatorMatrix& x,
                   const PosteriorMatrix& mu, double variance_floor) {
    const std::size_t m = docs.rows(), n = docs.cols(), k = mu.rows();
    require(mu.cols() == m, "m_step: posterior shape mismatch");
    require(x.rows() == m && x.cols() == n, "m_step: indicator shape mismatch");
    require(variance_floor > 0.0, "m_step: variance_floor must be positive");

    std::vector<double> col_mean, col_var;
    column_stats(docs, variance_floor, col_mean, col_var);

    MStepUpdate up;
    up.lambda.assign(k, 0.0);
    up.p = Matrix(k, n);
    up.c = Matrix(k, n);
    up.sigma2 = Matrix(k, n);

    std::vector<double> wsum(n), wval(n);
    for (std::size_t s = 0; s < k; ++s) {
        double musum = 0.0;
        std::fill(wsum.begin(), wsum.end(), 0.0);
        std::fill(wval.begin(), wval.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double w = mu(s, j);
            musum += w;
            if (w == 0.0) continue;
            auto row = docs.row(j);
            auto xr = x.row(j);
            for (std::size_t i = 0; i < n; ++i) {
                if (!xr[i]) continue;
                wsum[i] += w;
                wval[i] += w * row[i];
            }
        }
        up.lambda[s] = musum / static_cast<double>(m);
        if (musum < kDegenerateResponsibility) up.degenerate_topics.push_back(s);

        for (std::size_t i = 0; i < n; ++i) {
            up.p(s, i) =
                musum >= kDegenerateResponsibility ? std::min(wsum[i] / musum, 1.0) : 0.5;
            up.c(s, i) = wsum[i] > 0.0 ? wval[i] / wsum[i] : col_mean[i];
        }
        // second pass for the weighted variances around the fresh means
        std::fill(wval.begin(), wval.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double w = mu(s, j);
            if (w == 0.0) continue;
            auto row = docs.row(j);
            auto xr = x.row(j);
            for (std::size_t i = 0; i < n; ++i) {
                if (!xr[i]) continue;
                const double d = row[i] - up.c(s, i);
                wval[i] += w * d * d;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            up.sigma2(s, i) = wsum[i] > 0.0
                                  ? std::max(wval[i] / wsum[i], variance_floor)
                                  : col_var[i];
        }
    }
    return up;
}

void estimate_cross_gaussians(const DocumentMatrix& docs, const IndicatorMatrix& x,
                              double variance_floor,
                              std::vector<double>& cross_c,
                              std::vector<double>& cross_sigma2) {
    const std::size_t m = docs.rows(), n = docs.cols();
    require(x.rows() == m && x.cols() == n, "cross gaussians: indicator shape mismatch");

    std::vector<double> col_mean, col_var;
    column_stats(docs, variance_floor, col_mean, col_var);

    cross_c.assign(n, 0.0);
    cross_sigma2.assign(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (std::size_t j = 0; j < m; ++j) {
        auto row = docs.row(j);
        auto xr = x.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            if (xr[i]) continue;
            cross_c[i] += row[i];
            ++count[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] > 0) cross_c[i] /= static_cast<double>(count[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
        auto row = docs.row(j);
        auto xr = x.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            if (xr[i]) continue;
            const double d = row[i] - cross_c[i];
            cross_sigma2[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] > 0) {
            cross_sigma2[i] =
                std::max(cross_sigma2[i] / static_cast<double>(count[i]), variance_floor);
        } else {
            // word is a keyword in every document: full-column fallback
            cross_c[i] = col_mean[i];
            cross_sigma2[i] = col_var[i];
        }
    }
}

std::vector<int> update_q(const Matrix& p, const std::vector<int>& q_prev) {
    const std::size_t k = p.rows(), n = p.cols();
    require(q_prev.size() == k, "update_q: q size mismatch");
    std::vector<int> q_new(k);
    for (std::size_t s = 0; s < k; ++s) {
        const double threshold = static_cast<double>(q_prev[s]) / static_cast<double>(n);
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p(s, i) >= threshold) ++count;
        }
        q_new[s] = std::clamp(count, 1, static_cast<int>(n));
    }
    return q_new;
}

IndicatorMatrix update_indicators(const DocumentMatrix& docs,
                                  const PosteriorMatrix& mu,
                                  const std::vector<int>& q) {
    const std::size_t m = docs.rows(), n = docs.cols(), k = mu.rows();
    require(mu.cols() == m, "update_indicators: posterior shape mismatch");
    require(q.size() == k, "update_indicators: q size mismatch");

    IndicatorMatrix x(m, n);
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < m; ++j) {
        auto row = docs.row(j);
        order.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (row[i] > 0.0) order.push_back(i);
        }
        require(!order.empty(), "update_indicators: all-zero document row");

        double expected = 0.0;
        for (std::size_t s = 0; s < k; ++s)
            expected += mu(s, j) * static_cast<double>(q[s]);
        const std::size_t g = static_cast<std::size_t>(
            std::clamp(round_half_up(expected), 1, static_cast<int>(order.size())));

        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(g),
                          order.end(), [&row](std::size_t a, std::size_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return a < b;
                          });
        for (std::size_t t = 0; t < g; ++t) x.set(j, order[t], true);
    }
    return x;
}

double keyword_constraint_residual(const PosteriorMatrix& mu,
                                   const std::vector<int>& q, const Matrix& p) {
    const std::size_t k = mu.rows(), m = mu.cols();
    require(q.size() == k && p.rows() == k, "constraint residual: shape mismatch");

    std::vector<double> b(k, 0.0);
    for (std::size_t s = 0; s < k; ++s) {
        double mu_total = 0.0;
        for (std::size_t j = 0; j < m; ++j) mu_total += mu(s, j);
        double p_total = 0.0;
        for (std::size_t i = 0; i < p.cols(); ++i) p_total += p(s, i);
        b[s] = mu_total * p_total;
    }
    // U U^T q, accumulated without forming the k x k product explicitly
    std::vector<double> ut_q(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t r = 0; r < k; ++r)
            ut_q[j] += mu(r, j) * static_cast<double>(q[r]);
    }
    double residual = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) v += mu(s, j) * ut_q[j];
        const double d = b[s] - v;
        residual += d * d;
    }
    return std::sqrt(residual);
}

double stopping_residual(const std::vector<int>& q, const Matrix& p) {
    require(q.size() == p.rows(), "stopping residual: shape mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < q.size(); ++s) {
        double p_total = 0.0;
        for (std::size_t i = 0; i < p.cols(); ++i) p_total += p(s, i);
        const double d = static_cast<double>(q[s]) - p_total;
        total += d * d;
    }
    return total;
}

std::vector<std::size_t> farthest_first_seeds(const Matrix& rows, std::size_t k,
                                              std::uint64_t seed,
                                              const std::vector<std::size_t>& columns) {
    const std::size_t m = rows.rows();
    require(k >= 1 && k <= m, "farthest_first_seeds: need 1 <= k <= rows");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> seeds;
    seeds.reserve(k);
    const std::size_t first = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    seeds.push_back(first);

    std::vector<double> min_dist(m);
    std::vector<bool> taken(m, false);
    taken[first] = true;
    for (std::size_t j = 0; j < m; ++j)
        min_dist[j] = sq_distance(rows.row(j), rows.row(first), columns);

    while (seeds.size() < k) {
        std::size_t best = m;
        double best_dist = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (taken[j]) continue;
            if (min_dist[j] > best_dist) {
                best_dist = min_dist[j];
                best = j;
            }
        }
        seeds.push_back(best);
        taken[best] = true;
        for (std::size_t j = 0; j < m; ++j) {
            if (taken[j]) continue;
            min_dist[j] = std::min(min_dist[j], sq_distance(rows.row(j), rows.row(best), columns));
        }
    }
    return seeds;
}

namespace {

// Plain Lloyd refinement of a farthest-first seeding; returns labels and the
// within-cluster squared error.
double lloyd_labels(const DocumentMatrix& docs, std::size_t k, std::uint64_t seed,
                    std::vector<std::size_t>& labels) {
    const std::size_t m = docs.rows(), n = docs.cols();
    const std::vector<std::size_t> seeds = farthest_first_seeds(docs, k, seed);
    Matrix centers(k, n);
    for (std::size_t s = 0; s < k; ++s) {
        auto src = docs.row(seeds[s]);
        std::copy(src.begin(), src.end(), centers.row(s).begin());
    }
    labels.assign(m, 0);
    std::vector<std::size_t> prev;
    double sse = 0.0;
    for (int iter = 0; iter < 50; ++iter) {
        sse = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t best = 0;
            double best_dist = sq_distance(docs.row(j), centers.row(0), {});
            for (std::size_t s = 1; s < k; ++s) {
                const double d = sq_distance(docs.row(j), centers.row(s), {});
                if (d < best_dist) {
                    best_dist = d;
                    best = s;
                }
            }
            labels[j] = best;
            sse += best_dist;
        }
        if (labels == prev) break;
        prev = labels;
        Matrix sums(k, n, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t j = 0; j < m; ++j) {
            ++counts[labels[j]];
            auto row = docs.row(j);
            for (std::size_t i = 0; i < n; ++i) sums(labels[j], i) += row[i];
        }
        for (std::size_t s = 0; s < k; ++s) {
            if (counts[s] == 0) continue; // an emptied cluster keeps its center
            for (std::size_t i = 0; i < n; ++i)
                centers(s, i) = sums(s, i) / static_cast<double>(counts[s]);
        }
    }
    return sse;
}

// Initial parameters: uniform weights, Gaussians from a seed clustering
// (farthest-first traversal refined by Lloyd, best squared error over 8
// derived restarts), flat p = 0.5, q = q_init (or round(0.1 n)).
ModelParams initial_params(const DocumentMatrix& docs, const FitConfig& config) {
    const std::size_t m = docs.rows(), n = docs.cols(), k = config.k;

    ModelParams params;
    params.k = k;
    params.n = n;
    params.prob_clamp = config.prob_clamp;
    params.lambda.assign(k, 1.0 / static_cast<double>(k));
    params.p = Matrix(k, n, 0.5);
    params.c = Matrix(k, n);
    params.sigma2 = Matrix(k, n);

    std::mt19937_64 subseed_rng(config.seed);
    std::vector<std::size_t> assign, trial;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 8; ++restart) {
        const double sse = lloyd_labels(docs, k, subseed_rng(), trial);
        if (sse < best_sse) {
            best_sse = sse;
            assign = trial;
        }
    }

    for (std::size_t s = 0; s < k; ++s) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < m; ++j) {
            if (assign[j] == s) members.push_back(j);
        }
        if (members.empty()) members.push_back(s % m); // degenerate restart fallback
        for (std::size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (std::size_t j : members) mean += docs(j, i);
            mean /= static_cast<double>(members.size());
            double var = 0.0;
            for (std::size_t j : members) {
                const double d = docs(j, i) - mean;
                var += d * d;
            }
            params.c(s, i) = mean;
            params.sigma2(s, i) =
                std::max(var / static_cast<double>(members.size()), config.variance_floor);
        }
    }

    int q0 = config.q_init > 0 ? config.q_init
                               : std::max(1, round_half_up(0.1 * static_cast<double>(n)));
    q0 = std::clamp(q0, 1, static_cast<int>(n));
    params.q.assign(k, q0);
    return params;
}

} // namespace

FitResult fit(const DocumentMatrix& docs, const FitConfig& config) {
    config.validate();
    const std::size_t m = docs.rows(), k = config.k;
    require(m >= k, "fit: need at least k documents");
    require(docs.cols() >= 1, "fit: empty vocabulary");

    FitResult result;
    ModelParams& params = result.params;
    params = initial_params(docs, config);

    // indicators from the initial q with uniform responsibilities,
    // i.e. the top (1/k) sum_s q_s entries of every document
    PosteriorMatrix uniform_mu(k, m, 1.0 / static_cast<double>(k));
    result.x = update_indicators(docs, uniform_mu, params.q);
    estimate_cross_gaussians(docs, result.x, config.variance_floor, params.cross_c,
                             params.cross_sigma2);

    std::vector<int> prev_q = params.q;
    int stable_q = 0;
    std::vector<double> per_doc_ll;

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        double loglik = 0.0;
        result.mu = e_step(docs, result.x, params, &loglik, &per_doc_ll);

        MStepUpdate up = m_step(docs, result.x, result.mu, config.variance_floor);
        if (!up.degenerate_topics.empty()) {
            // hand every starved topic the currently worst-explained document
            std::vector<bool> used(m, false);
            for (std::size_t s : up.degenerate_topics) {
                std::size_t worst = m;
                double worst_ll = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < m; ++j) {
                    if (used[j]) continue;
                    if (per_doc_ll[j] < worst_ll) {
                        worst_ll = per_doc_ll[j];
                        worst = j;
                    }
                }
                if (worst == m) break;
                used[worst] = true;
                for (std::size_t r = 0; r < k; ++r) result.mu(r, worst) = 0.0;
                result.mu(s, worst) = 1.0;
                result.trace.reseeds.push_back(
                    {iter, static_cast<int>(s), static_cast<int>(worst)});
            }
            up = m_step(docs, result.x, result.mu, config.variance_floor);
        }
        params.lambda = std::move(up.lambda);
        params.p = std::move(up.p);
        params.c = std::move(up.c);
        params.sigma2 = std::move(up.sigma2);
        estimate_cross_gaussians(docs, result.x, config.variance_floor, params.cross_c,
                                 params.cross_sigma2);

        params.q = update_q(params.p, params.q);
        result.x = update_indicators(docs, result.mu, params.q);

        const double residual = stopping_residual(params.q, params.p);
        result.trace.iterations.push_back({iter, loglik, residual, params.q});

        if (residual < config.epsilon) {
            result.trace.converged = true;
            break;
        }
        stable_q = params.q == prev_q ? stable_q + 1 : 0;
        prev_q = params.q;
        if (stable_q >= 3) break; // q unchanged for 3 consecutive rounds
    }
    return result;
}

} // namespace lbg
