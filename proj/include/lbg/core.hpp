#pragma once

#include <vector>

#include "lbg/matrix.hpp"
#include "lbg/model.hpp"

namespace lbg {

// log N(z; c, sigma2)
double log_gaussian(double z, double mean, double variance);

// Numerically stable log(sum(exp(v))). Returns -inf for an all--inf input.
double log_sum_exp(std::span<const double> v);

// Round-half-up used everywhere a real keyword count becomes an integer.
int round_half_up(double v);

// Log of the conditional document density given topic s: keyword entries use
// the topic Gaussian weighted by p, all others the cross Gaussian weighted by
// 1-p. p is clamped to [prob_clamp, 1-prob_clamp] before logs.
double log_density_given_topic(std::span<const double> doc,
                               std::span<const std::uint8_t> x_row,
                               std::size_t s, const ModelParams& params);

// Topic responsibilities, one column per document, normalized with
// log-sum-exp. Columns where every topic underflows to -inf become uniform.
// When loglik is non-null it receives the observed-data log-likelihood
// sum_j log sum_s lambda_s Pr(d_j | y=s); per_doc_loglik receives the
// per-document terms.
PosteriorMatrix e_step(const DocumentMatrix& docs, const IndicatorMatrix& x,
                       const ModelParams& params, double* loglik = nullptr,
                       std::vector<double>* per_doc_loglik = nullptr);

struct MStepUpdate {
    std::vector<double> lambda;
    Matrix p;      // k x n
    Matrix c;      // k x n
    Matrix sigma2; // k x n, floored
    std::vector<std::size_t> degenerate_topics; // responsibilities summed to ~0
};

// Weighted ML updates of lambda, p, c, sigma2. (s,i) cells with no effective
// keyword weight fall back to the global column mean/variance; topics whose
// total responsibility vanishes are reported for the caller to re-seed.
MStepUpdate m_step(const DocumentMatrix& docs, const IndicatorMatrix& x,
                   const PosteriorMatrix& mu, double variance_floor);

// Non-keyword Gaussians per word, estimated from the entries with x=0.
// Words that are keywords everywhere fall back to the full-column statistics.
void estimate_cross_gaussians(const DocumentMatrix& docs, const IndicatorMatrix& x,
                              double variance_floor,
                              std::vector<double>& cross_c,
                              std::vector<double>& cross_sigma2);

// Keyword-count fixed-point step: q_s <- |{i : p_si >= q_s_prev / n}|,
// clamped to [1, n].
std::vector<int> update_q(const Matrix& p, const std::vector<int>& q_prev);

// Rebuild indicators: row j keeps the g_j = round(sum_s mu_sj q_s) largest
// entries (clamped to [1, nnz]); zero entries are never selected and ties go
// to the lower word index.
IndicatorMatrix update_indicators(const DocumentMatrix& docs,
                                  const PosteriorMatrix& mu,
                                  const std::vector<int>& q);

// ||b - U U^T q||_2 with b_s = (sum_j mu_sj)(sum_i p_si); diagnostic for how
// far the current state is from the full keyword-count constraint.
double keyword_constraint_residual(const PosteriorMatrix& mu,
                                   const std::vector<int>& q, const Matrix& p);

// Reduced stopping criterion: sum_s (q_s - sum_i p_si)^2.
double stopping_residual(const std::vector<int>& q, const Matrix& p);

// Full alternating fit: EM over (lambda, p, c, sigma2, cross Gaussians) with
// the keyword-count update and indicator re-ranking between rounds, until the
// stopping residual drops below epsilon, q stabilizes, or max_iters.
FitResult fit(const DocumentMatrix& docs, const FitConfig& config);

// Farthest-first traversal seeding shared by fit initialization and k-means:
// first seed drawn from rng, then repeatedly the row farthest from the chosen
// set (ties to the lower row index). columns restricts the distance to a
// feature subset (empty = all).
std::vector<std::size_t> farthest_first_seeds(const Matrix& rows, std::size_t k,
                                              std::uint64_t seed,
                                              const std::vector<std::size_t>& columns = {});

} // namespace lbg
