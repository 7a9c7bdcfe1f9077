#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lbg/matrix.hpp"

namespace lbg {

struct Rating {
    std::size_t item = 0; // 0-based
    int value = 0;        // in {1..r_max}
};

// Sparse users x items ratings; the observation mask is implicit in which
// (user, item) pairs are stored.
struct RatingsMatrix {
    std::size_t users = 0;
    std::size_t items = 0;
    int r_max = 5;
    std::vector<std::vector<Rating>> by_user; // per-user, item-sorted

    void add(std::size_t user, std::size_t item, int value);
    std::size_t count() const;
};

// Rating-space mixture with observed indicators: keyword Gaussians over
// rating values plus Bernoulli item-participation terms; no cross Gaussians
// and no keyword-count update.
struct CfModel {
    std::size_t k = 0;
    std::size_t items = 0;
    int r_max = 5;
    std::vector<double> lambda;
    Matrix p;      // k x items participation probabilities
    Matrix c;      // k x items mean ratings
    Matrix sigma2; // k x items rating variances (floored)
    double prob_clamp = 1e-6;
};

struct CfConfig {
    int max_iters = 200;
    double rel_tol = 1e-6; // stop on relative log-likelihood change
    std::uint64_t seed = 0;
    double variance_floor = 1e-6;
    double prob_clamp = 1e-6;
};

// EM with the indicator fixed to the observation mask. Items some topic never
// sees fall back to the global rating mean/variance/density.
CfModel cf_fit(const RatingsMatrix& train, std::size_t k, const CfConfig& config);

// Posterior over topics for one user's observed ratings.
std::vector<double> cf_posterior(const CfModel& model, const std::vector<Rating>& user);

struct CfPrediction {
    int t_star = 1;                   // argmax rating, lowest value on ties
    std::vector<double> distribution; // Pr(rating = t | user), t = 1..r_max
};

// Forced prediction: mixture of per-topic Gaussians evaluated on the integer
// rating grid, weighted by the user's posterior, renormalized over the grid.
CfPrediction cf_predict(const CfModel& model, const std::vector<Rating>& user,
                        std::size_t item);

struct CfEvalReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0; // users with a single rating
};

using RatingPredictor =
    std::function<int(const std::vector<Rating>& conditioning, std::size_t item)>;

// Leave-one-out-per-user protocol: suppress one seeded-random rating per test
// user, predict it from the remainder.
CfEvalReport evaluate_predictor(const RatingPredictor& predict,
                                const RatingsMatrix& test, std::uint64_t holdout_seed);

CfEvalReport cf_evaluate(const CfModel& model, const RatingsMatrix& test,
                         std::uint64_t holdout_seed);

// Per-item training mean rounded to the rating grid; global mean for items
// never seen in training. An empty training set is an error.
struct BaselineMeanPredictor {
    std::vector<double> item_mean; // NaN marks unseen items
    double global_mean = 0.0;
    int r_max = 5;

    int operator()(const std::vector<Rating>& conditioning, std::size_t item) const;
};

BaselineMeanPredictor baseline_mean_predict(const RatingsMatrix& train);

// MovieLens 100K u.data: tab-separated "userID itemID rating timestamp".
RatingsMatrix load_udata(const std::string& path, int r_max = 5);

void save_cf_model_json(const CfModel& model, const std::string& path);
CfModel load_cf_model_json(const std::string& path);

// Plain-text Method / MAE / RMSE table.
std::string format_cf_report(const std::vector<std::pair<std::string, CfEvalReport>>& rows);

} // namespace lbg
