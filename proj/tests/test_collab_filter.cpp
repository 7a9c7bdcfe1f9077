#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "lbg/collab_filter.hpp"
#include "oracles.hpp"

using namespace lbg;

namespace {

RatingsMatrix make_ratings(std::size_t users, std::size_t items,
                           const std::vector<std::tuple<std::size_t, std::size_t, int>>& entries) {
    RatingsMatrix r;
    r.users = users;
    r.items = items;
    r.by_user.resize(users);
    for (const auto& [u, i, v] : entries) r.add(u, i, v);
    return r;
}

// two user populations with swapped preferences on the two item halves
RatingsMatrix two_population_ratings(std::size_t users, std::size_t items,
                                     std::uint64_t seed, std::vector<int>* population = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::uniform_int_distribution<std::size_t> item_pick(0, items - 1);
    RatingsMatrix r;
    r.users = users;
    r.items = items;
    r.by_user.resize(users);
    if (population) population->resize(users);
    for (std::size_t u = 0; u < users; ++u) {
        const bool second = u % 2 == 1;
        if (population) (*population)[u] = second ? 2 : 1;
        // each user rates ~40% of the items
        for (std::size_t i = 0; i < items; ++i) {
            if (rng() % 5 >= 2) continue;
            const bool low_half = i < items / 2;
            const double mean = (low_half != second) ? 2.0 : 4.0;
            const int value = std::clamp(
                static_cast<int>(std::lround(mean + noise(rng))), 1, 5);
            r.add(u, i, value);
        }
        if (r.by_user[u].empty()) r.add(u, item_pick(rng), second ? 4 : 2);
    }
    return r;
}

} // namespace

TEST_CASE("single-topic fit reduces item means to plain averages") {
    const RatingsMatrix train = make_ratings(
        3, 2, {{0, 0, 2}, {1, 0, 4}, {2, 0, 3}, {0, 1, 5}, {1, 1, 5}});
    CfConfig config;
    config.seed = 1;
    const CfModel model = cf_fit(train, 1, config);
    CHECK(model.lambda == std::vector<double>{1.0});
    CHECK(model.c(0, 0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(model.c(0, 1) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(model.p(0, 0) == doctest::Approx(1.0));
    CHECK(model.p(0, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("fit is deterministic given the seed") {
    const RatingsMatrix train = two_population_ratings(60, 20, 5);
    CfConfig config;
    config.seed = 9;
    const CfModel a = cf_fit(train, 2, config);
    const CfModel b = cf_fit(train, 2, config);
    CHECK(a.lambda == b.lambda);
    CHECK(a.p == b.p);
    CHECK(a.c == b.c);
    CHECK(a.sigma2 == b.sigma2);
}

TEST_CASE("two populations with swapped preferences are recovered") {
    std::vector<int> population;
    const RatingsMatrix train = two_population_ratings(200, 30, 11, &population);
    CfConfig config;
    config.seed = 3;
    const CfModel model = cf_fit(train, 2, config);

    // each user should sit almost fully in one component, matching population
    std::size_t agree = 0, flipped = 0;
    for (std::size_t u = 0; u < train.users; ++u) {
        const auto post = cf_posterior(model, train.by_user[u]);
        const int assigned = post[0] >= post[1] ? 1 : 2;
        if (assigned == population[u]) ++agree;
        else ++flipped;
    }
    const std::size_t correct = std::max(agree, flipped);
    CHECK(correct >= 190);

    // component means concentrate near 2 and 4 on the matching halves
    for (std::size_t s = 0; s < 2; ++s) {
        const double low = model.c(s, 0), high = model.c(s, 29);
        CHECK(std::abs(low - high) > 1.0);
    }
}

TEST_CASE("more topics than users is an error") {
    const RatingsMatrix train = make_ratings(2, 2, {{0, 0, 3}, {1, 1, 4}});
    CfConfig config;
    CHECK_THROWS_AS(cf_fit(train, 3, config), std::invalid_argument);
}

TEST_CASE("prediction peaks at the nearest grid point to the component mean") {
    CfModel model;
    model.k = 1;
    model.items = 2;
    model.lambda = {1.0};
    model.p = Matrix(1, 2, 0.8);
    model.c = Matrix(1, 2, 3.2);
    model.sigma2 = Matrix(1, 2, 0.7);
    const std::vector<Rating> user = {{1, 3}};
    const CfPrediction pred = cf_predict(model, user, 0);
    CHECK(pred.t_star == 3);
}

TEST_CASE("a mean exactly between two grid points resolves to the lower rating") {
    CfModel model;
    model.k = 1;
    model.items = 1;
    model.lambda = {1.0};
    model.p = Matrix(1, 1, 0.5);
    model.c = Matrix(1, 1, 3.5);
    model.sigma2 = Matrix(1, 1, 1.0);
    const std::vector<Rating> user = {{0, 4}};
    const CfPrediction pred = cf_predict(model, user, 0);
    CHECK(pred.t_star == 3);
    CHECK(pred.distribution[2] == doctest::Approx(pred.distribution[3]));
}

TEST_CASE("prediction matches the brute-force mixture over the rating grid") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed * 89);
        std::uniform_real_distribution<double> unit(0.1, 0.9);
        std::uniform_real_distribution<double> mean(1.0, 5.0);
        CfModel model;
        model.k = 2;
        model.items = 6;
        model.lambda = {0.45, 0.55};
        model.p = Matrix(2, 6);
        model.c = Matrix(2, 6);
        model.sigma2 = Matrix(2, 6);
        for (std::size_t s = 0; s < 2; ++s) {
            for (std::size_t i = 0; i < 6; ++i) {
                model.p(s, i) = unit(rng);
                model.c(s, i) = mean(rng);
                model.sigma2(s, i) = 0.4 + unit(rng);
            }
        }
        const std::vector<Rating> user = {{0, 2}, {3, 5}, {4, 1}};

        // oracle: direct products for the posterior, direct grid sums after
        std::vector<double> post(2);
        double post_total = 0.0;
        for (std::size_t s = 0; s < 2; ++s) {
            double prod = model.lambda[s];
            for (std::size_t i = 0; i < 6; ++i) {
                bool rated = false;
                int value = 0;
                for (const Rating& r : user) {
                    if (r.item == i) {
                        rated = true;
                        value = r.value;
                    }
                }
                if (rated) {
                    prod *= model.p(s, i) *
                            oracle::gaussian_pdf(value, model.c(s, i), model.sigma2(s, i));
                } else {
                    prod *= 1.0 - model.p(s, i);
                }
            }
            post[s] = prod;
            post_total += prod;
        }
        for (double& v : post) v /= post_total;
        const auto want =
            oracle::direct_rating_distribution(post, 1, 5, model.c, model.sigma2);

        const CfPrediction pred = cf_predict(model, user, 1);
        for (int t = 0; t < 5; ++t)
            CHECK(pred.distribution[t] == doctest::Approx(want[t]).epsilon(1e-10));
    }
}

TEST_CASE("the predicted distribution is normalized and order-invariant") {
    const RatingsMatrix train = two_population_ratings(80, 12, 17);
    CfConfig config;
    config.seed = 2;
    const CfModel model = cf_fit(train, 2, config);
    std::vector<Rating> user = {{0, 2}, {3, 4}, {7, 1}, {9, 5}};
    const CfPrediction a = cf_predict(model, user, 5);
    std::reverse(user.begin(), user.end());
    const CfPrediction b = cf_predict(model, user, 5);
    CHECK(a.t_star == b.t_star);
    double total = 0.0;
    for (int t = 0; t < 5; ++t) {
        total += a.distribution[t];
        CHECK(a.distribution[t] == doctest::Approx(b.distribution[t]).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-component prediction is unimodal on the grid") {
    CfModel model;
    model.k = 1;
    model.items = 1;
    model.lambda = {1.0};
    model.p = Matrix(1, 1, 0.5);
    model.c = Matrix(1, 1, 2.3);
    model.sigma2 = Matrix(1, 1, 0.8);
    const CfPrediction pred = cf_predict(model, {{0, 2}}, 0);
    const auto& d = pred.distribution;
    const int peak = pred.t_star - 1;
    for (int t = 0; t + 1 < peak; ++t) CHECK(d[t] <= d[t + 1]);
    for (int t = peak; t + 1 < 5; ++t) CHECK(d[t] >= d[t + 1]);
}

TEST_CASE("prediction requires at least one observed rating") {
    CfModel model;
    model.k = 1;
    model.items = 2;
    model.lambda = {1.0};
    model.p = Matrix(1, 2, 0.5);
    model.c = Matrix(1, 2, 3.0);
    model.sigma2 = Matrix(1, 2, 1.0);
    CHECK_THROWS_AS(cf_predict(model, {}, 0), std::invalid_argument);
}

TEST_CASE("a perfect predictor scores zero error") {
    const RatingsMatrix test = make_ratings(
        2, 3, {{0, 0, 2}, {0, 1, 2}, {1, 0, 4}, {1, 2, 4}});
    const auto perfect = [&test](const std::vector<Rating>& conditioning, std::size_t) {
        return conditioning.front().value; // both users rate constantly
    };
    const CfEvalReport report = evaluate_predictor(perfect, test, 3);
    CHECK(report.mae == doctest::Approx(0.0));
    CHECK(report.rmse == doctest::Approx(0.0));
    CHECK(report.evaluated == 2);
}

TEST_CASE("a constant off-by-one predictor scores MAE and RMSE of 1") {
    const RatingsMatrix test = make_ratings(
        2, 3, {{0, 0, 2}, {0, 1, 2}, {1, 0, 4}, {1, 2, 4}});
    const auto off = [](const std::vector<Rating>& conditioning, std::size_t) {
        return conditioning.front().value + 1;
    };
    const CfEvalReport report = evaluate_predictor(off, test, 3);
    CHECK(report.mae == doctest::Approx(1.0));
    CHECK(report.rmse == doctest::Approx(1.0));
}

TEST_CASE("users with a single rating are skipped and counted") {
    const RatingsMatrix test = make_ratings(3, 3, {{0, 0, 2}, {0, 1, 3}, {1, 2, 5}});
    const auto constant = [](const std::vector<Rating>&, std::size_t) { return 3; };
    const CfEvalReport report = evaluate_predictor(constant, test, 1);
    CHECK(report.evaluated == 1);
    CHECK(report.skipped == 1);
}

TEST_CASE("the mixture beats the global-mean baseline on clustered ratings") {
    const RatingsMatrix train = two_population_ratings(300, 50, 23);
    CfConfig config;
    config.seed = 7;
    const CfModel model = cf_fit(train, 2, config);
    const CfEvalReport cf = cf_evaluate(model, train, 31);
    const BaselineMeanPredictor baseline = baseline_mean_predict(train);
    const CfEvalReport base = evaluate_predictor(baseline, train, 31);
    CHECK(cf.mae < base.mae);
}

TEST_CASE("baseline rounds the item mean to the grid") {
    const RatingsMatrix train = make_ratings(
        3, 2, {{0, 0, 4}, {1, 0, 4}, {2, 0, 5}, {0, 1, 2}});
    const BaselineMeanPredictor baseline = baseline_mean_predict(train);
    CHECK(baseline({}, 0) == 4); // mean 4.33 -> 4
    CHECK(baseline({}, 1) == 2);
}

TEST_CASE("baseline falls back to the global mean for unseen items") {
    const RatingsMatrix train = make_ratings(2, 3, {{0, 0, 2}, {1, 1, 5}});
    const BaselineMeanPredictor baseline = baseline_mean_predict(train);
    CHECK(baseline({}, 2) == 3); // global mean 3.5 rounds down to 3
}

TEST_CASE("an empty training set is an error") {
    RatingsMatrix empty;
    empty.users = 2;
    empty.items = 2;
    empty.by_user.resize(2);
    CHECK_THROWS_AS(baseline_mean_predict(empty), std::invalid_argument);
}

TEST_CASE("u.data parsing reads tab-separated 1-based triples") {
    const auto path = std::filesystem::temp_directory_path() / "lbg_udata_test.tsv";
    {
        std::ofstream out(path);
        out << "1\t3\t4\t881250949\n2\t1\t5\t881250950\n1\t2\t3\t881250951\n";
    }
    const RatingsMatrix r = load_udata(path.string());
    CHECK(r.users == 2);
    CHECK(r.items == 3);
    CHECK(r.count() == 3);
    CHECK(r.by_user[0].size() == 2);
    CHECK(r.by_user[1][0].item == 0);
    CHECK(r.by_user[1][0].value == 5);

    const auto bad = std::filesystem::temp_directory_path() / "lbg_udata_bad.tsv";
    {
        std::ofstream out(bad);
        out << "1\t1\t9\t881250949\n";
    }
    CHECK_THROWS(load_udata(bad.string()));
}

TEST_CASE("model files round-trip exactly") {
    const RatingsMatrix train = two_population_ratings(40, 8, 29);
    CfConfig config;
    config.seed = 12;
    const CfModel model = cf_fit(train, 2, config);
    const auto path = std::filesystem::temp_directory_path() / "lbg_cf_model.json";
    save_cf_model_json(model, path.string());
    const CfModel back = load_cf_model_json(path.string());
    CHECK(back.k == model.k);
    CHECK(back.lambda == model.lambda);
    CHECK(back.p == model.p);
    CHECK(back.c == model.c);
    CHECK(back.sigma2 == model.sigma2);
}

TEST_CASE("the evaluation report pins the table format") {
    CfEvalReport a{0.905, 1.1445, 100, 0};
    CfEvalReport b{0.776, 1.1183, 100, 0};
    const std::string report = format_cf_report({{"baseline", a}, {"lbg-cf", b}});
    CHECK(report ==
          "Method            MAE    RMSE\n"
          "baseline       0.9050  1.1445\n"
          "lbg-cf         0.7760  1.1183\n");
}
