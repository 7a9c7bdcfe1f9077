#include "lbg/collab_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lbg/core.hpp"
#include "lbg/model.hpp"

namespace lbg {

void RatingsMatrix::add(std::size_t user, std::size_t item, int value) {
    require(user < users, "ratings: user out of range");
    require(item < items, "ratings: item out of range");
    require(value >= 1 && value <= r_max, "ratings: rating outside the grid");
    for (const Rating& r : by_user[user])
        require(r.item != item, "ratings: duplicate (user, item) entry");
    by_user[user].push_back({item, value});
}

std::size_t RatingsMatrix::count() const {
    std::size_t total = 0;
    for (const auto& row : by_user) total += row.size();
    return total;
}

namespace {

struct GlobalStats {
    double mean = 0.0;
    double var = 0.0;
    double density = 0.0; // fraction of the user-item grid observed
    std::vector<double> item_mean;
    std::vector<double> item_var;
    std::vector<std::size_t> item_count;
};

GlobalStats rating_stats(const RatingsMatrix& train, double variance_floor) {
    GlobalStats g;
    g.item_mean.assign(train.items, 0.0);
    g.item_var.assign(train.items, 0.0);
    g.item_count.assign(train.items, 0);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& row : train.by_user) {
        for (const Rating& r : row) {
            total += r.value;
            ++count;
            g.item_mean[r.item] += r.value;
            ++g.item_count[r.item];
        }
    }
    require(count > 0, "ratings: empty training set");
    g.mean = total / static_cast<double>(count);
    g.density = static_cast<double>(count) /
                (static_cast<double>(train.users) * static_cast<double>(train.items));
    for (std::size_t i = 0; i < train.items; ++i) {
        if (g.item_count[i] > 0) g.item_mean[i] /= static_cast<double>(g.item_count[i]);
    }
    double var = 0.0;
    for (const auto& row : train.by_user) {
        for (const Rating& r : row) {
            const double d = r.value - g.mean;
            var += d * d;
            const double di = r.value - g.item_mean[r.item];
            g.item_var[r.item] += di * di;
        }
    }
    g.var = std::max(var / static_cast<double>(count), variance_floor);
    for (std::size_t i = 0; i < train.items; ++i) {
        g.item_var[i] = g.item_count[i] > 0
                            ? std::max(g.item_var[i] / static_cast<double>(g.item_count[i]),
                                       variance_floor)
                            : g.var;
        if (g.item_count[i] == 0) g.item_mean[i] = g.mean;
    }
    return g;
}

// log lambda_s + log Pr(d | y=s) under the cross-free density: observed items
// contribute p * N terms, unobserved items contribute (1 - p).
std::vector<double> user_scores(const CfModel& model, const std::vector<Rating>& user,
                                const std::vector<double>& log_one_minus_p_total) {
    std::vector<double> w(model.k);
    for (std::size_t s = 0; s < model.k; ++s) {
        double score = model.lambda[s] > 0.0 ? std::log(model.lambda[s])
                                             : -std::numeric_limits<double>::infinity();
        score += log_one_minus_p_total[s];
        for (const Rating& r : user) {
            const double p = std::clamp(model.p(s, r.item), model.prob_clamp,
                                        1.0 - model.prob_clamp);
            score += std::log(p) - std::log1p(-p) +
                     log_gaussian(r.value, model.c(s, r.item), model.sigma2(s, r.item));
        }
        w[s] = score;
    }
    return w;
}

std::vector<double> per_topic_log_one_minus_p(const CfModel& model) {
    std::vector<double> totals(model.k, 0.0);
    for (std::size_t s = 0; s < model.k; ++s) {
        for (std::size_t i = 0; i < model.items; ++i) {
            const double p =
                std::clamp(model.p(s, i), model.prob_clamp, 1.0 - model.prob_clamp);
            totals[s] += std::log1p(-p);
        }
    }
    return totals;
}

std::vector<double> normalize_scores(std::vector<double> w) {
    const double lse = log_sum_exp(w);
    if (!std::isfinite(lse)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    double total = 0.0;
    for (double& v : w) {
        v = std::exp(v - lse);
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

} // namespace

CfModel cf_fit(const RatingsMatrix& train, std::size_t k, const CfConfig& config) {
    require(k >= 1, "cf_fit: k must be >= 1");
    require(k <= train.users, "cf_fit: more topics than users");
    require(train.items >= 1, "cf_fit: no items");
    require(config.max_iters >= 1, "cf_fit: max_iters must be >= 1");

    const GlobalStats global = rating_stats(train, config.variance_floor);
    const std::size_t users = train.users, items = train.items;

    CfModel model;
    model.k = k;
    model.items = items;
    model.r_max = train.r_max;
    model.prob_clamp = config.prob_clamp;
    model.lambda.assign(k, 1.0 / static_cast<double>(k));
    model.p = Matrix(k, items);
    model.c = Matrix(k, items);
    model.sigma2 = Matrix(k, items);

    // seeded random soft responsibilities start the alternation
    Matrix mu(k, users);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (std::size_t u = 0; u < users; ++u) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            mu(s, u) = unit(rng);
            total += mu(s, u);
        }
        for (std::size_t s = 0; s < k; ++s) mu(s, u) /= total;
    }

    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        // M-step
        std::vector<double> musum(k, 0.0);
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t u = 0; u < users; ++u) musum[s] += mu(s, u);
            model.lambda[s] = musum[s] / static_cast<double>(users);
        }
        Matrix wsum(k, items, 0.0), wval(k, items, 0.0);
        for (std::size_t u = 0; u < users; ++u) {
            for (const Rating& r : train.by_user[u]) {
                for (std::size_t s = 0; s < k; ++s) {
                    const double w = mu(s, u);
                    wsum(s, r.item) += w;
                    wval(s, r.item) += w * r.value;
                }
            }
        }
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t i = 0; i < items; ++i) {
                if (global.item_count[i] == 0) {
                    model.p(s, i) = global.density;
                    model.c(s, i) = global.mean;
                    model.sigma2(s, i) = global.var;
                } else {
                    model.p(s, i) =
                        musum[s] > 0.0 ? std::min(wsum(s, i) / musum[s], 1.0) : global.density;
                    model.c(s, i) =
                        wsum(s, i) > 0.0 ? wval(s, i) / wsum(s, i) : global.item_mean[i];
                }
            }
        }
        Matrix wvar(k, items, 0.0);
        for (std::size_t u = 0; u < users; ++u) {
            for (const Rating& r : train.by_user[u]) {
                for (std::size_t s = 0; s < k; ++s) {
                    const double d = r.value - model.c(s, r.item);
                    wvar(s, r.item) += mu(s, u) * d * d;
                }
            }
        }
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t i = 0; i < items; ++i) {
                if (global.item_count[i] == 0) continue;
                model.sigma2(s, i) =
                    wsum(s, i) > 0.0
                        ? std::max(wvar(s, i) / wsum(s, i), config.variance_floor)
                        : global.item_var[i];
            }
        }

        // E-step
        const std::vector<double> lomp = per_topic_log_one_minus_p(model);
        double loglik = 0.0;
        for (std::size_t u = 0; u < users; ++u) {
            std::vector<double> w = user_scores(model, train.by_user[u], lomp);
            const double lse = log_sum_exp(w);
            loglik += lse;
            const std::vector<double> post = normalize_scores(std::move(w));
            for (std::size_t s = 0; s < k; ++s) mu(s, u) = post[s];
        }

        if (iter > 1 &&
            std::abs(loglik - prev_loglik) <= config.rel_tol * (std::abs(prev_loglik) + 1.0))
            break;
        prev_loglik = loglik;
    }
    return model;
}

std::vector<double> cf_posterior(const CfModel& model, const std::vector<Rating>& user) {
    require(!user.empty(), "cf_posterior: user has no observed ratings");
    for (const Rating& r : user) require(r.item < model.items, "cf_posterior: item out of range");
    return normalize_scores(user_scores(model, user, per_topic_log_one_minus_p(model)));
}

CfPrediction cf_predict(const CfModel& model, const std::vector<Rating>& user,
                        std::size_t item) {
    require(item < model.items, "cf_predict: item out of range");
    const std::vector<double> mu = cf_posterior(model, user);

    CfPrediction pred;
    pred.distribution.assign(static_cast<std::size_t>(model.r_max), 0.0);
    double total = 0.0;
    for (int t = 1; t <= model.r_max; ++t) {
        double mass = 0.0;
        for (std::size_t s = 0; s < model.k; ++s) {
            mass += mu[s] * std::exp(log_gaussian(static_cast<double>(t), model.c(s, item),
                                                  model.sigma2(s, item)));
        }
        pred.distribution[static_cast<std::size_t>(t - 1)] = mass;
        total += mass;
    }
    require(total > 0.0, "cf_predict: zero probability mass on the rating grid");
    for (double& v : pred.distribution) v /= total;

    pred.t_star = 1;
    for (int t = 2; t <= model.r_max; ++t) {
        if (pred.distribution[static_cast<std::size_t>(t - 1)] >
            pred.distribution[static_cast<std::size_t>(pred.t_star - 1)])
            pred.t_star = t;
    }
    return pred;
}

CfEvalReport evaluate_predictor(const RatingPredictor& predict,
                                const RatingsMatrix& test, std::uint64_t holdout_seed) {
    std::mt19937_64 rng(holdout_seed);
    CfEvalReport report;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t u = 0; u < test.users; ++u) {
        const auto& row = test.by_user[u];
        if (row.size() < 2) {
            if (!row.empty()) ++report.skipped;
            continue;
        }
        const std::size_t drop =
            std::uniform_int_distribution<std::size_t>(0, row.size() - 1)(rng);
        std::vector<Rating> conditioning;
        conditioning.reserve(row.size() - 1);
        for (std::size_t r = 0; r < row.size(); ++r) {
            if (r != drop) conditioning.push_back(row[r]);
        }
        const int predicted = predict(conditioning, row[drop].item);
        const double err = predicted - row[drop].value;
        abs_sum += std::abs(err);
        sq_sum += err * err;
        ++report.evaluated;
    }
    require(report.evaluated > 0, "cf evaluation: no user with two or more ratings");
    report.mae = abs_sum / static_cast<double>(report.evaluated);
    report.rmse = std::sqrt(sq_sum / static_cast<double>(report.evaluated));
    return report;
}

CfEvalReport cf_evaluate(const CfModel& model, const RatingsMatrix& test,
                         std::uint64_t holdout_seed) {
    return evaluate_predictor(
        [&model](const std::vector<Rating>& conditioning, std::size_t item) {
            return cf_predict(model, conditioning, item).t_star;
        },
        test, holdout_seed);
}

int BaselineMeanPredictor::operator()(const std::vector<Rating>&, std::size_t item) const {
    double mean = global_mean;
    if (item < item_mean.size() && !std::isnan(item_mean[item])) mean = item_mean[item];
    // nearest grid value, exact halves to the lower rating
    const double lo = std::floor(mean);
    int predicted = mean - lo > 0.5 ? static_cast<int>(lo) + 1 : static_cast<int>(lo);
    return std::clamp(predicted, 1, r_max);
}

BaselineMeanPredictor baseline_mean_predict(const RatingsMatrix& train) {
    BaselineMeanPredictor pred;
    pred.r_max = train.r_max;
    pred.item_mean.assign(train.items, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::size_t> counts(train.items, 0);
    std::vector<double> sums(train.items, 0.0);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& row : train.by_user) {
        for (const Rating& r : row) {
            sums[r.item] += r.value;
            ++counts[r.item];
            total += r.value;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("baseline_mean_predict: empty training set");
    pred.global_mean = total / static_cast<double>(count);
    for (std::size_t i = 0; i < train.items; ++i) {
        if (counts[i] > 0) pred.item_mean[i] = sums[i] / static_cast<double>(counts[i]);
    }
    return pred;
}

RatingsMatrix load_udata(const std::string& path, int r_max) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    struct Triple {
        std::size_t user, item;
        int rating;
    };
    std::vector<Triple> triples;
    std::size_t max_user = 0, max_item = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long user = 0, item = 0, rating = 0, timestamp = 0;
        if (!(ls >> user >> item >> rating >> timestamp))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'userID itemID rating timestamp'");
        if (user < 1 || item < 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ids are 1-based");
        if (rating < 1 || rating > r_max)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": rating outside the grid");
        triples.push_back({static_cast<std::size_t>(user - 1),
                           static_cast<std::size_t>(item - 1), static_cast<int>(rating)});
        max_user = std::max(max_user, static_cast<std::size_t>(user));
        max_item = std::max(max_item, static_cast<std::size_t>(item));
    }
    if (triples.empty()) throw std::runtime_error(path + ": no ratings");

    RatingsMatrix ratings;
    ratings.users = max_user;
    ratings.items = max_item;
    ratings.r_max = r_max;
    ratings.by_user.resize(max_user);
    for (const Triple& t : triples) ratings.add(t.user, t.item, t.rating);
    return ratings;
}

void save_cf_model_json(const CfModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto write_vec = [&out](const std::vector<double>& v) {
        out << '[';
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ',';
            out << format_double(v[i]);
        }
        out << ']';
    };
    out << "{\n  \"model_type\": \"lbg-cf\",\n";
    out << "  \"k\": " << model.k << ",\n";
    out << "  \"items\": " << model.items << ",\n";
    out << "  \"r_max\": " << model.r_max << ",\n";
    out << "  \"prob_clamp\": " << format_double(model.prob_clamp) << ",\n";
    out << "  \"lambda\": ";
    write_vec(model.lambda);
    out << ",\n  \"p\": ";
    write_vec(model.p.data());
    out << ",\n  \"c\": ";
    write_vec(model.c.data());
    out << ",\n  \"sigma2\": ";
    write_vec(model.sigma2.data());
    out << "\n}\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

CfModel load_cf_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (j.value("model_type", "") != "lbg-cf")
        throw std::runtime_error(path + ": not a collaborative-filtering model file");

    CfModel model;
    model.k = j.at("k").get<std::size_t>();
    model.items = j.at("items").get<std::size_t>();
    model.r_max = j.at("r_max").get<int>();
    model.prob_clamp = j.value("prob_clamp", 1e-6);
    model.lambda = j.at("lambda").get<std::vector<double>>();
    auto read_matrix = [&](const char* field) {
        const auto arr = j.at(field).get<std::vector<double>>();
        if (arr.size() != model.k * model.items)
            throw std::runtime_error(path + ": bad " + field + " size");
        Matrix m(model.k, model.items);
        m.data() = arr;
        return m;
    };
    model.p = read_matrix("p");
    model.c = read_matrix("c");
    model.sigma2 = read_matrix("sigma2");
    require(model.lambda.size() == model.k, "cf model: lambda size mismatch");
    return model;
}

std::string format_cf_report(const std::vector<std::pair<std::string, CfEvalReport>>& rows) {
    std::ostringstream out;
    out << "Method            MAE    RMSE\n";
    char buf[80];
    for (const auto& [name, report] : rows) {
        std::snprintf(buf, sizeof(buf), "%-14s %6.4f  %6.4f\n", name.c_str(), report.mae,
                      report.rmse);
        out << buf;
    }
    return out.str();
}

} // namespace lbg
