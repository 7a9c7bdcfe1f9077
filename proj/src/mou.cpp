#include "lbg/mou.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "lbg/core.hpp"
#include "lbg/model.hpp"

namespace lbg {

namespace {

void check_counts(const DocumentMatrix& counts) {
    for (double v : counts.data()) {
        require(std::isfinite(v) && v >= 0.0 && v == std::floor(v),
                "mou: input must be non-negative integer counts");
    }
}

std::vector<double> topic_scores(std::span<const double> row, const MouModel& model) {
    std::vector<double> w(model.k);
    for (std::size_t s = 0; s < model.k; ++s) {
        double score = model.lambda[s] > 0.0 ? std::log(model.lambda[s])
                                             : -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < model.n; ++i) {
            if (row[i] > 0.0) score += row[i] * std::log(model.beta(s, i));
        }
        w[s] = score;
    }
    return w;
}

} // namespace

MouModel mou_fit(const DocumentMatrix& counts, std::size_t k, const MouConfig& config,
                 MouFitInfo* info) {
    check_counts(counts);
    const std::size_t m = counts.rows(), n = counts.cols();
    require(k >= 1 && k <= m, "mou_fit: need 1 <= k <= documents");
    require(n >= 1, "mou_fit: empty vocabulary");
    require(config.alpha_smooth > 0.0, "mou_fit: smoothing must be positive");

    MouModel model;
    model.k = k;
    model.n = n;
    model.lambda.assign(k, 1.0 / static_cast<double>(k));
    model.beta = Matrix(k, n);

    Matrix mu(k, m);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            mu(s, j) = unit(rng);
            total += mu(s, j);
        }
        for (std::size_t s = 0; s < k; ++s) mu(s, j) /= total;
    }

    double prev_loglik = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::vector<double> loglik_trace;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        iterations = iter;
        // M-step: smoothed weighted word frequencies
        for (std::size_t s = 0; s < k; ++s) {
            double musum = 0.0;
            for (std::size_t j = 0; j < m; ++j) musum += mu(s, j);
            model.lambda[s] = musum / static_cast<double>(m);

            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double weighted = config.alpha_smooth;
                for (std::size_t j = 0; j < m; ++j) weighted += mu(s, j) * counts(j, i);
                model.beta(s, i) = weighted;
                total += weighted;
            }
            for (std::size_t i = 0; i < n; ++i) model.beta(s, i) /= total;
        }

        // E-step
        double loglik = 0.0;
        std::vector<double> w;
        for (std::size_t j = 0; j < m; ++j) {
            w = topic_scores(counts.row(j), model);
            const double lse = log_sum_exp(w);
            loglik += lse;
            if (std::isfinite(lse)) {
                double total = 0.0;
                for (std::size_t s = 0; s < k; ++s) {
                    mu(s, j) = std::exp(w[s] - lse);
                    total += mu(s, j);
                }
                for (std::size_t s = 0; s < k; ++s) mu(s, j) /= total;
            } else {
                for (std::size_t s = 0; s < k; ++s) mu(s, j) = 1.0 / static_cast<double>(k);
            }
        }

        loglik_trace.push_back(loglik);
        if (iter > 1 &&
            std::abs(loglik - prev_loglik) <= config.rel_tol * (std::abs(prev_loglik) + 1.0)) {
            converged = true;
            break;
        }
        prev_loglik = loglik;
    }
    if (info) {
        info->iterations = iterations;
        info->converged = converged;
        info->loglik = std::move(loglik_trace);
    }
    return model;
}

MouClassification mou_classify(std::span<const double> counts_row, const MouModel& model) {
    require(counts_row.size() == model.n, "mou_classify: size mismatch");
    std::vector<double> w = topic_scores(counts_row, model);
    const double lse = log_sum_exp(w);

    MouClassification result;
    result.posterior.assign(model.k, 1.0 / static_cast<double>(model.k));
    if (std::isfinite(lse)) {
        double total = 0.0;
        for (std::size_t s = 0; s < model.k; ++s) {
            result.posterior[s] = std::exp(w[s] - lse);
            total += result.posterior[s];
        }
        for (std::size_t s = 0; s < model.k; ++s) result.posterior[s] /= total;
    }
    result.topic = 0;
    for (std::size_t s = 1; s < model.k; ++s) {
        if (result.posterior[s] > result.posterior[result.topic]) result.topic = s;
    }
    return result;
}

double mou_loglik(const DocumentMatrix& counts, const MouModel& model) {
    require(counts.cols() == model.n, "mou_loglik: size mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < counts.rows(); ++j)
        total += log_sum_exp(topic_scores(counts.row(j), model));
    return total;
}

void save_mou_model_json(const MouModel& model, const std::string& path) {
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
    out << "{\n  \"model_type\": \"mou\",\n";
    out << "  \"k\": " << model.k << ",\n";
    out << "  \"n\": " << model.n << ",\n";
    out << "  \"lambda\": ";
    write_vec(model.lambda);
    out << ",\n  \"beta\": ";
    write_vec(model.beta.data());
    out << "\n}\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

MouModel load_mou_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (j.value("model_type", "") != "mou")
        throw std::runtime_error(path + ": not a mixture-of-unigrams model file");

    MouModel model;
    model.k = j.at("k").get<std::size_t>();
    model.n = j.at("n").get<std::size_t>();
    model.lambda = j.at("lambda").get<std::vector<double>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    if (beta.size() != model.k * model.n || model.lambda.size() != model.k)
        throw std::runtime_error(path + ": inconsistent dimensions");
    model.beta = Matrix(model.k, model.n);
    model.beta.data() = beta;
    return model;
}

} // namespace lbg
