#include "lbg/applications.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "lbg/core.hpp"
#include "lbg/inference.hpp"

namespace lbg {

namespace {

// Minimum-cost perfect assignment via shortest augmenting paths with
// potentials; O(n^3). Returns row -> column.
std::vector<std::size_t> assignment_min(const Matrix& cost) {
    const std::size_t n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0); // column -> row, 1-based, 0 = free
    std::vector<std::size_t> way(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
    return assignment;
}

double assignment_cost(const Matrix& cost, const std::vector<std::size_t>& assignment) {
    double total = 0.0;
    for (std::size_t r = 0; r < assignment.size(); ++r) total += cost(r, assignment[r]);
    return total;
}

} // namespace

std::vector<std::size_t> hungarian(const Matrix& cost) {
    const std::size_t n = cost.rows();
    require(n >= 1 && cost.cols() == n, "hungarian: matrix must be square");
    for (double v : cost.data())
        require(std::isfinite(v), "hungarian: entries must be finite");

    const double best = assignment_cost(cost, assignment_min(cost));
    const double eps = 1e-9 * (1.0 + std::abs(best));

    // fix rows in order to the smallest column that still attains the optimum
    std::vector<std::size_t> result(n);
    std::vector<bool> col_used(n, false);
    double fixed_cost = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t rest = n - r - 1;
        for (std::size_t c = 0; c < n; ++c) {
            if (col_used[c]) continue;
            double sub_cost = 0.0;
            if (rest > 0) {
                Matrix sub(rest, rest);
                std::size_t cc = 0;
                std::vector<std::size_t> free_cols;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!col_used[j] && j != c) free_cols.push_back(j);
                }
                for (std::size_t i = 0; i < rest; ++i) {
                    for (cc = 0; cc < rest; ++cc)
                        sub(i, cc) = cost(r + 1 + i, free_cols[cc]);
                }
                sub_cost = assignment_cost(sub, assignment_min(sub));
            }
            if (fixed_cost + cost(r, c) + sub_cost <= best + eps) {
                result[r] = c;
                col_used[c] = true;
                fixed_cost += cost(r, c);
                break;
            }
        }
    }
    return result;
}

LabelMapping cluster_accuracy(const std::vector<int>& pred,
                              const std::vector<int>& truth, std::size_t k) {
    require(!pred.empty(), "cluster_accuracy: empty input");
    require(pred.size() == truth.size(), "cluster_accuracy: size mismatch");
    require(k >= 1, "cluster_accuracy: k must be >= 1");

    LabelMapping mapping;
    mapping.confusion = Matrix(k, k, 0.0);
    for (std::size_t j = 0; j < pred.size(); ++j) {
        require(pred[j] >= 1 && static_cast<std::size_t>(pred[j]) <= k,
                "cluster_accuracy: predicted label out of range");
        require(truth[j] >= 1 && static_cast<std::size_t>(truth[j]) <= k,
                "cluster_accuracy: true label out of range");
        mapping.confusion(static_cast<std::size_t>(pred[j] - 1),
                          static_cast<std::size_t>(truth[j] - 1)) += 1.0;
    }

    Matrix cost(k, k);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t t = 0; t < k; ++t) cost(s, t) = -mapping.confusion(s, t);
    }
    const std::vector<std::size_t> perm = hungarian(cost);

    double agree = 0.0;
    mapping.perm.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
        mapping.perm[s] = static_cast<int>(perm[s] + 1);
        agree += mapping.confusion(s, perm[s]);
    }
    mapping.accuracy = agree / static_cast<double>(pred.size());
    return mapping;
}

FeatureSet select_features(const ModelParams& params, double delta) {
    require(delta >= 0.0, "select_features: delta must be non-negative");
    FeatureSet fs;
    fs.delta = delta;
    for (std::size_t i = 0; i < params.n; ++i) {
        double best = 0.0;
        for (std::size_t s = 0; s < params.k; ++s) best = std::max(best, params.p(s, i));
        if (best >= delta) fs.kept.push_back(i);
    }
    return fs;
}

std::vector<ModelParams> supervised_fit(const DocumentMatrix& docs,
                                        const std::vector<int>& labels,
                                        const FitConfig& config,
                                        const std::vector<std::size_t>& per_class_k) {
    require(labels.size() == docs.rows(), "supervised_fit: label count mismatch");
    int h = 0;
    for (int l : labels) {
        require(l >= 1, "supervised_fit: labels must be >= 1");
        h = std::max(h, l);
    }
    require(h >= 1, "supervised_fit: no labels");
    if (!per_class_k.empty())
        require(per_class_k.size() == static_cast<std::size_t>(h),
                "supervised_fit: per_class_k size mismatch");

    std::vector<ModelParams> models;
    models.reserve(static_cast<std::size_t>(h));
    for (int l = 1; l <= h; ++l) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == l) members.push_back(j);
        }
        if (members.empty())
            throw std::invalid_argument("supervised_fit: class " + std::to_string(l) +
                                        " has no documents");
        FitConfig class_config = config;
        if (!per_class_k.empty()) class_config.k = per_class_k[static_cast<std::size_t>(l - 1)];
        if (members.size() < class_config.k)
            throw std::invalid_argument("supervised_fit: class " + std::to_string(l) +
                                        " has fewer documents than topics");
        DocumentMatrix sub(members.size(), docs.cols());
        for (std::size_t r = 0; r < members.size(); ++r) {
            auto src = docs.row(members[r]);
            std::copy(src.begin(), src.end(), sub.row(r).begin());
        }
        models.push_back(fit(sub, class_config).params);
    }
    return models;
}

int supervised_classify(std::span<const double> doc,
                        const std::vector<ModelParams>& models,
                        const std::vector<double>& priors) {
    require(!models.empty(), "supervised_classify: no models");
    if (!priors.empty())
        require(priors.size() == models.size(), "supervised_classify: prior size mismatch");

    int best = 1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < models.size(); ++l) {
        double score = infer(doc, models[l]).log_prob;
        if (!priors.empty()) {
            score += priors[l] > 0.0 ? std::log(priors[l])
                                     : -std::numeric_limits<double>::infinity();
        }
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(l + 1);
        }
    }
    return best;
}

std::vector<double> empirical_priors(const std::vector<int>& labels, std::size_t h) {
    require(!labels.empty(), "empirical_priors: empty labels");
    std::vector<double> priors(h, 0.0);
    for (int l : labels) {
        require(l >= 1 && static_cast<std::size_t>(l) <= h, "empirical_priors: label out of range");
        priors[static_cast<std::size_t>(l - 1)] += 1.0;
    }
    for (double& p : priors) p /= static_cast<double>(labels.size());
    return priors;
}

std::vector<std::size_t> kmeans(const Matrix& rows, std::size_t k, std::uint64_t seed,
                                const std::vector<std::size_t>& columns, int max_iters) {
    const std::size_t m = rows.rows(), n = rows.cols();
    require(k >= 1 && k <= m, "kmeans: need 1 <= k <= rows");
    for (std::size_t c : columns) require(c < n, "kmeans: column index out of range");

    std::vector<std::size_t> active = columns;
    if (active.empty()) {
        active.resize(n);
        std::iota(active.begin(), active.end(), 0);
    }

    const std::vector<std::size_t> seeds = farthest_first_seeds(rows, k, seed, columns);
    Matrix centers(k, active.size());
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t ci = 0; ci < active.size(); ++ci)
            centers(s, ci) = rows(seeds[s], active[ci]);
    }

    auto center_distance = [&](std::size_t j, std::size_t s) {
        double d = 0.0;
        auto row = rows.row(j);
        for (std::size_t ci = 0; ci < active.size(); ++ci) {
            const double diff = row[active[ci]] - centers(s, ci);
            d += diff * diff;
        }
        return d;
    };

    std::vector<std::size_t> assign(m, 0);
    std::vector<std::size_t> prev_assign;
    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t best = 0;
            double best_dist = center_distance(j, 0);
            for (std::size_t s = 1; s < k; ++s) {
                const double d = center_distance(j, s);
                if (d < best_dist) {
                    best_dist = d;
                    best = s;
                }
            }
            assign[j] = best;
        }
        if (assign == prev_assign) break;
        prev_assign = assign;

        std::vector<std::size_t> counts(k, 0);
        Matrix sums(k, active.size(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            ++counts[assign[j]];
            auto row = rows.row(j);
            for (std::size_t ci = 0; ci < active.size(); ++ci)
                sums(assign[j], ci) += row[active[ci]];
        }
        for (std::size_t s = 0; s < k; ++s) {
            if (counts[s] == 0) {
                // re-seed an emptied cluster at the point farthest from its center
                std::size_t far = 0;
                double far_dist = -1.0;
                for (std::size_t j = 0; j < m; ++j) {
                    if (counts[assign[j]] <= 1) continue;
                    const double d = center_distance(j, assign[j]);
                    if (d > far_dist) {
                        far_dist = d;
                        far = j;
                    }
                }
                for (std::size_t ci = 0; ci < active.size(); ++ci)
                    centers(s, ci) = rows(far, active[ci]);
                continue;
            }
            for (std::size_t ci = 0; ci < active.size(); ++ci)
                centers(s, ci) = sums(s, ci) / static_cast<double>(counts[s]);
        }
    }
    return assign;
}

std::size_t select_topic_count(const DocumentMatrix& docs,
                               const std::vector<std::size_t>& candidates,
                               const FitConfig& config, double holdout_fraction,
                               std::uint64_t split_seed) {
    require(!candidates.empty(), "select_topic_count: no candidates");
    require(holdout_fraction > 0.0 && holdout_fraction < 1.0,
            "select_topic_count: fraction outside (0,1)");
    const std::size_t m = docs.rows();

    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(split_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t holdout = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(m))));
    require(holdout < m, "select_topic_count: holdout swallows the corpus");

    DocumentMatrix train(m - holdout, docs.cols());
    DocumentMatrix held(holdout, docs.cols());
    for (std::size_t r = 0; r < m - holdout; ++r) {
        auto src = docs.row(idx[r + holdout]);
        std::copy(src.begin(), src.end(), train.row(r).begin());
    }
    for (std::size_t r = 0; r < holdout; ++r) {
        auto src = docs.row(idx[r]);
        std::copy(src.begin(), src.end(), held.row(r).begin());
    }

    std::size_t best_k = candidates.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t cand : candidates) {
        FitConfig cfg = config;
        cfg.k = cand;
        require(train.rows() >= cand, "select_topic_count: too few training documents");
        const FitResult res = fit(train, cfg);
        double score = 0.0;
        for (std::size_t r = 0; r < holdout; ++r)
            score += infer(held.row(r), res.params).log_prob;
        score /= static_cast<double>(holdout);
        if (score > best_score) {
            best_score = score;
            best_k = cand;
        }
    }
    return best_k;
}

std::string format_confusion_report(const LabelMapping& mapping) {
    const std::size_t k = mapping.confusion.rows();
    std::ostringstream out;
    out << "confusion (rows: cluster, cols: class)\n";
    out << "        ";
    for (std::size_t t = 0; t < k; ++t) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%8zu", t + 1);
        out << buf;
    }
    out << '\n';
    for (std::size_t s = 0; s < k; ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%8zu", s + 1);
        out << buf;
        for (std::size_t t = 0; t < k; ++t) {
            std::snprintf(buf, sizeof(buf), "%8lld",
                          static_cast<long long>(mapping.confusion(s, t)));
            out << buf;
        }
        out << '\n';
    }
    out << "mapping:";
    for (std::size_t s = 0; s < k; ++s) out << ' ' << (s + 1) << "->" << mapping.perm[s];
    out << '\n';
    char acc[32];
    std::snprintf(acc, sizeof(acc), "accuracy: %.4f\n", mapping.accuracy);
    out << acc;
    return out.str();
}

} // namespace lbg
