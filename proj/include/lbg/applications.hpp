#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbg/matrix.hpp"
#include "lbg/model.hpp"

namespace lbg {

// Minimum-cost assignment on a square matrix (Kuhn-Munkres). Ties are broken
// toward the lexicographically smallest permutation. Entries must be finite.
std::vector<std::size_t> hungarian(const Matrix& cost);

struct LabelMapping {
    std::vector<int> perm; // perm[s-1] = class label assigned to cluster s
    double accuracy = 0.0;
    Matrix confusion;      // k x k counts, rows = cluster, cols = class
};

// Zero-one accuracy under the best cluster-to-class relabeling. Labels are
// 1-based and must lie in {1..k}.
LabelMapping cluster_accuracy(const std::vector<int>& pred,
                              const std::vector<int>& truth, std::size_t k);

struct FeatureSet {
    std::vector<std::size_t> kept; // word indices, ascending
    double delta = 0.0;
};

// Keep word i iff some topic gives it keyword probability >= delta.
FeatureSet select_features(const ModelParams& params, double delta);

// One independent fit per class label in {1..h}. per_class_k overrides
// config.k class by class when non-empty.
std::vector<ModelParams> supervised_fit(const DocumentMatrix& docs,
                                        const std::vector<int>& labels,
                                        const FitConfig& config,
                                        const std::vector<std::size_t>& per_class_k = {});

// argmax over classes of log prior + document log-probability. Empty priors
// means the prior-free form (uniform). Returns a 1-based class label.
int supervised_classify(std::span<const double> doc,
                        const std::vector<ModelParams>& models,
                        const std::vector<double>& priors = {});

std::vector<double> empirical_priors(const std::vector<int>& labels, std::size_t h);

// Lloyd iterations with farthest-first seeding; deterministic given seed.
// columns restricts the distance computation to a feature subset (empty =
// all). Returns 0-based cluster ids.
std::vector<std::size_t> kmeans(const Matrix& rows, std::size_t k, std::uint64_t seed,
                                const std::vector<std::size_t>& columns = {},
                                int max_iters = 100);

// Held-out average log-likelihood sweep over candidate topic counts; returns
// the candidate with the best held-out score (lowest k on ties).
std::size_t select_topic_count(const DocumentMatrix& docs,
                               const std::vector<std::size_t>& candidates,
                               const FitConfig& config, double holdout_fraction,
                               std::uint64_t split_seed);

// Plain-text confusion grid plus accuracy line.
std::string format_confusion_report(const LabelMapping& mapping);

} // namespace lbg
