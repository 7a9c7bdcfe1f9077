#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "lbg/applications.hpp"
#include "lbg/core.hpp"
#include "lbg/generator.hpp"
#include "oracles.hpp"

using namespace lbg;

TEST_CASE("assignment picks the diagonal when it dominates") {
    Matrix cost(2, 2);
    cost(0, 0) = 1;
    cost(0, 1) = 2;
    cost(1, 0) = 2;
    cost(1, 1) = 1;
    CHECK(hungarian(cost) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("assignment swaps when the anti-diagonal dominates") {
    Matrix cost(2, 2);
    cost(0, 0) = 2;
    cost(0, 1) = 1;
    cost(1, 0) = 1;
    cost(1, 1) = 2;
    CHECK(hungarian(cost) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("assignment ties break to the lexicographically smallest permutation") {
    Matrix flat(3, 3, 1.0);
    CHECK(hungarian(flat) == std::vector<std::size_t>{0, 1, 2});

    Matrix two(2, 2);
    two(0, 0) = 1;
    two(0, 1) = 3;
    two(1, 0) = 3;
    two(1, 1) = 1; // identity and swap both cost... identity 2, swap 6
    CHECK(hungarian(two) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("assignment rejects non-square and non-finite input") {
    Matrix rect(2, 3, 0.0);
    CHECK_THROWS_AS(hungarian(rect), std::invalid_argument);
    Matrix inf(2, 2, 0.0);
    inf(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(hungarian(inf), std::invalid_argument);
}

TEST_CASE("assignment cost equals the exhaustive minimum on random matrices") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> entry(0, 50);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 5; // up to 6x6
        Matrix cost(n, n);
        for (auto& v : cost.data()) v = entry(rng);
        const auto assignment = hungarian(cost);
        double total = 0.0;
        std::vector<bool> used(n, false);
        for (std::size_t r = 0; r < n; ++r) {
            CHECK_FALSE(used[assignment[r]]);
            used[assignment[r]] = true;
            total += cost(r, assignment[r]);
        }
        CHECK(total == doctest::Approx(oracle::exhaustive_assignment_cost(cost)));
    }
}

TEST_CASE("perfect predictions score accuracy 1") {
    const std::vector<int> labels = {1, 2, 3, 1, 2, 3};
    CHECK(cluster_accuracy(labels, labels, 3).accuracy == doctest::Approx(1.0));
}

TEST_CASE("consistently permuted predictions also score accuracy 1") {
    const std::vector<int> truth = {1, 2, 3, 1, 2, 3, 1};
    std::vector<int> pred(truth.size());
    const int perm[4] = {0, 3, 1, 2}; // 1->3, 2->1, 3->2
    for (std::size_t j = 0; j < truth.size(); ++j) pred[j] = perm[truth[j]];
    const LabelMapping mapping = cluster_accuracy(pred, truth, 3);
    CHECK(mapping.accuracy == doctest::Approx(1.0));
}

TEST_CASE("three agreements out of four give accuracy 0.75") {
    const LabelMapping mapping = cluster_accuracy({1, 1, 2, 2}, {1, 2, 2, 2}, 2);
    CHECK(mapping.accuracy == doctest::Approx(0.75));
}

TEST_CASE("accuracy is invariant under relabeling the predictions") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng() % 3, m = 20 + rng() % 30;
        std::vector<int> pred(m), truth(m);
        for (std::size_t j = 0; j < m; ++j) {
            pred[j] = 1 + static_cast<int>(rng() % k);
            truth[j] = 1 + static_cast<int>(rng() % k);
        }
        const double base = cluster_accuracy(pred, truth, k).accuracy;
        std::vector<int> relabel(k);
        std::iota(relabel.begin(), relabel.end(), 1);
        std::shuffle(relabel.begin(), relabel.end(), rng);
        std::vector<int> renamed(m);
        for (std::size_t j = 0; j < m; ++j) renamed[j] = relabel[pred[j] - 1];
        CHECK(cluster_accuracy(renamed, truth, k).accuracy == doctest::Approx(base));
    }
}

TEST_CASE("labels out of range are rejected") {
    CHECK_THROWS_AS(cluster_accuracy({1, 3}, {1, 2}, 2), std::invalid_argument);
    CHECK_THROWS_AS(cluster_accuracy({1, 0}, {1, 2}, 2), std::invalid_argument);
}

TEST_CASE("feature selection keeps everything at delta 0 and nothing above 1") {
    const ModelParams params = testutil::random_params(3, 8, 15);
    CHECK(select_features(params, 0.0).kept.size() == 8);
    CHECK(select_features(params, 1.000001).kept.empty());
}

TEST_CASE("feature selection thresholds the per-word maximum") {
    ModelParams params = testutil::random_params(3, 3, 17);
    params.p(0, 0) = 0.9;
    params.p(1, 0) = 0.1;
    params.p(2, 0) = 0.2;
    params.p(0, 1) = 0.4;
    params.p(1, 1) = 0.2;
    params.p(2, 1) = 0.1;
    params.p(0, 2) = 0.1;
    params.p(1, 2) = 0.6;
    params.p(2, 2) = 0.3;
    const FeatureSet fs = select_features(params, 0.5);
    CHECK(fs.kept == std::vector<std::size_t>{0, 2});
}

TEST_CASE("feature selection is monotone in delta") {
    const ModelParams params = testutil::random_params(2, 20, 19);
    const auto loose = select_features(params, 0.3).kept;
    const auto tight = select_features(params, 0.6).kept;
    CHECK(std::includes(loose.begin(), loose.end(), tight.begin(), tight.end()));
}

TEST_CASE("supervised fit with one class matches a plain fit") {
    const DocumentMatrix docs = testutil::random_documents(10, 6, 23);
    FitConfig config;
    config.k = 2;
    config.seed = 4;
    const std::vector<int> labels(10, 1);
    const auto models = supervised_fit(docs, labels, config);
    REQUIRE(models.size() == 1);
    const FitResult direct = fit(docs, config);
    CHECK(models[0].p == direct.params.p);
    CHECK(models[0].lambda == direct.params.lambda);
    CHECK(models[0].q == direct.params.q);
}

TEST_CASE("per-class models concentrate on their own vocabulary") {
    // class 1 uses words 0..3, class 2 uses words 4..7
    DocumentMatrix docs(12, 8, 0.0);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    std::vector<int> labels(12);
    for (std::size_t j = 0; j < 12; ++j) {
        const bool second = j >= 6;
        labels[j] = second ? 2 : 1;
        for (std::size_t i = 0; i < 4; ++i)
            docs(j, (second ? 4 : 0) + i) = weight(rng);
    }
    FitConfig config;
    config.k = 1;
    config.seed = 10;
    const auto models = supervised_fit(docs, labels, config);
    REQUIRE(models.size() == 2);
    // keyword mass must sit inside the class's own support
    double own0 = 0.0, other0 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) own0 += models[0].p(0, i) * models[0].c(0, i);
    for (std::size_t i = 4; i < 8; ++i) other0 += models[0].p(0, i) * models[0].c(0, i);
    CHECK(own0 > other0);
    double own1 = 0.0, other1 = 0.0;
    for (std::size_t i = 4; i < 8; ++i) own1 += models[1].p(0, i) * models[1].c(0, i);
    for (std::size_t i = 0; i < 4; ++i) other1 += models[1].p(0, i) * models[1].c(0, i);
    CHECK(own1 > other1);
}

TEST_CASE("a class without documents is an error") {
    const DocumentMatrix docs = testutil::random_documents(4, 3, 31);
    FitConfig config;
    config.k = 1;
    config.seed = 1;
    CHECK_THROWS_AS(supervised_fit(docs, {1, 1, 3, 3}, config), std::invalid_argument);
}

TEST_CASE("single-model classification always answers class 1") {
    const ModelParams model = testutil::random_params(2, 5, 37);
    const DocumentMatrix docs = testutil::random_documents(3, 5, 41);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(supervised_classify(docs.row(j), {model}) == 1);
}

TEST_CASE("identical models defer to the priors") {
    const ModelParams model = testutil::random_params(2, 5, 43);
    const DocumentMatrix docs = testutil::random_documents(3, 5, 47);
    const std::vector<ModelParams> models = {model, model};
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(supervised_classify(docs.row(j), models, {0.9, 0.1}) == 1);
}

TEST_CASE("classification argmax survives a constant shift of the priors") {
    // multiplying every prior by a constant shifts all log scores equally
    const DocumentMatrix docs = testutil::random_documents(5, 6, 53);
    std::vector<ModelParams> models;
    for (std::uint64_t s = 0; s < 3; ++s) models.push_back(testutil::random_params(2, 6, 59 + s));
    const std::vector<double> priors = {0.2, 0.5, 0.3};
    std::vector<double> scaled = priors;
    for (double& p : scaled) p *= 7.0;
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(supervised_classify(docs.row(j), models, priors) ==
              supervised_classify(docs.row(j), models, scaled));
}

TEST_CASE("held-out documents from separated classes classify at 95 percent") {
    // two classes over disjoint vocabulary halves
    BlockTemplateConfig tpl;
    tpl.k = 2;
    tpl.n = 40;
    tpl.p_keyword = 0.8;
    const ModelParams truth = make_block_template(tpl);
    const SyntheticCorpus corpus = sample_corpus(truth, 240, 100, 83);

    // split: first 200 train, last 40 held out
    DocumentMatrix train(200, 40), held(40, 40);
    std::vector<int> train_labels(200), held_labels(40);
    for (std::size_t j = 0; j < 200; ++j) {
        auto src = corpus.counts.row(j);
        std::copy(src.begin(), src.end(), train.row(j).begin());
        train_labels[j] = static_cast<int>(corpus.true_topics[j]) + 1;
    }
    for (std::size_t j = 0; j < 40; ++j) {
        auto src = corpus.counts.row(200 + j);
        std::copy(src.begin(), src.end(), held.row(j).begin());
        held_labels[j] = static_cast<int>(corpus.true_topics[200 + j]) + 1;
    }

    FitConfig config;
    config.k = 1; // one topic per class model
    config.seed = 19;
    config.variance_floor = 0.25;
    const auto models = supervised_fit(train, train_labels, config);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < 40; ++j) {
        if (supervised_classify(held.row(j), models) == held_labels[j]) ++correct;
    }
    CHECK(correct >= 38); // 95% of 40
}

TEST_CASE("empirical priors count label frequencies") {
    const auto priors = empirical_priors({1, 1, 2, 3, 3, 3}, 3);
    CHECK(priors[0] == doctest::Approx(2.0 / 6.0));
    CHECK(priors[1] == doctest::Approx(1.0 / 6.0));
    CHECK(priors[2] == doctest::Approx(3.0 / 6.0));
}

TEST_CASE("k-means separates two distant clouds perfectly") {
    std::mt19937_64 rng(61);
    std::normal_distribution<double> noise(0.0, 0.3);
    DocumentMatrix points(40, 2);
    std::vector<int> truth(40);
    for (std::size_t j = 0; j < 40; ++j) {
        const bool second = j % 2 == 1;
        truth[j] = second ? 2 : 1;
        points(j, 0) = (second ? 10.0 : 0.0) + noise(rng);
        points(j, 1) = (second ? -5.0 : 5.0) + noise(rng);
    }
    const auto labels = kmeans(points, 2, 3);
    std::vector<int> pred(40);
    for (std::size_t j = 0; j < 40; ++j) pred[j] = static_cast<int>(labels[j]) + 1;
    CHECK(cluster_accuracy(pred, truth, 2).accuracy == doctest::Approx(1.0));
}

TEST_CASE("k-means with k = m isolates every distinct point") {
    DocumentMatrix points(5, 1);
    for (std::size_t j = 0; j < 5; ++j) points(j, 0) = static_cast<double>(j) * 2.0;
    const auto labels = kmeans(points, 5, 11);
    std::vector<std::size_t> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < 5; ++j) CHECK(sorted[j] == j);
}

TEST_CASE("k-means is deterministic given the seed") {
    const DocumentMatrix points = testutil::random_documents(30, 4, 67);
    CHECK(kmeans(points, 3, 5) == kmeans(points, 3, 5));
}

TEST_CASE("k-means can run on a feature subset") {
    // only column 0 separates; columns 1-2 are shared noise
    std::mt19937_64 rng(71);
    std::normal_distribution<double> noise(0.0, 1.0);
    DocumentMatrix points(30, 3);
    std::vector<int> truth(30);
    for (std::size_t j = 0; j < 30; ++j) {
        const bool second = j % 2 == 1;
        truth[j] = second ? 2 : 1;
        points(j, 0) = second ? 20.0 : 0.0;
        points(j, 1) = noise(rng);
        points(j, 2) = noise(rng);
    }
    const auto labels = kmeans(points, 2, 13, {0});
    std::vector<int> pred(30);
    for (std::size_t j = 0; j < 30; ++j) pred[j] = static_cast<int>(labels[j]) + 1;
    CHECK(cluster_accuracy(pred, truth, 2).accuracy == doctest::Approx(1.0));
}

TEST_CASE("topic-count sweep lands on a sensible candidate") {
    BlockTemplateConfig tpl;
    tpl.k = 2;
    tpl.n = 20;
    const ModelParams truth = make_block_template(tpl);
    const SyntheticCorpus corpus = sample_corpus(truth, 80, 60, 73);
    FitConfig config;
    config.seed = 2;
    config.variance_floor = 0.25;
    const std::size_t best = select_topic_count(corpus.counts, {1, 2, 3}, config, 0.25, 5);
    CHECK(best >= 1);
    CHECK(best <= 3);
}

TEST_CASE("confusion report prints the grid, mapping and accuracy") {
    const LabelMapping mapping = cluster_accuracy({1, 1, 2, 2}, {1, 2, 2, 2}, 2);
    const std::string report = format_confusion_report(mapping);
    CHECK(report ==
          "confusion (rows: cluster, cols: class)\n"
          "               1       2\n"
          "       1       1       1\n"
          "       2       0       2\n"
          "mapping: 1->1 2->2\n"
          "accuracy: 0.7500\n");
}
