// lbg: fit, evaluate and apply latent Bernoulli-Gauss mixtures from the
// command line. Exit codes: 0 success, 1 input error, 2 fit stopped at
// max-iters without meeting the stopping criterion (outputs still written).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbg/applications.hpp"
#include "lbg/collab_filter.hpp"
#include "lbg/core.hpp"
#include "lbg/corpus.hpp"
#include "lbg/generator.hpp"
#include "lbg/inference.hpp"
#include "lbg/model.hpp"
#include "lbg/mou.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNoConvergence = 2;

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs; // path, hash
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;
    std::size_t iterations = 0;
};

void write_manifest(const RunManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"' || ch == '\\') q.push_back('\\');
            q.push_back(ch);
        }
        q.push_back('"');
        return q;
    };
    out << "{\n  \"command\": " << quote(manifest.command) << ",\n  \"argv\": [";
    for (std::size_t i = 0; i < manifest.argv.size(); ++i) {
        if (i) out << ", ";
        out << quote(manifest.argv[i]);
    }
    out << "],\n  \"seed\": " << manifest.seed << ",\n  \"inputs\": {";
    for (std::size_t i = 0; i < manifest.inputs.size(); ++i) {
        if (i) out << ", ";
        out << quote(manifest.inputs[i].first) << ": " << quote(manifest.inputs[i].second);
    }
    out << "},\n  \"outputs\": [";
    for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
        if (i) out << ", ";
        out << quote(manifest.outputs[i]);
    }
    out << "],\n  \"iterations\": " << manifest.iterations
        << ",\n  \"wall_clock_seconds\": " << lbg::format_double(manifest.wall_clock_seconds)
        << "\n}\n";
}

std::string default_manifest_path(const RunManifest& manifest) {
    if (!manifest.outputs.empty()) return manifest.outputs.front() + ".manifest.json";
    return manifest.command + ".manifest.json";
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::set<std::string> resolve_stopwords(const std::string& choice) {
    if (choice == "none") return {};
    if (choice == "english") return lbg::default_stopwords();
    std::ifstream in(choice);
    if (!in) throw std::runtime_error("cannot open stopword file " + choice);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

struct CorpusOptions {
    std::string input;
    std::string format = "text";
    std::string vocab;
    std::string weighting = "tfidf";
    std::string stopwords = "english";
    int min_df = 2;
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& opts, bool for_fit) {
    cmd->add_option("--input", opts.input, "corpus file")->required();
    cmd->add_option("--format", opts.format, "corpus format: text | docword")
        ->check(CLI::IsMember({"text", "docword"}));
    cmd->add_option("--vocab", opts.vocab, "vocabulary file (docword format only)");
    cmd->add_option("--weighting", opts.weighting,
                    "matrix weighting: tfidf | counts (counts required for --model mou)")
        ->check(CLI::IsMember({"tfidf", "counts"}));
    if (for_fit) {
        cmd->add_option("--stopwords", opts.stopwords,
                        "stop-word list: none | english | <file>");
        cmd->add_option("--min-df", opts.min_df, "minimum document frequency (text format)");
    }
}

struct LoadedCorpus {
    lbg::RawCorpus raw;
    lbg::Codebook codebook; // filled only when build_codebook = true or docword
};

// build_codebook applies only to text input; scoring commands bring their own
// codebook and must not re-derive one from the novel documents.
LoadedCorpus load_corpus(const CorpusOptions& opts, bool build_codebook) {
    LoadedCorpus loaded;
    if (opts.format == "docword") {
        if (opts.vocab.empty())
            throw std::runtime_error("--vocab is required with --format docword");
        auto [raw, cb] = lbg::load_docword(opts.input, opts.vocab);
        loaded.raw = std::move(raw);
        loaded.codebook = std::move(cb);
    } else {
        loaded.raw = lbg::load_plaintext(opts.input, resolve_stopwords(opts.stopwords));
        if (build_codebook) {
            loaded.codebook = lbg::build_codebook(
                loaded.raw, resolve_stopwords(opts.stopwords), opts.min_df);
        }
    }
    return loaded;
}

// Novel-document matrix under a frozen model's codebook and idf statistics.
lbg::DocumentMatrix vectorize_for_model(const lbg::RawCorpus& raw,
                                        const lbg::Codebook& codebook,
                                        const std::string& weighting,
                                        std::size_t trained_docs) {
    if (weighting == "counts") return lbg::vectorize_counts(raw, codebook);
    return lbg::vectorize_tfidf(raw, codebook, trained_docs);
}

void verify_codebook_hash(const std::string& codebook_path, const std::string& model_hash,
                          const std::string& model_path) {
    if (model_hash.empty()) return;
    const std::string actual = lbg::hash_file(codebook_path);
    if (actual != model_hash)
        throw std::runtime_error(codebook_path + " does not match the codebook hash in " +
                                 model_path + " (" + actual + " vs " + model_hash + ")");
}

std::vector<double> parse_weights(const std::string& csv) {
    std::vector<double> weights;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) weights.push_back(std::stod(item));
    }
    return weights;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    CorpusOptions corpus;
    std::string model_kind = "lbg";
    std::size_t topics = 1;
    std::uint64_t seed = 0;
    double epsilon = 1.0;
    int max_iters = 200;
    double variance_floor = -1.0; // resolved per weighting
    double prob_clamp = 1e-6;
    int q_init = 0;
    double alpha_smooth = 1e-2;
    std::string out;
    std::string trace;
    std::string codebook_out;
    std::string manifest;
};

int run_fit(const FitArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    RunManifest manifest;
    manifest.command = "fit";
    manifest.argv = argv;
    manifest.seed = args.seed;
    manifest.inputs.emplace_back(args.corpus.input, lbg::hash_file(args.corpus.input));
    if (!args.corpus.vocab.empty())
        manifest.inputs.emplace_back(args.corpus.vocab, lbg::hash_file(args.corpus.vocab));
    if (args.corpus.stopwords != "none" && args.corpus.stopwords != "english")
        manifest.inputs.emplace_back(args.corpus.stopwords,
                                     lbg::hash_file(args.corpus.stopwords));

    std::string weighting = args.corpus.weighting;
    if (args.model_kind == "mou") {
        if (weighting == "tfidf" && args.corpus.format == "text")
            throw std::runtime_error("--model mou consumes counts; use --weighting counts");
        weighting = "counts";
    }

    const LoadedCorpus loaded = load_corpus(args.corpus, true);
    const lbg::DocumentMatrix docs =
        weighting == "counts" ? lbg::vectorize_counts(loaded.raw, loaded.codebook)
                              : lbg::vectorize_tfidf(loaded.raw, loaded.codebook);

    // default floor scales with the data: (0.2 * mean positive weight)^2.
    // Variances pinned far below the weight scale turn single-support cells
    // into spikes that whip the posteriors around.
    double floor = args.variance_floor;
    if (floor <= 0.0) {
        double total = 0.0;
        std::size_t positives = 0;
        for (double v : docs.data()) {
            if (v > 0.0) {
                total += v;
                ++positives;
            }
        }
        const double mean_weight = positives > 0 ? total / static_cast<double>(positives) : 1.0;
        floor = std::max(1e-6, 0.04 * mean_weight * mean_weight);
    }

    const std::string codebook_path =
        args.codebook_out.empty() ? args.out + ".codebook.tsv" : args.codebook_out;
    lbg::save_codebook(loaded.codebook, codebook_path);
    const std::string codebook_hash = lbg::hash_file(codebook_path);
    const std::string trace_path = args.trace.empty() ? args.out + ".trace.csv" : args.trace;

    bool converged = true;
    if (args.model_kind == "mou") {
        lbg::MouConfig config;
        config.seed = args.seed;
        config.max_iters = args.max_iters;
        config.alpha_smooth = args.alpha_smooth;
        lbg::MouFitInfo info;
        const lbg::MouModel model = lbg::mou_fit(docs, args.topics, config, &info);
        lbg::save_mou_model_json(model, args.out);
        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot write " + trace_path);
        trace << "iter,loglik\n";
        for (std::size_t t = 0; t < info.loglik.size(); ++t)
            trace << (t + 1) << ',' << lbg::format_double(info.loglik[t]) << '\n';
        manifest.iterations = static_cast<std::size_t>(info.iterations);
        converged = info.converged;
    } else {
        lbg::FitConfig config;
        config.k = args.topics;
        config.seed = args.seed;
        config.epsilon = args.epsilon;
        config.max_iters = args.max_iters;
        config.variance_floor = floor;
        config.prob_clamp = args.prob_clamp;
        config.q_init = args.q_init;
        const lbg::FitResult result = lbg::fit(docs, config);
        lbg::save_model_json(result.params, args.out, codebook_hash, docs.rows());
        lbg::save_trace_csv(result.trace, result.params.k, trace_path);
        manifest.iterations = result.trace.iterations.size();
        converged = result.trace.converged;
    }

    manifest.outputs.push_back(args.out);
    manifest.outputs.push_back(trace_path);
    manifest.outputs.push_back(codebook_path);
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    if (!converged) {
        std::cerr << "fit: stopping criterion not met within " << args.max_iters
                  << " iterations (model written)\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
    CorpusOptions corpus;
    std::string model;
    std::string codebook;
    std::string out;
    std::string manifest;
};

int run_classify(const ClassifyArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    const lbg::LoadedModel loaded = lbg::load_model_json(args.model);
    verify_codebook_hash(args.codebook, loaded.codebook_hash, args.model);
    const lbg::Codebook codebook = lbg::load_codebook(args.codebook);

    const LoadedCorpus corpus = load_corpus(args.corpus, false);
    const lbg::DocumentMatrix docs = vectorize_for_model(
        corpus.raw, codebook, args.corpus.weighting, loaded.trained_docs);

    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot write " + args.out);
    out << "doc_id,map_topic,log_prob";
    for (std::size_t s = 1; s <= loaded.params.k; ++s) out << ",mu_" << s;
    out << '\n';
    for (std::size_t j = 0; j < docs.rows(); ++j) {
        const lbg::InferenceResult result = lbg::infer(docs.row(j), loaded.params);
        out << (j + 1) << ',' << (result.map_topic + 1) << ','
            << lbg::format_double(result.log_prob);
        for (double mu : result.mu) out << ',' << lbg::format_double(mu);
        out << '\n';
    }
    out.close();

    RunManifest manifest;
    manifest.command = "classify";
    manifest.argv = argv;
    manifest.inputs.emplace_back(args.corpus.input, lbg::hash_file(args.corpus.input));
    manifest.inputs.emplace_back(args.model, lbg::hash_file(args.model));
    manifest.inputs.emplace_back(args.codebook, lbg::hash_file(args.codebook));
    manifest.outputs.push_back(args.out);
    manifest.iterations = docs.rows();
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

// ---------------------------------------------------------------- features

struct FeaturesArgs {
    std::string model;
    std::string codebook;
    double delta = 0.5;
    std::string out;
    CorpusOptions corpus; // optional reduced-matrix export
    bool have_input = false;
    std::string reduced_prefix;
    std::string manifest;
};

int run_features(const FeaturesArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    const lbg::LoadedModel loaded = lbg::load_model_json(args.model);
    lbg::Codebook codebook;
    if (!args.codebook.empty()) {
        verify_codebook_hash(args.codebook, loaded.codebook_hash, args.model);
        codebook = lbg::load_codebook(args.codebook);
        if (codebook.size() != loaded.params.n)
            throw std::runtime_error("codebook size does not match the model vocabulary");
    }

    const lbg::FeatureSet features = lbg::select_features(loaded.params, args.delta);
    {
        std::ofstream out(args.out);
        if (!out) throw std::runtime_error("cannot write " + args.out);
        for (std::size_t i : features.kept) {
            out << (i + 1);
            if (!codebook.words.empty()) out << '\t' << codebook.words[i];
            out << '\n';
        }
    }

    RunManifest manifest;
    manifest.command = "features";
    manifest.argv = argv;
    manifest.inputs.emplace_back(args.model, lbg::hash_file(args.model));
    manifest.outputs.push_back(args.out);

    if (!args.reduced_prefix.empty()) {
        if (!args.have_input)
            throw std::runtime_error("--reduced-prefix needs --input to export a matrix");
        if (codebook.words.empty())
            throw std::runtime_error("--reduced-prefix needs --codebook to name columns");
        const LoadedCorpus corpus = load_corpus(args.corpus, false);
        const lbg::DocumentMatrix docs =
            lbg::vectorize_counts(corpus.raw, codebook); // counts keep docword integral
        const std::string docword_path = args.reduced_prefix + ".docword.txt";
        const std::string vocab_path = args.reduced_prefix + ".vocab.txt";
        {
            std::ofstream vout(vocab_path);
            if (!vout) throw std::runtime_error("cannot write " + vocab_path);
            for (std::size_t i : features.kept) vout << codebook.words[i] << '\n';
        }
        {
            std::size_t nnz = 0;
            for (std::size_t j = 0; j < docs.rows(); ++j) {
                for (std::size_t i : features.kept) {
                    if (docs(j, i) > 0.0) ++nnz;
                }
            }
            std::ofstream dout(docword_path);
            if (!dout) throw std::runtime_error("cannot write " + docword_path);
            dout << docs.rows() << '\n' << features.kept.size() << '\n' << nnz << '\n';
            for (std::size_t j = 0; j < docs.rows(); ++j) {
                for (std::size_t col = 0; col < features.kept.size(); ++col) {
                    const double v = docs(j, features.kept[col]);
                    if (v > 0.0)
                        dout << (j + 1) << ' ' << (col + 1) << ' '
                             << static_cast<long long>(std::llround(v)) << '\n';
                }
            }
        }
        manifest.inputs.emplace_back(args.corpus.input, lbg::hash_file(args.corpus.input));
        manifest.outputs.push_back(docword_path);
        manifest.outputs.push_back(vocab_path);
    }

    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

// ---------------------------------------------------------------- cluster-eval

struct ClusterEvalArgs {
    CorpusOptions corpus;
    std::string model;
    std::string codebook;
    std::string labels;
    std::string out;
    std::string manifest;
};

int run_cluster_eval(const ClusterEvalArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    const lbg::LoadedModel loaded = lbg::load_model_json(args.model);
    verify_codebook_hash(args.codebook, loaded.codebook_hash, args.model);
    const lbg::Codebook codebook = lbg::load_codebook(args.codebook);

    const LoadedCorpus corpus = load_corpus(args.corpus, false);
    const lbg::DocumentMatrix docs = vectorize_for_model(
        corpus.raw, codebook, args.corpus.weighting, loaded.trained_docs);
    const std::vector<int> truth = lbg::load_labels(args.labels, docs.rows());

    std::vector<int> pred(docs.rows());
    for (std::size_t j = 0; j < docs.rows(); ++j)
        pred[j] = static_cast<int>(lbg::infer(docs.row(j), loaded.params).map_topic) + 1;

    std::size_t k = loaded.params.k;
    for (int label : truth) k = std::max(k, static_cast<std::size_t>(label));
    const lbg::LabelMapping mapping = lbg::cluster_accuracy(pred, truth, k);
    const std::string report = lbg::format_confusion_report(mapping);

    RunManifest manifest;
    manifest.command = "cluster-eval";
    manifest.argv = argv;
    manifest.inputs.emplace_back(args.corpus.input, lbg::hash_file(args.corpus.input));
    manifest.inputs.emplace_back(args.model, lbg::hash_file(args.model));
    manifest.inputs.emplace_back(args.labels, lbg::hash_file(args.labels));
    if (args.out.empty()) {
        std::cout << report;
    } else {
        std::ofstream out(args.out);
        if (!out) throw std::runtime_error("cannot write " + args.out);
        out << report;
        manifest.outputs.push_back(args.out);
    }
    manifest.iterations = docs.rows();
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::size_t topics = 3;
    std::size_t docs = 600;
    std::size_t words = 60;
    int doc_length = 150;
    std::uint64_t seed = 0;
    std::string lambda_csv;
    double noise_fraction = 0.0;
    double p_keyword = 0.9;
    double p_other = 0.01;
    double mean_keyword = 8.0;
    double mean_cross = 2.0;
    double sigma2 = 1.0;
    std::string out_prefix;
    std::string manifest;
};

int run_gen(const GenArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    lbg::BlockTemplateConfig tpl;
    tpl.k = args.topics;
    tpl.n = args.words;
    tpl.keyword_fraction = 1.0 - args.noise_fraction;
    tpl.p_keyword = args.p_keyword;
    tpl.p_other = args.p_other;
    tpl.mean_keyword = args.mean_keyword;
    tpl.mean_cross = args.mean_cross;
    tpl.sigma2 = args.sigma2;
    if (!args.lambda_csv.empty()) tpl.lambda = parse_weights(args.lambda_csv);

    const lbg::ModelParams params = lbg::make_block_template(tpl);
    const lbg::SyntheticCorpus corpus =
        lbg::sample_corpus(params, args.docs, args.doc_length, args.seed);

    const std::string docword = args.out_prefix + ".docword.txt";
    const std::string vocab = args.out_prefix + ".vocab.txt";
    const std::string topics = args.out_prefix + ".topics.txt";
    const std::string truth = args.out_prefix + ".truth.json";
    lbg::save_synthetic_corpus(corpus, docword, vocab, topics, truth);

    RunManifest manifest;
    manifest.command = "gen";
    manifest.argv = argv;
    manifest.seed = args.seed;
    manifest.outputs = {docword, vocab, topics, truth};
    manifest.iterations = args.docs;
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

// ---------------------------------------------------------------- cf

struct CfFitArgs {
    std::string train;
    std::size_t topics = 1;
    std::uint64_t seed = 0;
    int r_max = 5;
    int max_iters = 200;
    double rel_tol = 1e-6;
    double variance_floor = 0.25; // ratings are integers: unit resolution
    std::string out;
    std::string manifest;
};

int run_cf_fit(const CfFitArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    const lbg::RatingsMatrix train = lbg::load_udata(args.train, args.r_max);
    lbg::CfConfig config;
    config.seed = args.seed;
    config.max_iters = args.max_iters;
    config.rel_tol = args.rel_tol;
    config.variance_floor = args.variance_floor;
    const lbg::CfModel model = lbg::cf_fit(train, args.topics, config);
    lbg::save_cf_model_json(model, args.out);

    RunManifest manifest;
    manifest.command = "cf-fit";
    manifest.argv = argv;
    manifest.seed = args.seed;
    manifest.inputs.emplace_back(args.train, lbg::hash_file(args.train));
    manifest.outputs.push_back(args.out);
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

struct CfPredictArgs {
    std::string model;
    std::string train;
    std::size_t user = 0; // 1-based
    std::size_t item = 0; // 1-based
    int r_max = 5;
};

int run_cf_predict(const CfPredictArgs& args) {
    const lbg::CfModel model = lbg::load_cf_model_json(args.model);
    const lbg::RatingsMatrix ratings = lbg::load_udata(args.train, args.r_max);
    if (args.user < 1 || args.user > ratings.users)
        throw std::runtime_error("user id out of range");
    if (args.item < 1 || args.item > model.items)
        throw std::runtime_error("item id out of range");

    // forced prediction: condition on everything except the target item
    std::vector<lbg::Rating> conditioning;
    for (const lbg::Rating& r : ratings.by_user[args.user - 1]) {
        if (r.item != args.item - 1) conditioning.push_back(r);
    }
    const lbg::CfPrediction pred = lbg::cf_predict(model, conditioning, args.item - 1);
    std::cout << "user " << args.user << " item " << args.item << " predicted "
              << pred.t_star << '\n';
    for (std::size_t t = 0; t < pred.distribution.size(); ++t) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "p(rating=%zu) = %.6f\n", t + 1,
                      pred.distribution[t]);
        std::cout << buf;
    }
    return kExitOk;
}

struct CfEvalArgs {
    std::string train;
    std::size_t topics = 1;
    std::uint64_t seed = 0;
    std::uint64_t holdout_seed = 0;
    double test_fraction = 0.0; // 0 = evaluate on the training users
    std::uint64_t split_seed = 0;
    int r_max = 5;
    int max_iters = 200;
    double variance_floor = 0.25;
    std::string out;
    std::string manifest;
};

int run_cf_eval(const CfEvalArgs& args, const std::vector<std::string>& argv) {
    Stopwatch watch;
    const lbg::RatingsMatrix all = lbg::load_udata(args.train, args.r_max);

    lbg::RatingsMatrix train = all, test = all;
    if (args.test_fraction > 0.0) {
        // seeded user split: train on one side, force-predict on the other
        std::vector<std::size_t> users(all.users);
        std::iota(users.begin(), users.end(), 0);
        std::mt19937_64 rng(args.split_seed);
        std::shuffle(users.begin(), users.end(), rng);
        const auto test_users = static_cast<std::size_t>(
            std::llround(args.test_fraction * static_cast<double>(all.users)));
        if (test_users == 0 || test_users >= all.users)
            throw std::runtime_error("--test-fraction leaves an empty split");
        train.by_user.assign(all.users, {});
        test.by_user.assign(all.users, {});
        for (std::size_t r = 0; r < all.users; ++r) {
            auto& side = r < test_users ? test : train;
            side.by_user[users[r]] = all.by_user[users[r]];
        }
    }

    lbg::CfConfig config;
    config.seed = args.seed;
    config.max_iters = args.max_iters;
    config.variance_floor = args.variance_floor;
    const lbg::CfModel model = lbg::cf_fit(train, args.topics, config);
    const lbg::BaselineMeanPredictor baseline = lbg::baseline_mean_predict(train);

    const lbg::CfEvalReport base_report =
        lbg::evaluate_predictor(baseline, test, args.holdout_seed);
    const lbg::CfEvalReport cf_report = lbg::cf_evaluate(model, test, args.holdout_seed);
    const std::string report =
        lbg::format_cf_report({{"baseline", base_report}, {"lbg-cf", cf_report}});

    RunManifest manifest;
    manifest.command = "cf-eval";
    manifest.argv = argv;
    manifest.seed = args.seed;
    manifest.inputs.emplace_back(args.train, lbg::hash_file(args.train));
    if (args.out.empty()) {
        std::cout << report;
    } else {
        std::ofstream out(args.out);
        if (!out) throw std::runtime_error("cannot write " + args.out);
        out << report;
        manifest.outputs.push_back(args.out);
    }
    std::cerr << "evaluated " << cf_report.evaluated << " users, skipped "
              << cf_report.skipped << " single-rating users\n";
    manifest.iterations = cf_report.evaluated;
    manifest.wall_clock_seconds = watch.seconds();
    write_manifest(manifest, args.manifest.empty() ? default_manifest_path(manifest)
                                                   : args.manifest);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent Bernoulli-Gauss mixture toolkit"};
    app.require_subcommand(1);
    const std::vector<std::string> argv_copy(argv + 1, argv + argc);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a topic model and write it as JSON");
    add_corpus_options(fit_cmd, fit_args.corpus, true);
    fit_cmd->add_option("--model", fit_args.model_kind, "model family: lbg | mou")
        ->check(CLI::IsMember({"lbg", "mou"}));
    fit_cmd->add_option("--topics", fit_args.topics, "number of topics")->required();
    fit_cmd->add_option("--seed", fit_args.seed, "random seed")->required();
    fit_cmd->add_option("--epsilon", fit_args.epsilon, "stopping tolerance (lbg)");
    fit_cmd->add_option("--max-iters", fit_args.max_iters, "iteration cap");
    fit_cmd->add_option("--variance-floor", fit_args.variance_floor,
                        "variance floor (default: (0.2 * mean positive weight)^2)");
    fit_cmd->add_option("--prob-clamp", fit_args.prob_clamp, "keyword probability clamp");
    fit_cmd->add_option("--q-init", fit_args.q_init,
                        "initial keywords per topic (0 = 10% of vocabulary)");
    fit_cmd->add_option("--alpha-smooth", fit_args.alpha_smooth, "mou smoothing");
    fit_cmd->add_option("--out", fit_args.out, "model output path")->required();
    fit_cmd->add_option("--trace", fit_args.trace,
                        "per-iteration CSV trace (default <out>.trace.csv)");
    fit_cmd->add_option("--codebook-out", fit_args.codebook_out,
                        "codebook output path (default <out>.codebook.tsv)");
    fit_cmd->add_option("--manifest", fit_args.manifest, "manifest path override");

    ClassifyArgs classify_args;
    CLI::App* classify_cmd =
        app.add_subcommand("classify", "score novel documents under a fitted model");
    add_corpus_options(classify_cmd, classify_args.corpus, false);
    classify_cmd->add_option("--model", classify_args.model, "model JSON")->required();
    classify_cmd->add_option("--codebook", classify_args.codebook, "codebook file")->required();
    classify_cmd->add_option("--out", classify_args.out, "CSV output path")->required();
    classify_cmd->add_option("--manifest", classify_args.manifest, "manifest path override");

    FeaturesArgs features_args;
    CLI::App* features_cmd =
        app.add_subcommand("features", "export the selected-feature list (and matrix)");
    features_cmd->add_option("--model", features_args.model, "model JSON")->required();
    features_cmd->add_option("--codebook", features_args.codebook, "codebook file");
    features_cmd->add_option("--delta", features_args.delta, "keyword probability threshold");
    features_cmd->add_option("--out", features_args.out, "feature list output")->required();
    auto* features_input =
        features_cmd->add_option("--input", features_args.corpus.input, "corpus to reduce");
    features_cmd->add_option("--format", features_args.corpus.format, "corpus format")
        ->check(CLI::IsMember({"text", "docword"}));
    features_cmd->add_option("--vocab", features_args.corpus.vocab, "docword vocabulary");
    features_cmd->add_option("--reduced-prefix", features_args.reduced_prefix,
                             "write <prefix>.docword.txt and <prefix>.vocab.txt");
    features_cmd->add_option("--manifest", features_args.manifest, "manifest path override");

    ClusterEvalArgs cluster_args;
    CLI::App* cluster_cmd =
        app.add_subcommand("cluster-eval", "evaluate MAP clustering against labels");
    add_corpus_options(cluster_cmd, cluster_args.corpus, false);
    cluster_cmd->add_option("--model", cluster_args.model, "model JSON")->required();
    cluster_cmd->add_option("--codebook", cluster_args.codebook, "codebook file")->required();
    cluster_cmd->add_option("--labels", cluster_args.labels, "true labels, one per line")
        ->required();
    cluster_cmd->add_option("--out", cluster_args.out, "report path (default stdout)");
    cluster_cmd->add_option("--manifest", cluster_args.manifest, "manifest path override");

    GenArgs gen_args;
    CLI::App* gen_cmd =
        app.add_subcommand("gen", "sample a synthetic corpus with ground truth");
    gen_cmd->add_option("--topics,--k", gen_args.topics, "number of topics");
    gen_cmd->add_option("--docs", gen_args.docs, "number of documents");
    gen_cmd->add_option("--words", gen_args.words, "vocabulary size");
    gen_cmd->add_option("--doc-length", gen_args.doc_length, "words per document");
    gen_cmd->add_option("--seed", gen_args.seed, "random seed")->required();
    gen_cmd->add_option("--lambda", gen_args.lambda_csv, "mixture weights, comma separated");
    gen_cmd->add_option("--noise-fraction", gen_args.noise_fraction,
                        "share of vocabulary left topic-unspecific");
    gen_cmd->add_option("--p-keyword", gen_args.p_keyword, "keyword probability in block");
    gen_cmd->add_option("--p-other", gen_args.p_other, "keyword probability off block");
    gen_cmd->add_option("--mean-keyword", gen_args.mean_keyword, "keyword Gaussian mean");
    gen_cmd->add_option("--mean-cross", gen_args.mean_cross, "cross Gaussian mean");
    gen_cmd->add_option("--sigma2", gen_args.sigma2, "Gaussian variance");
    gen_cmd->add_option("--out-prefix", gen_args.out_prefix, "output file prefix")->required();
    gen_cmd->add_option("--manifest", gen_args.manifest, "manifest path override");

    CLI::App* cf_cmd = app.add_subcommand("cf", "collaborative filtering");
    cf_cmd->require_subcommand(1);

    CfFitArgs cf_fit_args;
    CLI::App* cf_fit_cmd = cf_cmd->add_subcommand("fit", "fit a rating mixture");
    cf_fit_cmd->add_option("--train", cf_fit_args.train, "ratings file (u.data format)")
        ->required();
    cf_fit_cmd->add_option("--topics", cf_fit_args.topics, "number of components")->required();
    cf_fit_cmd->add_option("--seed", cf_fit_args.seed, "random seed")->required();
    cf_fit_cmd->add_option("--r-max", cf_fit_args.r_max, "rating scale");
    cf_fit_cmd->add_option("--max-iters", cf_fit_args.max_iters, "iteration cap");
    cf_fit_cmd->add_option("--rel-tol", cf_fit_args.rel_tol, "log-likelihood tolerance");
    cf_fit_cmd->add_option("--variance-floor", cf_fit_args.variance_floor, "variance floor");
    cf_fit_cmd->add_option("--out", cf_fit_args.out, "model output path")->required();
    cf_fit_cmd->add_option("--manifest", cf_fit_args.manifest, "manifest path override");

    CfPredictArgs cf_predict_args;
    CLI::App* cf_predict_cmd = cf_cmd->add_subcommand("predict", "force-predict one rating");
    cf_predict_cmd->add_option("--model", cf_predict_args.model, "model JSON")->required();
    cf_predict_cmd->add_option("--train", cf_predict_args.train, "ratings file")->required();
    cf_predict_cmd->add_option("--user", cf_predict_args.user, "1-based user id")->required();
    cf_predict_cmd->add_option("--item", cf_predict_args.item, "1-based item id")->required();
    cf_predict_cmd->add_option("--r-max", cf_predict_args.r_max, "rating scale");

    CfEvalArgs cf_eval_args;
    CLI::App* cf_eval_cmd =
        cf_cmd->add_subcommand("eval", "leave-one-out MAE/RMSE against the baseline");
    cf_eval_cmd->add_option("--train", cf_eval_args.train, "ratings file")->required();
    cf_eval_cmd->add_option("--topics", cf_eval_args.topics, "number of components")
        ->required();
    cf_eval_cmd->add_option("--seed", cf_eval_args.seed, "fit seed")->required();
    cf_eval_cmd->add_option("--holdout-seed", cf_eval_args.holdout_seed,
                            "seed for the suppressed-rating draw")
        ->required();
    cf_eval_cmd->add_option("--test-fraction", cf_eval_args.test_fraction,
                            "user share held out for evaluation (0 = evaluate in-sample)");
    cf_eval_cmd->add_option("--split-seed", cf_eval_args.split_seed, "user split seed");
    cf_eval_cmd->add_option("--r-max", cf_eval_args.r_max, "rating scale");
    cf_eval_cmd->add_option("--max-iters", cf_eval_args.max_iters, "iteration cap");
    cf_eval_cmd->add_option("--variance-floor", cf_eval_args.variance_floor, "variance floor");
    cf_eval_cmd->add_option("--out", cf_eval_args.out, "report path (default stdout)");
    cf_eval_cmd->add_option("--manifest", cf_eval_args.manifest, "manifest path override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*fit_cmd) return run_fit(fit_args, argv_copy);
        if (*classify_cmd) return run_classify(classify_args, argv_copy);
        if (*features_cmd) {
            features_args.have_input = features_input->count() > 0;
            return run_features(features_args, argv_copy);
        }
        if (*cluster_cmd) return run_cluster_eval(cluster_args, argv_copy);
        if (*gen_cmd) return run_gen(gen_args, argv_copy);
        if (*cf_cmd) {
            if (*cf_fit_cmd) return run_cf_fit(cf_fit_args, argv_copy);
            if (*cf_predict_cmd) return run_cf_predict(cf_predict_args);
            if (*cf_eval_cmd) return run_cf_eval(cf_eval_args, argv_copy);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}
