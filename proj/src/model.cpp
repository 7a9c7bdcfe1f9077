#include "lbg/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lbg {

void ModelParams::validate() const {
    require(k >= 1, "params: k must be >= 1");
    require(n >= 1, "params: n must be >= 1");
    require(lambda.size() == k, "params: lambda size mismatch");
    require(p.rows() == k && p.cols() == n, "params: p shape mismatch");
    require(c.rows() == k && c.cols() == n, "params: c shape mismatch");
    require(sigma2.rows() == k && sigma2.cols() == n, "params: sigma2 shape mismatch");
    require(cross_c.size() == n, "params: cross_c size mismatch");
    require(cross_sigma2.size() == n, "params: cross_sigma2 size mismatch");
    require(q.size() == k, "params: q size mismatch");
    double total = 0.0;
    for (double l : lambda) {
        require(l >= 0.0, "params: negative mixture weight");
        total += l;
    }
    require(std::abs(total - 1.0) < 1e-6, "params: mixture weights must sum to 1");
    for (double v : p.data()) require(v >= 0.0 && v <= 1.0, "params: p outside [0,1]");
    for (double v : sigma2.data()) require(v > 0.0, "params: non-positive variance");
    for (double v : cross_sigma2) require(v > 0.0, "params: non-positive cross variance");
    for (int qs : q)
        require(qs >= 1 && static_cast<std::size_t>(qs) <= n, "params: q outside [1, n]");
}

void FitConfig::validate() const {
    require(k >= 1, "config: k must be >= 1");
    require(max_iters >= 1, "config: max_iters must be >= 1");
    require(epsilon > 0.0, "config: epsilon must be positive");
    require(variance_floor > 0.0, "config: variance_floor must be positive");
    require(prob_clamp > 0.0 && prob_clamp < 0.5, "config: prob_clamp outside (0, 0.5)");
    require(q_init >= 0, "config: q_init must be non-negative");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void write_vector(std::ostream& out, const std::vector<double>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << format_double(v[i]);
    }
    out << ']';
}

void write_vector(std::ostream& out, const std::vector<int>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << v[i];
    }
    out << ']';
}

void write_matrix(std::ostream& out, const Matrix& m) {
    write_vector(out, m.data());
}

Matrix matrix_from(const nlohmann::json& arr, std::size_t rows, std::size_t cols,
                   const char* field) {
    if (!arr.is_array() || arr.size() != rows * cols)
        throw std::runtime_error(std::string("model json: bad ") + field);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < arr.size(); ++i) m.data()[i] = arr[i].get<double>();
    return m;
}

} // namespace

void save_model_json(const ModelParams& params, const std::string& path,
                     const std::string& codebook_hash, std::size_t trained_docs) {
    params.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "{\n";
    out << "  \"model_type\": \"lbg\",\n";
    out << "  \"k\": " << params.k << ",\n";
    out << "  \"n\": " << params.n << ",\n";
    out << "  \"trained_docs\": " << trained_docs << ",\n";
    out << "  \"codebook_hash\": \"" << codebook_hash << "\",\n";
    out << "  \"prob_clamp\": " << format_double(params.prob_clamp) << ",\n";
    out << "  \"lambda\": ";
    write_vector(out, params.lambda);
    out << ",\n  \"q\": ";
    write_vector(out, params.q);
    out << ",\n  \"p\": ";
    write_matrix(out, params.p);
    out << ",\n  \"c\": ";
    write_matrix(out, params.c);
    out << ",\n  \"sigma2\": ";
    write_matrix(out, params.sigma2);
    out << ",\n  \"cross_c\": ";
    write_vector(out, params.cross_c);
    out << ",\n  \"cross_sigma2\": ";
    write_vector(out, params.cross_sigma2);
    out << "\n}\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (j.value("model_type", "") != "lbg")
        throw std::runtime_error(path + ": not an lbg model file");

    LoadedModel loaded;
    ModelParams& p = loaded.params;
    p.k = j.at("k").get<std::size_t>();
    p.n = j.at("n").get<std::size_t>();
    loaded.trained_docs = j.value("trained_docs", std::size_t{0});
    loaded.codebook_hash = j.value("codebook_hash", "");
    p.prob_clamp = j.value("prob_clamp", 1e-6);
    p.lambda = j.at("lambda").get<std::vector<double>>();
    p.q = j.at("q").get<std::vector<int>>();
    p.p = matrix_from(j.at("p"), p.k, p.n, "p");
    p.c = matrix_from(j.at("c"), p.k, p.n, "c");
    p.sigma2 = matrix_from(j.at("sigma2"), p.k, p.n, "sigma2");
    p.cross_c = j.at("cross_c").get<std::vector<double>>();
    p.cross_sigma2 = j.at("cross_sigma2").get<std::vector<double>>();
    p.validate();
    return loaded;
}

void save_trace_csv(const FitTrace& trace, std::size_t k, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iter,loglik,residual";
    for (std::size_t s = 1; s <= k; ++s) out << ",q_" << s;
    out << '\n';
    for (const FitIterationStats& row : trace.iterations) {
        out << row.iter << ',' << format_double(row.loglik) << ','
            << format_double(row.residual);
        for (int qs : row.q) out << ',' << qs;
        out << '\n';
    }
}

std::string hash_bytes(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return hash_bytes(ss.str());
}

} // namespace lbg
