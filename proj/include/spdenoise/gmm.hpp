#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spdenoise/errors.hpp"

namespace spd {

/// Dirichlet-smoothed Gaussian mixture over patch vectors.
struct GmmModel {
    Eigen::VectorXd phi;                      // K mixing weights, sum 1
    Eigen::MatrixXd means;                    // K x d
    std::vector<Eigen::MatrixXd> covariances; // K matrices d x d, SPD
    double beta = 1.0;                        // Dirichlet concentration
    std::vector<std::uint8_t> retained;       // survivors of pruning

    int k() const { return static_cast<int>(phi.size()); }
    int dim() const { return static_cast<int>(means.cols()); }
    int retained_count() const {
        int n = 0;
        for (auto r : retained) n += r != 0;
        return n;
    }
};

struct Assignment {
    std::vector<int> labels;          // one cluster index per patch
    Eigen::MatrixXd responsibilities; // N x K, rows sum to 1
};

struct EmSettings {
    int max_iters = 30;
    double rel_tol = 1e-5;      // relative MAP-objective change to stop
    double ridge = 1e-3;        // covariance regularizer scale
    int min_cluster_size = 0;   // 0 = auto: max(10, ceil(0.1 * N / K))
    std::uint32_t seed = 0;
    bool diagonal_covariance = false;  // speed/accuracy trade-off

    void validate() const {
        if (max_iters < 1) throw config_error("max_iters must be >= 1");
        if (rel_tol <= 0.0) throw config_error("rel_tol must be > 0");
        if (ridge < 0.0) throw config_error("ridge must be >= 0");
    }
};

/// Per-iteration diagnostics from fit().
struct FitTrace {
    std::vector<double> objective;  // MAP objective at each E-step
    int iterations = 0;
};

/// Log multivariate normal density via Cholesky factorization.
inline double gauss_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                           const Eigen::MatrixXd& sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw numerical_error("covariance is not positive definite");
    const auto& L = llt.matrixL();
    double logdet = 0.0;
    for (int i = 0; i < sigma.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
    const Eigen::VectorXd y = L.solve(x - mu);
    const double d = static_cast<double>(x.size());
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet + y.squaredNorm());
}

namespace detail {

// N x K matrix of log(phi_k) + log N(p_n; mu_k, Sigma_k) for retained
// clusters; -inf columns elsewhere.
inline Eigen::MatrixXd log_weighted_densities(const Eigen::MatrixXd& vectors,
                                              const GmmModel& model) {
    const Eigen::Index n = vectors.rows();
    const int k = model.k();
    const int d = model.dim();
    const double log2pi = std::log(2.0 * std::numbers::pi);
    Eigen::MatrixXd ld(n, k);
    ld.setConstant(-std::numeric_limits<double>::infinity());
    for (int j = 0; j < k; ++j) {
        if (!model.retained.empty() && !model.retained[j]) continue;
        Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[j]);
        if (llt.info() != Eigen::Success)
            throw numerical_error("cluster covariance lost positive definiteness");
        const auto& L = llt.matrixL();
        double logdet = 0.0;
        for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(L(i, i));
        Eigen::MatrixXd centered = vectors.transpose();
        centered.colwise() -= model.means.row(j).transpose();
        const Eigen::MatrixXd y = L.solve(centered);  // d x N triangular solve
        const double base = std::log(model.phi[j]) - 0.5 * (d * log2pi + logdet);
        ld.col(j) = (-0.5 * y.colwise().squaredNorm().transpose().array() + base).matrix();
    }
    return ld;
}

// Row-wise softmax in log space. Optionally accumulates the log-sum-exp
// total (the data term of the MAP objective).
inline Eigen::MatrixXd responsibilities_from_log(const Eigen::MatrixXd& ld,
                                                 double* logsumexp_total = nullptr) {
    Eigen::MatrixXd resp(ld.rows(), ld.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < ld.rows(); ++i) {
        const double m = ld.row(i).maxCoeff();
        if (!std::isfinite(m))
            throw numerical_error("all component densities vanished for a patch");
        const Eigen::ArrayXd e = (ld.row(i).array() - m).exp();
        const double s = e.sum();
        resp.row(i) = (e / s).matrix();
        total += m + std::log(s);
    }
    if (logsumexp_total) *logsumexp_total = total;
    return resp;
}

}  // namespace detail

/// E-step, Dirichlet-smoothed mixture posterior per patch. Rows sum to 1.
inline Eigen::MatrixXd e_step(const Eigen::MatrixXd& vectors, const GmmModel& model) {
    if (vectors.rows() < 1) throw config_error("e_step needs at least one vector");
    return detail::responsibilities_from_log(detail::log_weighted_densities(vectors, model));
}

/// M-step updates in place. Clusters with zero responsibility mass keep
/// their previous mean and covariance.
inline void m_step(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& resp,
                   double beta, double ridge, GmmModel& model,
                   bool diagonal_covariance = false) {
    const Eigen::Index n = vectors.rows();
    const int k = static_cast<int>(resp.cols());
    const int d = static_cast<int>(vectors.cols());
    const Eigen::VectorXd mass = resp.colwise().sum().transpose();
    model.phi = (mass.array() + beta) / (static_cast<double>(n) + k * beta);
    for (int j = 0; j < k; ++j) {
        if (!model.retained.empty() && !model.retained[j]) continue;
        if (mass[j] <= 0.0) continue;  // empty cluster, parameters frozen
        const Eigen::VectorXd mu = vectors.transpose() * resp.col(j) / mass[j];
        Eigen::MatrixXd centered = vectors;
        centered.rowwise() -= mu.transpose();
        Eigen::MatrixXd cov =
            centered.transpose() * (resp.col(j).asDiagonal() * centered) / mass[j];
        if (diagonal_covariance) cov = cov.diagonal().asDiagonal();
        cov += ridge * (cov.trace() / d + 1e-6) * Eigen::MatrixXd::Identity(d, d);
        model.means.row(j) = mu.transpose();
        model.covariances[j] = std::move(cov);
    }
}

/// Log-likelihood plus Dirichlet log-prior (beta - 1) * sum log phi.
inline double map_objective(const Eigen::MatrixXd& vectors, const GmmModel& model) {
    double lse = 0.0;
    detail::responsibilities_from_log(detail::log_weighted_densities(vectors, model), &lse);
    return lse + (model.beta - 1.0) * model.phi.array().log().sum();
}

/// Seeded EM fit. Means start at farthest-point samples of the data,
/// covariances at the pooled per-component variance, phi uniform.
inline std::pair<GmmModel, Assignment> fit(const Eigen::MatrixXd& vectors, int k,
                                           const EmSettings& settings, double beta = 1.0,
                                           FitTrace* trace = nullptr) {
    settings.validate();
    const Eigen::Index n = vectors.rows();
    const int d = static_cast<int>(vectors.cols());
    if (k < 1) throw config_error("cluster count must be >= 1");
    if (n < k) throw config_error("need at least K vectors to fit K clusters");

    GmmModel model;
    model.beta = beta;
    model.phi = Eigen::VectorXd::Constant(k, 1.0 / k);
    model.means.resize(k, d);
    model.retained.assign(k, 1);

    std::mt19937 rng(settings.seed);
    std::vector<Eigen::Index> chosen;
    chosen.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
    Eigen::VectorXd min_dist =
        (vectors.rowwise() - vectors.row(chosen[0])).rowwise().squaredNorm();
    std::vector<std::uint8_t> used(n, 0);
    used[chosen[0]] = 1;
    while (static_cast<int>(chosen.size()) < k) {
        Eigen::Index best = -1;
        double best_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!used[i] && min_dist[i] > best_d) {
                best_d = min_dist[i];
                best = i;
            }
        if (best < 0 || best_d <= 0.0) {
            // fewer distinct points than clusters: take the next unused index
            for (Eigen::Index i = 0; i < n; ++i)
                if (!used[i]) { best = i; break; }
        }
        used[best] = 1;
        chosen.push_back(best);
        min_dist = min_dist.cwiseMin(
            (vectors.rowwise() - vectors.row(best)).rowwise().squaredNorm());
    }
    for (int j = 0; j < k; ++j) model.means.row(j) = vectors.row(chosen[j]);

    const Eigen::RowVectorXd col_mean = vectors.colwise().mean();
    const double pooled_var = std::max(
        (vectors.rowwise() - col_mean).array().square().mean(), 1e-6);
    model.covariances.assign(k, pooled_var * Eigen::MatrixXd::Identity(d, d));

    Eigen::MatrixXd resp;
    double prev_obj = 0.0;
    bool converged = false;
    int iters = 0;
    for (int it = 0; it < settings.max_iters; ++it) {
        double lse = 0.0;
        resp = detail::responsibilities_from_log(
            detail::log_weighted_densities(vectors, model), &lse);
        const double obj = lse + (beta - 1.0) * model.phi.array().log().sum();
        if (trace) trace->objective.push_back(obj);
        iters = it + 1;
        if (it > 0 && std::abs(obj - prev_obj) <= settings.rel_tol * (std::abs(prev_obj) + 1e-12)) {
            converged = true;
            break;
        }
        prev_obj = obj;
        m_step(vectors, resp, beta, settings.ridge, model, settings.diagonal_covariance);
    }
    if (!converged) {
        // last action was an M-step; refresh responsibilities for the final model
        double lse = 0.0;
        resp = detail::responsibilities_from_log(
            detail::log_weighted_densities(vectors, model), &lse);
        if (trace) trace->objective.push_back(lse + (beta - 1.0) * model.phi.array().log().sum());
    }
    if (trace) trace->iterations = iters;

    Assignment assign;
    assign.responsibilities = resp;
    assign.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best;
        resp.row(i).maxCoeff(&best);
        assign.labels[i] = static_cast<int>(best);
    }
    return {std::move(model), std::move(assign)};
}

inline int auto_min_cluster_size(Eigen::Index n, int k) {
    return std::max<int>(10, static_cast<int>((n + 10 * k - 1) / (10 * k)));
}

/// Abandons clusters with fewer than min_cluster_size hard-assigned patches
/// (the largest cluster always survives) and relabels their patches to the
/// retained cluster with maximal responsibility.
inline void prune(GmmModel& model, Assignment& assignment, int min_cluster_size) {
    const int k = model.k();
    std::vector<Eigen::Index> counts(k, 0);
    for (int label : assignment.labels) ++counts[label];
    int largest = 0;
    for (int j = 1; j < k; ++j)
        if (counts[j] > counts[largest]) largest = j;
    for (int j = 0; j < k; ++j)
        model.retained[j] = (counts[j] >= min_cluster_size || j == largest) ? 1 : 0;

    if (assignment.responsibilities.size() == 0)
        throw config_error("prune requires stored responsibilities for relabeling");
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
        if (model.retained[assignment.labels[i]]) continue;
        int best = -1;
        double best_r = -1.0;
        for (int j = 0; j < k; ++j)
            if (model.retained[j] && assignment.responsibilities(i, j) > best_r) {
                best_r = assignment.responsibilities(i, j);
                best = j;
            }
        assignment.labels[i] = best;
    }
}

// --- model file, versioned binary, lossless round-trip ---

namespace detail {
inline void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void get_bytes(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw parse_error("model file truncated");
}
}  // namespace detail

inline void save_model(std::ostream& out, const GmmModel& model) {
    out.write("SPDGMM1\n", 8);
    const std::int32_t k = model.k(), d = model.dim();
    detail::put_bytes(out, &k, 4);
    detail::put_bytes(out, &d, 4);
    detail::put_bytes(out, &model.beta, 8);
    detail::put_bytes(out, model.phi.data(), sizeof(double) * k);
    for (int j = 0; j < k; ++j) {
        const Eigen::VectorXd mu = model.means.row(j).transpose();
        detail::put_bytes(out, mu.data(), sizeof(double) * d);
    }
    for (int j = 0; j < k; ++j)
        detail::put_bytes(out, model.covariances[j].data(),
                          sizeof(double) * static_cast<std::size_t>(d) * d);
    detail::put_bytes(out, model.retained.data(), model.retained.size());
}

inline GmmModel load_model(std::istream& in) {
    char magic[8];
    detail::get_bytes(in, magic, 8);
    if (std::string(magic, 8) != "SPDGMM1\n") throw parse_error("not a model file");
    std::int32_t k = 0, d = 0;
    detail::get_bytes(in, &k, 4);
    detail::get_bytes(in, &d, 4);
    if (k < 1 || d < 1) throw parse_error("model file has invalid dimensions");
    GmmModel model;
    detail::get_bytes(in, &model.beta, 8);
    model.phi.resize(k);
    detail::get_bytes(in, model.phi.data(), sizeof(double) * k);
    model.means.resize(k, d);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd mu(d);
        detail::get_bytes(in, mu.data(), sizeof(double) * d);
        model.means.row(j) = mu.transpose();
    }
    model.covariances.assign(k, Eigen::MatrixXd(d, d));
    for (int j = 0; j < k; ++j)
        detail::get_bytes(in, model.covariances[j].data(),
                          sizeof(double) * static_cast<std::size_t>(d) * d);
    model.retained.resize(k);
    detail::get_bytes(in, model.retained.data(), model.retained.size());
    return model;
}

inline void save_model_file(const std::string& path, const GmmModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    save_model(out, model);
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline GmmModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return load_model(in);
}

}  // namespace spd
