// Least squares with cluster-robust (CR1) covariance, ITT effects,
// joint Wald tests, and interaction-based heterogeneous effects.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfa/math.hpp"
#include "sfa/table.hpp"

namespace sfa {

enum class SeMode { classical, cluster_cr1 };

struct EffectReport {
    double estimate = 0.0;   // percent scale (100 x coef) when percent_scale
    double std_error = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    double df = 0.0;         // G-1 for clustered tests
    bool percent_scale = false;
    double estimate_exp_percent = 0.0; // 100*(e^coef - 1), log outcomes only
    bool degenerate = false;
};

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    Eigen::VectorXd residuals;
    std::vector<std::string> names;
    long n = 0;
    long k = 0;
    int n_clusters = 0;
    SeMode se_mode = SeMode::cluster_cr1;
    double r_squared = 0.0;
    double m2 = 0.0; // central residual moments
    double m3 = 0.0;

    double test_df() const {
        return se_mode == SeMode::cluster_cr1 ? static_cast<double>(n_clusters - 1)
                                              : static_cast<double>(n - k);
    }
    int index(const std::string& name) const {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return static_cast<int>(j);
        throw DesignError("no coefficient named " + name);
    }
    EffectReport effect(const std::string& name, bool percent_scale = false) const {
        const int j = index(name);
        EffectReport r;
        const double c = coef(j);
        const double se = std::sqrt(cov(j, j));
        r.percent_scale = percent_scale;
        r.estimate = percent_scale ? 100.0 * c : c;
        r.std_error = percent_scale ? 100.0 * se : se;
        r.df = test_df();
        if (se > 0.0) {
            r.t_stat = c / se;
            r.p_value = student_t_pvalue_two_sided(r.t_stat, r.df);
        } else {
            r.degenerate = true;
        }
        if (percent_scale) r.estimate_exp_percent = 100.0 * (std::exp(c) - 1.0);
        return r;
    }
};

inline OlsFit ols_fit(const DesignMatrices& design, SeMode se_mode = SeMode::cluster_cr1) {
    const long n = design.X.rows();
    const long k = design.X.cols();
    if (n <= k) throw DesignError("underdetermined system: n <= k");
    const int G = design.n_clusters();
    if (se_mode == SeMode::cluster_cr1 && G < 2)
        throw DesignError("clustered covariance requires at least 2 clusters");

    OlsFit fit;
    fit.names = design.x_names;
    fit.n = n;
    fit.k = k;
    fit.n_clusters = G;
    fit.se_mode = se_mode;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    fit.coef = qr.solve(design.y);
    fit.residuals = design.y - design.X * fit.coef;

    const Eigen::MatrixXd xtx_inv =
        (design.X.transpose() * design.X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

    if (se_mode == SeMode::classical) {
        const double s2 = fit.residuals.squaredNorm() / static_cast<double>(n - k);
        fit.cov = s2 * xtx_inv;
    } else {
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
        std::vector<Eigen::VectorXd> scores(static_cast<std::size_t>(G),
                                            Eigen::VectorXd::Zero(k));
        for (long i = 0; i < n; ++i)
            scores[static_cast<std::size_t>(design.cluster_ids(i))] +=
                design.X.row(i).transpose() * fit.residuals(i);
        for (const auto& s : scores) meat += s * s.transpose();
        const double c = (static_cast<double>(G) / (G - 1.0)) *
                         ((n - 1.0) / static_cast<double>(n - k));
        fit.cov = c * xtx_inv * meat * xtx_inv;
        fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    }

    const double ybar = design.y.mean();
    const double tss = (design.y.array() - ybar).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - fit.residuals.squaredNorm() / tss : 0.0;

    const double rbar = fit.residuals.mean();
    const auto centered = fit.residuals.array() - rbar;
    fit.m2 = centered.square().mean();
    fit.m3 = centered.cube().mean();
    return fit;
}

// Coefficient on the treatment column from a regression of `outcome` on
// treatment (and covariates when requested), cluster-robust by default.
inline EffectReport itt_effect(const ObservationTable& table, const std::string& outcome,
                               const FormulaSpec& spec, bool with_covariates,
                               bool log_outcome = false) {
    {
        const auto& z = table.column(spec.treatment);
        bool any0 = false, any1 = false;
        for (double v : z.values) {
            if (v == 0.0) any0 = true;
            if (v == 1.0) any1 = true;
        }
        if (!any0 || !any1)
            throw DesignError("treatment column is constant: " + spec.treatment);
    }
    FormulaSpec reg;
    reg.outcome = outcome;
    reg.log_outcome = log_outcome;
    reg.treatment = spec.treatment;
    reg.cluster = spec.cluster.empty() ? table.cluster : spec.cluster;
    if (with_covariates) reg.covariates = spec.covariates;
    const auto design = build_design(table, reg);
    const auto fit = ols_fit(design, SeMode::cluster_cr1);
    return fit.effect(spec.treatment, log_outcome);
}

struct WaldResult {
    double f_stat = 0.0;
    int df1 = 0;
    double df2 = 0.0;
    double p_value = 1.0;
};

inline WaldResult wald_joint_test(const OlsFit& fit,
                                  const std::vector<std::string>& coefficient_names) {
    if (coefficient_names.empty())
        throw DesignError("joint test needs at least one restriction");
    const int q = static_cast<int>(coefficient_names.size());
    Eigen::VectorXd b(q);
    Eigen::MatrixXd V(q, q);
    std::vector<int> idx;
    for (const auto& nm : coefficient_names) idx.push_back(fit.index(nm));
    for (int a = 0; a < q; ++a) {
        b(a) = fit.coef(idx[a]);
        for (int c = 0; c < q; ++c) V(a, c) = fit.cov(idx[a], idx[c]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
    if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
        (ldlt.vectorD().array().abs() < 1e-300).any())
        throw std::runtime_error("joint test: restricted covariance block is singular");
    const double wald = b.dot(ldlt.solve(b));
    WaldResult r;
    r.df1 = q;
    r.df2 = fit.test_df();
    r.f_stat = wald / q;
    r.p_value = f_pvalue_upper(r.f_stat, r.df1, r.df2);
    return r;
}

struct HeterogeneousResult {
    OlsFit fit;
    EffectReport marginal_effect;
};

// Marginal treatment effect gamma1 + sum_j delta_j * I_j at a covariate
// profile, with a delta-method standard error from the joint covariance.
inline HeterogeneousResult heterogeneous_ols(
    const DesignMatrices& design, const std::string& treatment,
    const std::vector<std::pair<std::string, double>>& profile,
    bool percent_scale = true) {
    HeterogeneousResult out;
    out.fit = ols_fit(design, SeMode::cluster_cr1);

    Eigen::VectorXd g = Eigen::VectorXd::Zero(out.fit.k);
    g(out.fit.index(treatment)) = 1.0;
    for (const auto& [name, value] : profile) {
        const std::string col = name + ":" + treatment;
        bool found = false;
        for (std::size_t j = 0; j < out.fit.names.size(); ++j) {
            if (out.fit.names[j] == col) {
                g(static_cast<int>(j)) = value;
                found = true;
                break;
            }
        }
        if (!found)
            throw DesignError("profile names an interaction absent from the model: " + name);
    }
    const double est = g.dot(out.fit.coef);
    const double var = g.dot(out.fit.cov * g);
    EffectReport& r = out.marginal_effect;
    r.percent_scale = percent_scale;
    const double scale = percent_scale ? 100.0 : 1.0;
    r.estimate = scale * est;
    r.std_error = scale * std::sqrt(std::max(0.0, var));
    r.df = out.fit.test_df();
    if (r.std_error > 0.0) {
        r.t_stat = est / std::sqrt(var);
        r.p_value = student_t_pvalue_two_sided(r.t_stat, r.df);
    } else {
        r.degenerate = true;
    }
    if (percent_scale) r.estimate_exp_percent = 100.0 * (std::exp(est) - 1.0);
    return out;
}

} // namespace sfa
