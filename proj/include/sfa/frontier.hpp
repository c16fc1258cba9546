// Normal/half-normal stochastic frontier by maximum likelihood, with the
// inefficiency variance (and optionally the noise variance) driven by
// observation-level regressors, plus per-observation JLMS indices.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfa/math.hpp"
#include "sfa/optim.hpp"
#include "sfa/ols.hpp"
#include "sfa/table.hpp"

namespace sfa {

struct FrontierParams {
    Eigen::VectorXd beta;  // frontier: intercept, inputs, treatment, covariates
    Eigen::VectorXd delta; // ln sigma_u^2 linear index
    Eigen::VectorXd tau;   // ln sigma_v^2 linear index

    Eigen::VectorXd pack() const {
        Eigen::VectorXd v(beta.size() + delta.size() + tau.size());
        v << beta, delta, tau;
        return v;
    }
    static FrontierParams unpack(const Eigen::VectorXd& v, long kb, long kd, long kt) {
        FrontierParams p;
        p.beta = v.segment(0, kb);
        p.delta = v.segment(kb, kd);
        p.tau = v.segment(kb + kd, kt);
        return p;
    }
};

struct FrontierFit {
    FrontierParams params;
    std::vector<std::string> beta_names, delta_names, tau_names;
    double loglik = 0.0;
    Eigen::MatrixXd cov; // over (beta, delta, tau) in pack order
    bool cov_ok = false;
    bool converged = false;
    bool boundary_flag = false;
    int n_iterations = 0;
    Eigen::VectorXd composed_residuals;
    long n = 0;

    long delta_offset() const { return params.beta.size(); }
    int beta_index(const std::string& name) const {
        for (std::size_t j = 0; j < beta_names.size(); ++j)
            if (beta_names[j] == name) return static_cast<int>(j);
        throw DesignError("no frontier coefficient named " + name);
    }
    int delta_index(const std::string& name) const {
        for (std::size_t j = 0; j < delta_names.size(); ++j)
            if (delta_names[j] == name) return static_cast<int>(j);
        throw DesignError("no inefficiency-variance coefficient named " + name);
    }
};

namespace detail {

// Per-observation log-density of the composed error and, optionally, its
// gradient contributions with respect to (beta, delta, tau).
inline double sf_loglik_impl(const Eigen::VectorXd& beta, const Eigen::VectorXd& delta,
                             const Eigen::VectorXd& tau, const DesignMatrices& d,
                             Eigen::VectorXd* grad) {
    const long n = d.X.rows();
    const Eigen::VectorXd eps = d.y - d.X * beta;
    const Eigen::VectorXd lsu = d.W_u * delta;
    const Eigen::VectorXd lsv = d.W_v * tau;

    std::vector<double> cells(static_cast<std::size_t>(n));
    Eigen::VectorXd gb, gd, gt;
    if (grad) {
        gb = Eigen::VectorXd::Zero(beta.size());
        gd = Eigen::VectorXd::Zero(delta.size());
        gt = Eigen::VectorXd::Zero(tau.size());
    }

    for (long i = 0; i < n; ++i) {
        const double su = std::exp(lsu(i)); // sigma_u^2
        const double sv = std::exp(lsv(i)); // sigma_v^2
        const double s2 = su + sv;
        const double sig = std::sqrt(s2);
        const double e = eps(i);
        const double a = -e * std::sqrt(su / sv) / sig;
        const double cell = std::numbers::ln2 - 0.5 * kLogTwoPi - std::log(sig) -
                            e * e / (2.0 * s2) + log_norm_cdf(a);
        if (!std::isfinite(cell))
            throw std::runtime_error("likelihood evaluation non-finite at row " +
                                     std::to_string(i));
        cells[static_cast<std::size_t>(i)] = cell;

        if (grad) {
            const double r = inverse_mills(a);
            const double de = e / s2 + r * std::sqrt(su / sv) / sig; // dl/dbeta = de * x
            gb += de * d.X.row(i).transpose();
            const double common = -0.5 / s2 + e * e / (2.0 * s2 * s2);
            const double da_dsu = -e * std::sqrt(sv) / (2.0 * std::sqrt(su) * sig * s2);
            const double da_dsv =
                e * std::sqrt(su) * (s2 + sv) / (2.0 * sv * std::sqrt(sv) * sig * s2);
            gd += su * (common + r * da_dsu) * d.W_u.row(i).transpose();
            gt += sv * (common + r * da_dsv) * d.W_v.row(i).transpose();
        }
    }
    if (grad) {
        grad->resize(gb.size() + gd.size() + gt.size());
        *grad << gb, gd, gt;
    }
    return pairwise_sum(cells);
}

} // namespace detail

inline double sf_loglik(const FrontierParams& params, const DesignMatrices& design) {
    return detail::sf_loglik_impl(params.beta, params.delta, params.tau, design, nullptr);
}

struct SfOptions {
    int max_iter = 500;
    double grad_tol = 1e-6;
    bool use_supplied_start = false;
    FrontierParams start;
};

inline FrontierFit sf_fit(const DesignMatrices& design, const SfOptions& options = {}) {
    const long n = design.X.rows();
    const long kb = design.X.cols();
    const long kd = design.W_u.cols();
    const long kt = design.W_v.cols();
    if (n <= kb + kd + kt) throw DesignError("too few observations for frontier fit");

    FrontierParams start;
    if (options.use_supplied_start) {
        start = options.start;
    } else {
        // OLS start; sigma split by the method of moments on residual skewness
        const auto ols = ols_fit(design, SeMode::classical);
        const double m2 = ols.m2;
        const double m3 = ols.m3;
        // third central moment of -u is -sqrt(2/pi)*(4/pi - 1)*sigma_u^3
        const double c3 = kSqrtTwoOverPi * (4.0 / std::numbers::pi - 1.0);
        double su2; // sigma_u^2 start
        if (m3 < 0.0) {
            const double su = std::cbrt(-m3 / c3);
            su2 = su * su;
        } else {
            su2 = 1e-8 * m2; // wrong skew: start essentially at the boundary
        }
        double sv2 = m2 - (1.0 - 2.0 / std::numbers::pi) * su2;
        if (!(sv2 > 1e-12 * m2)) sv2 = 0.5 * m2;
        start.beta = ols.coef;
        // OLS absorbs -E(u) into the intercept; undo for the frontier start
        start.beta(0) += kSqrtTwoOverPi * std::sqrt(su2);
        start.delta = Eigen::VectorXd::Zero(kd);
        start.delta(0) = std::log(su2);
        start.tau = Eigen::VectorXd::Zero(kt);
        start.tau(0) = std::log(sv2);
    }

    auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g) -> double {
        const auto p = FrontierParams::unpack(v, kb, kd, kt);
        try {
            return detail::sf_loglik_impl(p.beta, p.delta, p.tau, design, g);
        } catch (const std::runtime_error&) {
            if (g) g->setConstant(kb + kd + kt, 0.0);
            return -std::numeric_limits<double>::infinity();
        }
    };

    const auto opt = bfgs_maximize(objective, start.pack(), options.max_iter,
                                   options.grad_tol);

    FrontierFit fit;
    fit.params = FrontierParams::unpack(opt.x, kb, kd, kt);
    fit.beta_names = design.x_names;
    fit.delta_names = design.wu_names;
    fit.tau_names = design.wv_names;
    fit.loglik = opt.f;
    fit.converged = opt.converged;
    fit.n_iterations = opt.iterations;
    fit.n = n;
    fit.composed_residuals = design.y - design.X * fit.params.beta;

    const Eigen::VectorXd ratio =
        ((design.W_u * fit.params.delta) - (design.W_v * fit.params.tau)).array().exp();
    fit.boundary_flag = ratio.mean() < 1e-6;

    if (fit.converged && !fit.boundary_flag) {
        const Eigen::MatrixXd H = numeric_hessian(objective, opt.x);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
        if (ldlt.info() == Eigen::Success && !ldlt.isNegative() &&
            (ldlt.vectorD().array() > 0.0).all()) {
            fit.cov = ldlt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
            fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
            fit.cov_ok = true;
        }
    }
    return fit;
}

struct InefficiencyIndex {
    Eigen::VectorXd u_hat; // E[u_i | eps_i]
    Eigen::VectorXd te;    // exp(-u_hat)
    double mean_u = 0.0;
};

inline InefficiencyIndex jlms_index(const FrontierFit& fit, const DesignMatrices& design) {
    if (!fit.converged) throw std::runtime_error("jlms_index requires a converged fit");
    const long n = design.X.rows();
    InefficiencyIndex out;
    out.u_hat.resize(n);
    out.te.resize(n);
    const Eigen::VectorXd lsu = design.W_u * fit.params.delta;
    const Eigen::VectorXd lsv = design.W_v * fit.params.tau;
    for (long i = 0; i < n; ++i) {
        const double su = std::exp(lsu(i));
        const double sv = std::exp(lsv(i));
        const double s2 = su + sv;
        const double e = fit.composed_residuals(i);
        const double mu_star = -e * su / s2;
        const double sd_star = std::sqrt(su * sv / s2);
        const double z = sd_star > 0.0 ? mu_star / sd_star : 0.0;
        const double u = sd_star > 0.0 ? sd_star * (z + inverse_mills(z)) : 0.0;
        out.u_hat(i) = std::max(0.0, u);
        out.te(i) = std::exp(-out.u_hat(i));
    }
    out.mean_u = out.u_hat.mean();
    return out;
}

} // namespace sfa
