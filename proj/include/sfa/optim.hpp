// Quasi-Newton (BFGS) maximizer with backtracking line search, and a
// central-difference Hessian for covariance extraction at the optimum.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>

namespace sfa {

struct OptimResult {
    Eigen::VectorXd x;
    double f = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    double grad_norm = std::numeric_limits<double>::infinity();
};

// Maximizes f; fn(x, grad) returns f(x) and fills grad when non-null.
// Stops on gradient sup-norm < grad_tol or relative f change < f_tol.
inline OptimResult bfgs_maximize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fn,
    Eigen::VectorXd x0, int max_iter = 500, double grad_tol = 1e-6,
    double f_tol = 1e-10) {
    const int p = static_cast<int>(x0.size());
    OptimResult res;
    res.x = std::move(x0);

    Eigen::VectorXd g(p);
    double f = fn(res.x, &g);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(p, p); // inverse Hessian approx

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter;
        res.grad_norm = g.cwiseAbs().maxCoeff();
        if (res.grad_norm < grad_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd dir = H * g; // ascent direction
        double slope = g.dot(dir);
        if (!(slope > 0.0) || !dir.allFinite()) {
            H.setIdentity();
            dir = g;
            slope = g.squaredNorm();
            if (!(slope > 0.0)) { res.converged = true; break; }
        }

        // backtracking Armijo search
        double step = 1.0;
        double f_new = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new, g_new(p);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = res.x + step * dir;
            f_new = fn(x_new, &g_new);
            if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // line search failed; report best point so far

        // update written for the equivalent minimization of -f
        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd ym = g - g_new;
        const double sy = s.dot(ym);
        if (sy > 1e-12 * s.norm() * ym.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
            H = (I - rho * s * ym.transpose()) * H * (I - rho * ym * s.transpose()) +
                rho * s * s.transpose();
        }

        const double rel_change = std::fabs(f_new - f) / std::max(1.0, std::fabs(f));
        res.x = x_new;
        g = g_new;
        f = f_new;
        if (rel_change < f_tol) {
            res.converged = true;
            res.iterations = iter + 1;
            break;
        }
    }
    res.f = f;
    res.grad_norm = g.cwiseAbs().maxCoeff();
    if (res.grad_norm < grad_tol) res.converged = true;
    return res;
}

// Central-difference Hessian from an analytic gradient.
inline Eigen::MatrixXd numeric_hessian(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fn,
    const Eigen::VectorXd& x, double rel_step = 1e-5) {
    const int p = static_cast<int>(x.size());
    Eigen::MatrixXd H(p, p);
    Eigen::VectorXd gp(p), gm(p);
    for (int j = 0; j < p; ++j) {
        const double h = rel_step * std::max(1.0, std::fabs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fn(xp, &gp);
        fn(xm, &gm);
        H.col(j) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose()).eval();
}

} // namespace sfa
