// Clustered frontier data-generating processes, a Monte Carlo harness,
// and quadrature references that verify the closed-form likelihood and
// JLMS expressions independently.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfa/decompose.hpp"
#include "sfa/diagnostics.hpp"
#include "sfa/frontier.hpp"
#include "sfa/math.hpp"
#include "sfa/ols.hpp"
#include "sfa/rng.hpp"
#include "sfa/table.hpp"

namespace sfa {

struct InputLaw {
    std::string name;
    double log_mean = 0.0;
    double log_sd = 0.5;
    double elasticity = 0.1; // true beta on ln(input)
};

struct DgpConfig {
    std::size_t n = 2000;
    int n_clusters = 40;
    double cluster_effect_sd = 0.0;
    double beta0 = 1.0;
    std::vector<InputLaw> inputs;
    double gamma1 = 0.0;
    // ln sigma_u^2 = delta0 + delta1 * Z; -inf delta0 switches inefficiency off
    double delta0 = -std::numeric_limits<double>::infinity();
    double delta1 = 0.0;
    double sigma_v = 0.15;
    double treatment_share = 0.5; // assigned at cluster level
    int n_balance_covariates = 0; // iid N(0,1) columns x1..xk, orthogonal to Z
    bool with_dose = false;       // positive dose for treated units only
    double dose_log_mean = 9.0;   // around the program's loan scale
    double dose_log_sd = 0.5;
    std::uint64_t seed = 1;

    double sigma_u(double z) const {
        if (std::isinf(delta0)) return 0.0;
        return std::exp(0.5 * (delta0 + delta1 * z));
    }
    // E(u | Z=1) - E(u | Z=0)
    double delta_eu() const {
        return half_normal_mean(sigma_u(1.0)) - half_normal_mean(sigma_u(0.0));
    }
    void validate() const {
        if (n < 2 || n_clusters < 2) throw std::invalid_argument("dgp: n and G must be >= 2");
        if (!(treatment_share > 0.0 && treatment_share < 1.0))
            throw std::invalid_argument("dgp: treatment share must lie in (0,1)");
        if (!(sigma_v > 0.0)) throw std::invalid_argument("dgp: sigma_v must be positive");
        if (cluster_effect_sd < 0.0) throw std::invalid_argument("dgp: negative cluster sd");
    }
};

// Scales loosely follow smallholder rice production data (land in decimals,
// labor in days).
inline DgpConfig default_dgp() {
    DgpConfig c;
    c.inputs = {
        {"land", std::log(99.7) - 0.125, 0.5, 0.9},
        {"labor", std::log(46.4) - 0.125, 0.5, 0.1},
    };
    return c;
}

inline ObservationTable generate(const DgpConfig& config) {
    config.validate();
    SplitMix64 rng(config.seed);
    const int G = config.n_clusters;

    // cluster-level randomization: shuffle clusters, treat the first share*G
    std::vector<int> order(G);
    std::iota(order.begin(), order.end(), 0);
    for (int i = G - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    const int n_treated = std::max(
        1, std::min(G - 1, static_cast<int>(std::lround(config.treatment_share * G))));
    std::vector<char> treated(G, 0);
    for (int i = 0; i < n_treated; ++i) treated[order[i]] = 1;

    std::vector<double> cluster_effect(G);
    for (int g = 0; g < G; ++g) cluster_effect[g] = config.cluster_effect_sd * rng.normal();

    ObservationTable table;
    table.cluster = "cluster";
    Column cluster_col;
    cluster_col.kind = ColumnKind::categorical;
    Column z_col;
    z_col.kind = ColumnKind::binary;
    Column y_col;
    std::map<std::string, Column> input_cols;
    for (const auto& in : config.inputs) input_cols[in.name] = Column{};
    Column dose_col;
    std::vector<Column> balance_cols(config.n_balance_covariates);

    for (std::size_t i = 0; i < config.n; ++i) {
        const int g = static_cast<int>(i % static_cast<std::size_t>(G));
        const double z = treated[g] ? 1.0 : 0.0;
        double lny = config.beta0 + config.gamma1 * z;
        for (const auto& in : config.inputs) {
            const double x = rng.lognormal(in.log_mean, in.log_sd);
            input_cols[in.name].values.push_back(x);
            lny += in.elasticity * std::log(x);
        }
        const double su = config.sigma_u(z);
        const double u = su > 0.0 ? rng.half_normal(su) : 0.0;
        const double v = config.sigma_v * rng.normal();
        lny += -u + v + cluster_effect[g];

        table.unit_id.push_back(std::to_string(i + 1));
        table.period.push_back(Period::baseline);
        cluster_col.labels.push_back("b" + std::to_string(g));
        z_col.values.push_back(z);
        y_col.values.push_back(std::exp(lny));
        if (config.with_dose)
            dose_col.values.push_back(
                z == 1.0 ? rng.lognormal(config.dose_log_mean, config.dose_log_sd) : 0.0);
        for (int k = 0; k < config.n_balance_covariates; ++k)
            balance_cols[static_cast<std::size_t>(k)].values.push_back(rng.normal());
    }
    table.row_count = config.n;
    table.columns.emplace("cluster", std::move(cluster_col));
    table.columns.emplace("z", std::move(z_col));
    table.columns.emplace("y", std::move(y_col));
    for (auto& [name, col] : input_cols) table.columns.emplace(name, std::move(col));
    if (config.with_dose) table.columns.emplace("dose", std::move(dose_col));
    for (int k = 0; k < config.n_balance_covariates; ++k)
        table.columns.emplace("x" + std::to_string(k + 1),
                              std::move(balance_cols[static_cast<std::size_t>(k)]));
    return table;
}

inline FormulaSpec dgp_formula(const DgpConfig& config) {
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = true;
    for (const auto& in : config.inputs) spec.inputs.push_back({in.name, true});
    spec.treatment = "z";
    spec.cluster = "cluster";
    for (const auto& in : config.inputs)
        if (in.name == "land") spec.land_column = "land";
    return spec;
}

enum class McEstimator { ols, sfa, decompose, skewness, balance };

struct ParamSummary {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = std::numeric_limits<double>::quiet_NaN(); // 95% nominal
};

struct MonteCarloSummary {
    std::vector<ParamSummary> params;
    int reps = 0;
    int failures = 0;
};

namespace detail {

struct McAccumulator {
    std::vector<std::string> names;
    std::vector<double> truths;
    std::vector<std::vector<double>> estimates;
    std::vector<std::vector<char>> covered;

    int track(const std::string& name, double truth) {
        names.push_back(name);
        truths.push_back(truth);
        estimates.emplace_back();
        covered.emplace_back();
        return static_cast<int>(names.size()) - 1;
    }
    void record(int id, double est) { estimates[static_cast<std::size_t>(id)].push_back(est); }
    void record(int id, double est, bool cov) {
        estimates[static_cast<std::size_t>(id)].push_back(est);
        covered[static_cast<std::size_t>(id)].push_back(cov ? 1 : 0);
    }
    MonteCarloSummary summarize(int reps, int failures) const {
        MonteCarloSummary s;
        s.reps = reps;
        s.failures = failures;
        for (std::size_t j = 0; j < names.size(); ++j) {
            ParamSummary p;
            p.name = names[j];
            p.truth = truths[j];
            const auto& e = estimates[j];
            if (!e.empty()) {
                p.mean_estimate = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
                p.bias = p.mean_estimate - p.truth;
                double ss = 0.0;
                for (double v : e) ss += (v - p.truth) * (v - p.truth);
                p.rmse = std::sqrt(ss / e.size());
            }
            if (!covered[j].empty()) {
                double c = 0.0;
                for (char v : covered[j]) c += v;
                p.coverage = c / covered[j].size();
            }
            s.params.push_back(p);
        }
        return s;
    }
};

} // namespace detail

inline MonteCarloSummary monte_carlo(const DgpConfig& config, McEstimator estimator,
                                     int reps, std::uint64_t master_seed) {
    if (reps < 2) throw std::invalid_argument("monte_carlo requires reps >= 2");
    detail::McAccumulator acc;
    int failures = 0;

    // track ids are set up on first use so names match the fitted model
    int id_gamma = -1, id_gamma_classical = -1, id_eff = -1, id_total = -1;
    std::vector<int> id_beta;
    int id_reject = -1;

    const double true_delta_eu = config.delta_eu();

    for (int rep = 0; rep < reps; ++rep) {
        DgpConfig c = config;
        c.seed = derive_seed(master_seed, static_cast<std::uint64_t>(rep));
        const auto table = generate(c);
        const auto spec = dgp_formula(c);

        try {
            switch (estimator) {
            case McEstimator::ols: {
                const auto design = build_design(table, spec);
                const auto fit = ols_fit(design, SeMode::cluster_cr1);
                const auto fit_cl = ols_fit(design, SeMode::classical);
                if (id_gamma < 0) {
                    for (const auto& in : config.inputs)
                        id_beta.push_back(acc.track("ln_" + in.name, in.elasticity));
                    // OLS absorbs the inefficiency means into intercept and Z
                    id_gamma = acc.track("z", config.gamma1 - true_delta_eu);
                    id_gamma_classical =
                        acc.track("z[classical]", config.gamma1 - true_delta_eu);
                }
                const double crit = student_t_critical(0.05, fit.test_df());
                std::size_t bi = 0;
                for (const auto& in : config.inputs) {
                    const int j = fit.index("ln_" + in.name);
                    const double se = std::sqrt(fit.cov(j, j));
                    acc.record(id_beta[bi], fit.coef(j),
                               std::fabs(fit.coef(j) - in.elasticity) <= crit * se);
                    ++bi;
                }
                const int jz = fit.index("z");
                const double se = std::sqrt(fit.cov(jz, jz));
                const double truth = config.gamma1 - true_delta_eu;
                acc.record(id_gamma, fit.coef(jz),
                           std::fabs(fit.coef(jz) - truth) <= crit * se);
                const double crit_cl = student_t_critical(0.05, fit_cl.test_df());
                const double se_cl = std::sqrt(fit_cl.cov(jz, jz));
                acc.record(id_gamma_classical, fit_cl.coef(jz),
                           std::fabs(fit_cl.coef(jz) - truth) <= crit_cl * se_cl);
                break;
            }
            case McEstimator::sfa:
            case McEstimator::decompose: {
                FormulaSpec s = spec;
                s.ineff_determinants = {}; // W_u = [1, Z] via the treatment column
                const auto design = build_design(table, s);
                const auto fit = sf_fit(design);
                if (!fit.converged || !fit.cov_ok) { ++failures; break; }
                if (id_gamma < 0) {
                    id_gamma = acc.track("gamma1", config.gamma1);
                    id_eff = acc.track("efficiency_effect", -true_delta_eu);
                    id_total = acc.track("total", config.gamma1 - true_delta_eu);
                }
                const int jz = fit.beta_index("z");
                const double se = std::sqrt(fit.cov(jz, jz));
                const double crit = 1.959963984540054;
                acc.record(id_gamma, fit.params.beta(jz),
                           std::fabs(fit.params.beta(jz) - config.gamma1) <= crit * se);
                const auto eff = efficiency_effect(fit, "z");
                const double eff_est = eff.estimate / 100.0;
                const double eff_se = eff.std_error / 100.0;
                acc.record(id_eff, eff_est,
                           eff_se > 0.0 &&
                               std::fabs(eff_est - (-true_delta_eu)) <= crit * eff_se);
                acc.record(id_total, fit.params.beta(jz) + eff_est);
                break;
            }
            case McEstimator::skewness: {
                const auto design = build_design(table, spec);
                const auto fit = ols_fit(design, SeMode::classical);
                const auto t = skewness_test(fit.residuals);
                if (id_reject < 0) id_reject = acc.track("rejection_rate", 0.05);
                acc.record(id_reject, t.p_value < 0.05 ? 1.0 : 0.0);
                break;
            }
            case McEstimator::balance: {
                std::vector<std::string> vars;
                for (int k = 0; k < c.n_balance_covariates; ++k)
                    vars.push_back("x" + std::to_string(k + 1));
                if (vars.empty())
                    throw std::invalid_argument("balance estimator needs covariates in DGP");
                const auto rep_table = balance_table(table, vars, "z", "cluster");
                if (id_reject < 0) id_reject = acc.track("joint_rejection_rate", 0.05);
                acc.record(id_reject, rep_table.joint_p < 0.05 ? 1.0 : 0.0);
                break;
            }
            }
        } catch (const std::exception&) {
            ++failures;
        }
    }
    if (failures == reps) throw std::runtime_error("monte_carlo: every replication failed");
    return acc.summarize(reps, failures);
}

enum class OracleKind { loglik_cell, jlms };

// Numerical-integration reference for the composed-error closed forms:
// marginal log-density of eps, or E[u | eps].
inline double quadrature_oracle(OracleKind kind, double eps, double sigma_u,
                                double sigma_v, double abs_tol = 1e-10) {
    if (!(sigma_u > 0.0) || !(sigma_v > 0.0))
        throw std::invalid_argument("quadrature_oracle: scales must be positive");
    const double su2 = sigma_u * sigma_u;
    const double sv2 = sigma_v * sigma_v;
    const double s2 = su2 + sv2;
    const double mu_star = -eps * su2 / s2;
    const double sd_star = std::sqrt(su2 * sv2 / s2);

    auto log_integrand = [&](double u) {
        return log_norm_pdf((eps + u) / sigma_v) - std::log(sigma_v) + std::numbers::ln2 +
               log_norm_pdf(u / sigma_u) - std::log(sigma_u);
    };
    const double peak = std::max(0.0, mu_star);
    const double scale = log_integrand(peak);
    const double lo = std::max(0.0, mu_star - 12.0 * sd_star);
    const double hi = std::max(lo + sd_star, mu_star + 12.0 * sd_star);

    const double mass = integrate(
        [&](double u) { return std::exp(log_integrand(u) - scale); }, lo, hi, abs_tol);
    if (kind == OracleKind::loglik_cell) return scale + std::log(mass);
    const double first_moment = integrate(
        [&](double u) { return u * std::exp(log_integrand(u) - scale); }, lo, hi, abs_tol);
    return first_moment / mass;
}

} // namespace sfa
