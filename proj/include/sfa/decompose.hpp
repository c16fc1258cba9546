// Splits the total treatment effect into a frontier shift and an
// efficiency change, with heterogeneous-profile and dose-binned variants.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfa/frontier.hpp"
#include "sfa/math.hpp"
#include "sfa/ols.hpp"
#include "sfa/rng.hpp"
#include "sfa/table.hpp"

namespace sfa {

inline double half_normal_mean(double sigma_u) {
    if (sigma_u < 0.0) throw std::domain_error("half_normal_mean: negative scale");
    return kSqrtTwoOverPi * sigma_u;
}

struct DecompositionReport {
    EffectReport frontier_shift;    // 100 * gamma1
    EffectReport efficiency_effect; // -100 * (E(u|Z=1) - E(u|Z=0))
    EffectReport total;             // sum of the two, by construction
    bool has_ols_total = false;
    EffectReport ols_total;
    bool boundary_warning = false;
    bool converged = true;
};

namespace detail {

// W_u-profile rows at Z=0 and Z=1 for a covariate profile on the
// inefficiency determinants.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> wu_profiles(
    const FrontierFit& fit, const std::string& treatment,
    const std::vector<std::pair<std::string, double>>& profile) {
    const long m = fit.params.delta.size();
    Eigen::VectorXd w0 = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd w1 = Eigen::VectorXd::Zero(m);
    w0(0) = w1(0) = 1.0; // intercept
    w1(fit.delta_index(treatment)) = 1.0;
    for (const auto& [name, value] : profile) {
        const int j = fit.delta_index(name); // throws if absent
        w0(j) = value;
        w1(j) = value;
        const int jz = fit.delta_index(name + ":" + treatment);
        w1(jz) = value;
    }
    return {w0, w1};
}

} // namespace detail

// Change in mean inefficiency from treatment at a covariate profile,
// reported on the percent output scale with the sign flipped so that a
// reduction in inefficiency reads as an output gain.
inline EffectReport efficiency_effect(
    const FrontierFit& fit, const std::string& treatment,
    const std::vector<std::pair<std::string, double>>& profile = {}) {
    EffectReport r;
    r.percent_scale = true;
    r.df = std::numeric_limits<double>::infinity();
    if (fit.boundary_flag) {
        r.degenerate = true; // boundary: no inefficiency signal
        return r;
    }
    if (!fit.converged) throw std::runtime_error("efficiency_effect requires a converged fit");

    const auto [w0, w1] = detail::wu_profiles(fit, treatment, profile);
    const double e0 = std::exp(0.5 * w0.dot(fit.params.delta));
    const double e1 = std::exp(0.5 * w1.dot(fit.params.delta));
    const double delta_eu = kSqrtTwoOverPi * (e1 - e0);
    r.estimate = -100.0 * delta_eu;

    if (fit.cov_ok) {
        // delta method over the delta block of the covariance
        const long off = fit.delta_offset();
        const long m = fit.params.delta.size();
        const Eigen::VectorXd g =
            kSqrtTwoOverPi * 0.5 * (e1 * w1 - e0 * w0);
        const Eigen::MatrixXd Vd = fit.cov.block(off, off, m, m);
        const double var = g.dot(Vd * g);
        r.std_error = 100.0 * std::sqrt(std::max(0.0, var));
        if (r.std_error > 0.0) {
            r.t_stat = r.estimate / r.std_error;
            r.p_value = normal_pvalue_two_sided(r.t_stat);
        }
    }
    return r;
}

struct DecomposeOptions {
    std::string treatment = "z";
    bool with_ols = true;
    std::vector<std::pair<std::string, double>> profile;
    SfOptions sf;
};

inline DecompositionReport decompose(const DesignMatrices& design,
                                     const DecomposeOptions& options) {
    const auto fit = sf_fit(design, options.sf);
    DecompositionReport rep;
    rep.converged = fit.converged;
    rep.boundary_warning = fit.boundary_flag;

    const int zb = fit.beta_index(options.treatment);
    EffectReport& fs = rep.frontier_shift;
    fs.percent_scale = true;
    fs.df = std::numeric_limits<double>::infinity();
    fs.estimate = 100.0 * fit.params.beta(zb);
    if (fit.cov_ok) {
        fs.std_error = 100.0 * std::sqrt(std::max(0.0, fit.cov(zb, zb)));
        if (fs.std_error > 0.0) {
            fs.t_stat = fs.estimate / fs.std_error;
            fs.p_value = normal_pvalue_two_sided(fs.t_stat);
        }
    }
    fs.estimate_exp_percent = 100.0 * (std::exp(fit.params.beta(zb)) - 1.0);

    rep.efficiency_effect = efficiency_effect(fit, options.treatment, options.profile);

    EffectReport& tot = rep.total;
    tot.percent_scale = true;
    tot.df = std::numeric_limits<double>::infinity();
    tot.estimate = fs.estimate + rep.efficiency_effect.estimate;
    if (fit.cov_ok && !fit.boundary_flag) {
        // joint delta method across the beta_z entry and the delta block
        const long p = fit.params.beta.size() + fit.params.delta.size() +
                       fit.params.tau.size();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
        g(zb) = 100.0;
        const auto [w0, w1] = detail::wu_profiles(fit, options.treatment, options.profile);
        const double e0 = std::exp(0.5 * w0.dot(fit.params.delta));
        const double e1 = std::exp(0.5 * w1.dot(fit.params.delta));
        const Eigen::VectorXd gd = -100.0 * kSqrtTwoOverPi * 0.5 * (e1 * w1 - e0 * w0);
        g.segment(fit.delta_offset(), fit.params.delta.size()) = gd;
        const double var = g.dot(fit.cov * g);
        tot.std_error = std::sqrt(std::max(0.0, var));
        if (tot.std_error > 0.0) {
            tot.t_stat = tot.estimate / tot.std_error;
            tot.p_value = normal_pvalue_two_sided(tot.t_stat);
        }
    }

    if (options.with_ols) {
        const auto ols = ols_fit(design, SeMode::cluster_cr1);
        rep.ols_total = ols.effect(options.treatment, /*percent_scale=*/true);
        rep.has_ols_total = true;
    }
    return rep;
}

struct DoseBin {
    double dose_lo = 0.0, dose_hi = 0.0;
    std::size_t n = 0;
    double yield_effect = 0.0, yield_lo = 0.0, yield_hi = 0.0; // percent scale
    double efficiency_mean = 0.0, efficiency_lo = 0.0, efficiency_hi = 0.0;
    bool estimable = true;
};

struct DoseResponse {
    std::vector<DoseBin> bins;
    std::size_t n_treated_with_dose = 0;
};

struct DoseOptions {
    int n_bins = 10;
    int bootstrap_reps = 200;
    std::uint64_t seed = 0;
    SfOptions sf;
};

inline DoseResponse effect_by_dose(const ObservationTable& table, const FormulaSpec& spec,
                                   const std::string& dose, const DoseOptions& options) {
    if (options.n_bins < 1) throw DesignError("effect_by_dose requires n_bins >= 1");
    const auto design = build_design(table, spec);
    const auto fit = sf_fit(design, options.sf);
    const auto idx = jlms_index(fit, design);

    const auto& dose_col = table.column(dose).values;
    const auto& z_col = table.column(spec.treatment).values;
    const long n = static_cast<long>(design.n());

    std::vector<long> takers; // design rows: treated with positive dose
    std::vector<long> controls;
    for (long i = 0; i < n; ++i) {
        const std::size_t src = design.source_rows[static_cast<std::size_t>(i)];
        if (z_col[src] == 1.0) {
            if (dose_col[src] > 0.0) takers.push_back(i);
        } else {
            controls.push_back(i);
        }
    }
    DoseResponse out;
    out.n_treated_with_dose = takers.size();
    if (takers.empty()) throw EmptySampleError("no treated observation carries a dose");

    // quantile edges; ties go to the lower bin
    std::vector<double> doses;
    for (long i : takers) doses.push_back(dose_col[design.source_rows[i]]);
    std::vector<double> sorted = doses;
    std::sort(sorted.begin(), sorted.end());
    const int B = options.n_bins;
    std::vector<double> edges; // interior edges
    for (int b = 1; b < B; ++b) {
        const double q = static_cast<double>(b) / B;
        const double pos = q * (sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - lo;
        const double v = lo + 1 < sorted.size()
                             ? sorted[lo] * (1 - frac) + sorted[lo + 1] * frac
                             : sorted[lo];
        edges.push_back(v);
    }
    auto bin_of = [&](double v) {
        int b = 0;
        for (double e : edges)
            if (v > e) ++b;
        return b;
    };

    std::vector<std::vector<long>> bin_rows(B);
    for (std::size_t t = 0; t < takers.size(); ++t)
        bin_rows[bin_of(doses[t])].push_back(takers[t]);

    SplitMix64 master(options.seed);
    for (int b = 0; b < B; ++b) {
        DoseBin bin;
        const auto& rows = bin_rows[b];
        bin.n = rows.size();
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (long i : rows) {
            const double v = dose_col[design.source_rows[i]];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        bin.dose_lo = rows.empty() ? 0.0 : lo;
        bin.dose_hi = rows.empty() ? 0.0 : hi;

        // distinct clusters in the bin
        std::vector<int> bin_clusters;
        for (long i : rows) bin_clusters.push_back(design.cluster_ids(i));
        std::sort(bin_clusters.begin(), bin_clusters.end());
        bin_clusters.erase(std::unique(bin_clusters.begin(), bin_clusters.end()),
                           bin_clusters.end());
        if (bin_clusters.size() < 2 || rows.empty()) {
            bin.estimable = false;
            out.bins.push_back(bin);
            continue;
        }

        // yield effect: bin rows vs the pooled control arm
        {
            const std::size_t m = rows.size() + controls.size();
            DesignMatrices sub;
            sub.y.resize(m);
            sub.X.resize(m, 2);
            sub.cluster_ids.resize(m);
            sub.x_names = {"(intercept)", "bin"};
            std::size_t r = 0;
            std::map<int, int> cmap;
            auto push = [&](long i, double ind) {
                sub.y(r) = design.y(i);
                sub.X(r, 0) = 1.0;
                sub.X(r, 1) = ind;
                auto [it, ins] = cmap.emplace(design.cluster_ids(i),
                                              static_cast<int>(cmap.size()));
                sub.cluster_ids(r) = it->second;
                ++r;
            };
            for (long i : controls) push(i, 0.0);
            for (long i : rows) push(i, 1.0);
            const auto f = ols_fit(sub, SeMode::cluster_cr1);
            const auto eff = f.effect("bin", spec.log_outcome);
            bin.yield_effect = eff.estimate;
            const double crit = student_t_critical(0.05, f.test_df());
            bin.yield_lo = eff.estimate - crit * eff.std_error;
            bin.yield_hi = eff.estimate + crit * eff.std_error;
        }

        // mean JLMS efficiency with a cluster-bootstrap percentile CI
        {
            double s = 0.0;
            for (long i : rows) s += idx.te(i);
            bin.efficiency_mean = s / rows.size();

            std::map<int, std::vector<long>> by_cluster;
            for (long i : rows) by_cluster[design.cluster_ids(i)].push_back(i);
            std::vector<std::vector<long>> clusters;
            for (auto& [c, v] : by_cluster) clusters.push_back(std::move(v));
            SplitMix64 rng(master.next());
            std::vector<double> means;
            means.reserve(options.bootstrap_reps);
            for (int rep = 0; rep < options.bootstrap_reps; ++rep) {
                double sum = 0.0;
                std::size_t cnt = 0;
                for (std::size_t c = 0; c < clusters.size(); ++c) {
                    const auto& pick =
                        clusters[rng.next() % clusters.size()];
                    for (long i : pick) { sum += idx.te(i); ++cnt; }
                }
                if (cnt > 0) means.push_back(sum / cnt);
            }
            std::sort(means.begin(), means.end());
            auto pct = [&](double q) {
                const double pos = q * (means.size() - 1);
                const std::size_t k = static_cast<std::size_t>(pos);
                const double frac = pos - k;
                return k + 1 < means.size() ? means[k] * (1 - frac) + means[k + 1] * frac
                                            : means[k];
            };
            bin.efficiency_lo = pct(0.025);
            bin.efficiency_hi = pct(0.975);
        }
        out.bins.push_back(bin);
    }
    return out;
}

} // namespace sfa
