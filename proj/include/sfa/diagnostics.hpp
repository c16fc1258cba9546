// Experiment diagnostics: residual skewness pretest, balance table with a
// joint orthogonality test, attrition regression, and kernel density export.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfa/math.hpp"
#include "sfa/ols.hpp"
#include "sfa/table.hpp"

namespace sfa {

enum class SkewDirection { negative_skew, positive_skew, symmetric };

struct SkewnessTestResult {
    double m2 = 0.0;
    double m3 = 0.0;
    double z_stat = 0.0;
    double p_value = 1.0;
    SkewDirection direction = SkewDirection::symmetric;
};

// Moment-based test of zero residual skewness; negative skew supports the
// frontier specification.
inline SkewnessTestResult skewness_test(const Eigen::VectorXd& residuals) {
    const long n = residuals.size();
    if (n < 10) throw std::invalid_argument("skewness_test needs n >= 10");
    SkewnessTestResult r;
    const double mean = residuals.mean();
    const auto centered = residuals.array() - mean;
    r.m2 = centered.square().mean();
    r.m3 = centered.cube().mean();
    if (r.m2 <= 0.0) throw std::invalid_argument("skewness_test: constant residuals");
    r.z_stat = r.m3 / std::sqrt(6.0 * r.m2 * r.m2 * r.m2 / n);
    r.p_value = normal_pvalue_two_sided(r.z_stat);
    r.direction = r.m3 < 0.0 ? SkewDirection::negative_skew
                  : r.m3 > 0.0 ? SkewDirection::positive_skew
                               : SkewDirection::symmetric;
    return r;
}

struct BalanceRow {
    std::string name;
    double control_mean = 0.0, control_se = 0.0;
    double treatment_mean = 0.0, treatment_se = 0.0;
    double p_value = 1.0;
    bool degenerate = false; // constant in both arms; excluded from joint test
};

struct BalanceReport {
    std::vector<BalanceRow> rows;
    double joint_f = 0.0;
    int joint_df1 = 0;
    double joint_df2 = 0.0;
    double joint_p = 1.0;
};

namespace detail {

// cluster-robust mean and SE of a column over a subset of rows
inline std::pair<double, double> cluster_mean_se(const std::vector<double>& v,
                                                 const std::vector<int>& cluster,
                                                 const std::vector<bool>& select) {
    std::map<int, std::pair<double, long>> by_cluster; // sum, count
    double sum = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!select[i]) continue;
        sum += v[i];
        ++n;
        auto& e = by_cluster[cluster[i]];
        e.first += v[i];
        e.second += 1;
    }
    if (n == 0) return {0.0, 0.0};
    const double mean = sum / n;
    const long G = static_cast<long>(by_cluster.size());
    if (G < 2) return {mean, 0.0};
    // CR1 sandwich for the intercept-only regression
    double meat = 0.0;
    for (const auto& [c, e] : by_cluster) {
        const double score = e.first - e.second * mean;
        meat += score * score;
    }
    const double corr = static_cast<double>(G) / (G - 1.0); // CR1 with k = 1
    return {mean, std::sqrt(corr * meat) / n};
}

} // namespace detail

inline BalanceReport balance_table(const ObservationTable& table,
                                   const std::vector<std::string>& variables,
                                   const std::string& treatment,
                                   const std::string& cluster) {
    const auto& z = table.column(treatment).values;
    const auto& cl = table.column(cluster);
    std::vector<int> cluster_ids(table.row_count);
    {
        std::map<std::string, int> cmap;
        for (std::size_t i = 0; i < table.row_count; ++i) {
            std::string lab = cl.kind == ColumnKind::categorical
                                  ? cl.labels[i]
                                  : std::to_string(cl.values[i]);
            auto [it, ins] = cmap.emplace(lab, static_cast<int>(cmap.size()));
            cluster_ids[i] = it->second;
        }
    }
    std::vector<bool> in_control(table.row_count), in_treatment(table.row_count);
    bool any0 = false, any1 = false;
    for (std::size_t i = 0; i < table.row_count; ++i) {
        in_control[i] = z[i] == 0.0;
        in_treatment[i] = z[i] == 1.0;
        any0 |= in_control[i];
        any1 |= in_treatment[i];
    }
    if (!any0 || !any1) throw DesignError("balance_table: an arm is empty");

    BalanceReport rep;
    std::vector<std::string> joint_vars;
    FormulaSpec spec;
    spec.treatment = treatment;
    spec.cluster = cluster;
    for (const auto& name : variables) {
        const auto& col = table.column(name);
        if (col.kind == ColumnKind::categorical)
            throw DesignError("balance variable must be numeric: " + name);
        BalanceRow row;
        row.name = name;
        std::tie(row.control_mean, row.control_se) =
            detail::cluster_mean_se(col.values, cluster_ids, in_control);
        std::tie(row.treatment_mean, row.treatment_se) =
            detail::cluster_mean_se(col.values, cluster_ids, in_treatment);
        const double lo = *std::min_element(col.values.begin(), col.values.end());
        const double hi = *std::max_element(col.values.begin(), col.values.end());
        if (lo == hi) {
            row.degenerate = true;
            row.p_value = 1.0;
        } else {
            row.p_value = itt_effect(table, name, spec, /*with_covariates=*/false).p_value;
            joint_vars.push_back(name);
        }
        rep.rows.push_back(row);
    }

    if (!joint_vars.empty()) {
        FormulaSpec joint;
        joint.outcome = treatment;
        joint.log_outcome = false;
        joint.covariates = joint_vars;
        joint.cluster = cluster;
        const auto design = build_design(table, joint);
        const auto fit = ols_fit(design, SeMode::cluster_cr1);
        const auto wald = wald_joint_test(fit, joint_vars);
        rep.joint_f = wald.f_stat;
        rep.joint_df1 = wald.df1;
        rep.joint_df2 = wald.df2;
        rep.joint_p = wald.p_value;
    }
    return rep;
}

struct AttritionReport {
    double rate_control = 0.0;
    double rate_treatment = 0.0;
    double rate_overall = 0.0;
    EffectReport treatment_only;     // column 1: attrition ~ Z
    EffectReport with_covariates;    // column 2: attrition ~ Z + covariates
    bool has_covariate_column = false;
    bool degenerate = false;         // no attrition observed
};

// Linear probability regression of follow-up attrition on treatment.
inline AttritionReport attrition_check(const ObservationTable& panel,
                                       const std::string& treatment,
                                       const std::vector<std::string>& covariates) {
    std::set<std::string> followup_units;
    for (std::size_t i = 0; i < panel.row_count; ++i)
        if (panel.period[i] == Period::followup) followup_units.insert(panel.unit_id[i]);

    std::vector<bool> baseline_rows(panel.row_count, false);
    for (std::size_t i = 0; i < panel.row_count; ++i)
        baseline_rows[i] = panel.period[i] == Period::baseline;
    ObservationTable base = panel.filter(baseline_rows);
    if (base.row_count == 0) throw EmptySampleError("no baseline rows in panel");

    Column attr;
    attr.kind = ColumnKind::binary;
    attr.values.resize(base.row_count);
    for (std::size_t i = 0; i < base.row_count; ++i)
        attr.values[i] = followup_units.count(base.unit_id[i]) ? 0.0 : 1.0;
    base.columns["attrited"] = attr;

    AttritionReport rep;
    const auto& z = base.column(treatment).values;
    double a0 = 0, n0 = 0, a1 = 0, n1 = 0;
    for (std::size_t i = 0; i < base.row_count; ++i) {
        if (z[i] == 0.0) { a0 += attr.values[i]; ++n0; }
        else { a1 += attr.values[i]; ++n1; }
    }
    rep.rate_control = n0 > 0 ? a0 / n0 : 0.0;
    rep.rate_treatment = n1 > 0 ? a1 / n1 : 0.0;
    rep.rate_overall = (a0 + a1) / std::max(1.0, n0 + n1);

    if (a0 + a1 == 0.0) {
        rep.degenerate = true;
        return rep;
    }
    FormulaSpec spec;
    spec.treatment = treatment;
    spec.cluster = base.cluster;
    spec.covariates = covariates;
    rep.treatment_only = itt_effect(base, "attrited", spec, /*with_covariates=*/false);
    if (!covariates.empty()) {
        rep.with_covariates = itt_effect(base, "attrited", spec, /*with_covariates=*/true);
        rep.has_covariate_column = true;
    }
    return rep;
}

struct DensityBandwidth {
    enum class Kind { silverman, fixed } kind = Kind::silverman;
    double h = 0.0;
    static DensityBandwidth silverman() { return {Kind::silverman, 0.0}; }
    static DensityBandwidth fixed(double h) { return {Kind::fixed, h}; }
};

struct DensityResult {
    std::vector<std::pair<double, double>> points; // (x, density)
    double bandwidth = 0.0;
    bool degenerate = false; // zero-variance input: single spike cell
};

inline DensityResult density_export(const std::vector<double>& values, int grid_size,
                                    const DensityBandwidth& bw = DensityBandwidth::silverman()) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("density_export needs n >= 2");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("density_export: non-finite value");

    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));

    DensityResult out;
    if (sd == 0.0 && bw.kind == DensityBandwidth::Kind::silverman) {
        out.degenerate = true;
        out.points.emplace_back(values[0], std::numeric_limits<double>::infinity());
        return out;
    }
    double h = bw.h;
    if (bw.kind == DensityBandwidth::Kind::silverman) {
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        auto q = [&](double p) {
            const double pos = p * (n - 1);
            const std::size_t k = static_cast<std::size_t>(pos);
            const double f = pos - k;
            return k + 1 < n ? sorted[k] * (1 - f) + sorted[k + 1] * f : sorted[k];
        };
        const double iqr = q(0.75) - q(0.25);
        const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
        h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    }
    if (!(h > 0.0)) throw std::invalid_argument("density_export: nonpositive bandwidth");

    const double lo = *std::min_element(values.begin(), values.end()) - 4.0 * h;
    const double hi = *std::max_element(values.begin(), values.end()) + 4.0 * h;
    out.bandwidth = h;
    const int m = std::max(2, grid_size);
    const double step = (hi - lo) / (m - 1);
    for (int g = 0; g < m; ++g) {
        const double x = lo + g * step;
        double dens = 0.0;
        for (double v : values) dens += norm_pdf((x - v) / h);
        out.points.emplace_back(x, dens / (n * h));
    }
    return out;
}

} // namespace sfa
