// Machine-readable run reports. JSON is canonical; CSV is a flattened
// key/value projection of the same numbers at 17 significant digits.
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "sfa/decompose.hpp"
#include "sfa/diagnostics.hpp"
#include "sfa/frontier.hpp"
#include "sfa/ols.hpp"
#include "sfa/synthetic.hpp"
#include "sfa/table.hpp"

namespace sfa {

using json = nlohmann::ordered_json;

inline std::string version_string() { return "0.1.0"; }

// FNV-1a content digest for input provenance.
inline std::string content_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open input file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setfill('0') << std::setw(16) << h;
    return ss.str();
}

inline json to_json(const EffectReport& r) {
    json j;
    j["estimate"] = r.estimate;
    j["std_error"] = r.degenerate ? json(nullptr) : json(r.std_error);
    j["t_stat"] = r.degenerate ? json(nullptr) : json(r.t_stat);
    j["p_value"] = r.degenerate ? json(nullptr) : json(r.p_value);
    j["df"] = std::isfinite(r.df) ? json(r.df) : json("normal");
    j["percent_scale"] = r.percent_scale;
    if (r.percent_scale) j["estimate_exp_percent"] = r.estimate_exp_percent;
    return j;
}

inline json to_json(const OlsFit& fit) {
    json j;
    j["n"] = fit.n;
    j["k"] = fit.k;
    j["n_clusters"] = fit.n_clusters;
    j["se_mode"] = fit.se_mode == SeMode::cluster_cr1 ? "cluster_cr1" : "classical";
    j["r_squared"] = fit.r_squared;
    j["residual_m2"] = fit.m2;
    j["residual_m3"] = fit.m3;
    json coefs = json::array();
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        json c;
        c["name"] = fit.names[i];
        c["estimate"] = fit.coef(static_cast<long>(i));
        const double se = std::sqrt(fit.cov(static_cast<long>(i), static_cast<long>(i)));
        c["std_error"] = se;
        if (se > 0.0) {
            c["t_stat"] = fit.coef(static_cast<long>(i)) / se;
            c["p_value"] = student_t_pvalue_two_sided(c["t_stat"].get<double>(),
                                                      fit.test_df());
        } else {
            c["t_stat"] = nullptr;
            c["p_value"] = nullptr;
        }
        coefs.push_back(c);
    }
    j["coefficients"] = coefs;
    return j;
}

inline json to_json(const FrontierFit& fit) {
    json j;
    j["loglik"] = fit.loglik;
    j["converged"] = fit.converged;
    j["boundary_flag"] = fit.boundary_flag;
    j["n_iterations"] = fit.n_iterations;
    j["n"] = fit.n;
    j["covariance_ok"] = fit.cov_ok;
    auto block = [&](const Eigen::VectorXd& v, const std::vector<std::string>& names,
                     long offset) {
        json arr = json::array();
        for (long i = 0; i < v.size(); ++i) {
            json c;
            c["name"] = names[static_cast<std::size_t>(i)];
            c["estimate"] = v(i);
            if (fit.cov_ok) {
                c["std_error"] = std::sqrt(std::max(0.0, fit.cov(offset + i, offset + i)));
            } else {
                c["std_error"] = nullptr;
            }
            arr.push_back(c);
        }
        return arr;
    };
    j["frontier"] = block(fit.params.beta, fit.beta_names, 0);
    j["ln_sigma_u2"] = block(fit.params.delta, fit.delta_names, fit.params.beta.size());
    j["ln_sigma_v2"] = block(fit.params.tau, fit.tau_names,
                             fit.params.beta.size() + fit.params.delta.size());
    return j;
}

inline json to_json(const SkewnessTestResult& r) {
    json j;
    j["m2"] = r.m2;
    j["m3"] = r.m3;
    j["z_stat"] = r.z_stat;
    j["p_value"] = r.p_value;
    j["direction"] = r.direction == SkewDirection::negative_skew ? "negative_skew"
                     : r.direction == SkewDirection::positive_skew ? "positive_skew"
                                                                   : "symmetric";
    return j;
}

inline json to_json(const BalanceReport& r) {
    json j;
    json rows = json::array();
    for (const auto& row : r.rows) {
        json x;
        x["name"] = row.name;
        x["control_mean"] = row.control_mean;
        x["control_se"] = row.control_se;
        x["treatment_mean"] = row.treatment_mean;
        x["treatment_se"] = row.treatment_se;
        x["p_value"] = row.degenerate ? json(nullptr) : json(row.p_value);
        x["degenerate"] = row.degenerate;
        rows.push_back(x);
    }
    j["rows"] = rows;
    j["joint_f"] = r.joint_f;
    j["joint_df1"] = r.joint_df1;
    j["joint_df2"] = r.joint_df2;
    j["joint_p"] = r.joint_p;
    return j;
}

inline json to_json(const AttritionReport& r) {
    json j;
    j["rate_control"] = r.rate_control;
    j["rate_treatment"] = r.rate_treatment;
    j["rate_overall"] = r.rate_overall;
    j["degenerate"] = r.degenerate;
    if (!r.degenerate) {
        j["treatment_only"] = to_json(r.treatment_only);
        if (r.has_covariate_column) j["with_covariates"] = to_json(r.with_covariates);
    }
    return j;
}

inline json to_json(const DecompositionReport& r) {
    json j;
    j["frontier_shift"] = to_json(r.frontier_shift);
    j["efficiency_effect"] = to_json(r.efficiency_effect);
    j["total"] = to_json(r.total);
    if (r.has_ols_total) j["ols_total"] = to_json(r.ols_total);
    j["boundary_warning"] = r.boundary_warning;
    j["converged"] = r.converged;
    return j;
}

inline json to_json(const DoseResponse& r) {
    json j;
    j["n_treated_with_dose"] = r.n_treated_with_dose;
    json bins = json::array();
    for (const auto& b : r.bins) {
        json x;
        x["dose_lo"] = b.dose_lo;
        x["dose_hi"] = b.dose_hi;
        x["n"] = b.n;
        x["estimable"] = b.estimable;
        if (b.estimable) {
            x["yield_effect"] = b.yield_effect;
            x["yield_lo"] = b.yield_lo;
            x["yield_hi"] = b.yield_hi;
            x["efficiency_mean"] = b.efficiency_mean;
            x["efficiency_lo"] = b.efficiency_lo;
            x["efficiency_hi"] = b.efficiency_hi;
        }
        bins.push_back(x);
    }
    j["bins"] = bins;
    return j;
}

inline json to_json(const MonteCarloSummary& s) {
    json j;
    j["reps"] = s.reps;
    j["failures"] = s.failures;
    json params = json::array();
    for (const auto& p : s.params) {
        json x;
        x["name"] = p.name;
        x["truth"] = p.truth;
        x["mean_estimate"] = p.mean_estimate;
        x["bias"] = p.bias;
        x["rmse"] = p.rmse;
        x["coverage"] = std::isnan(p.coverage) ? json(nullptr) : json(p.coverage);
        params.push_back(x);
    }
    j["parameters"] = params;
    return j;
}

inline json to_json(const DensityResult& r) {
    json j;
    j["bandwidth"] = r.bandwidth;
    j["degenerate"] = r.degenerate;
    json pts = json::array();
    for (const auto& [x, d] : r.points) pts.push_back(json::array({x, d}));
    j["points"] = pts;
    return j;
}

inline json to_json(const ExclusionCounts& e) {
    json j;
    j["missing"] = e.missing;
    j["nonpositive_log"] = e.nonpositive_log;
    j["nonpositive_land"] = e.nonpositive_land;
    j["total"] = e.total();
    return j;
}

namespace detail {

inline void flatten_json(const json& j, const std::string& prefix,
                         std::vector<std::pair<std::string, std::string>>& out) {
    auto fmt = [](const json& v) {
        if (v.is_number_float()) {
            std::ostringstream ss;
            ss << std::setprecision(17) << v.get<double>();
            return ss.str();
        }
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        std::size_t i = 0;
        for (const auto& v : j)
            flatten_json(v, prefix + "[" + std::to_string(i++) + "]", out);
    } else {
        out.emplace_back(prefix, fmt(j));
    }
}

} // namespace detail

inline std::string report_to_csv(const json& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    detail::flatten_json(report, "", rows);
    std::ostringstream ss;
    ss << "key,value\n";
    for (const auto& [k, v] : rows) ss << k << "," << v << "\n";
    return ss.str();
}

} // namespace sfa
