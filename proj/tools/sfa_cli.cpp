// Command-line front end binding the estimation library into reproducible
// analysis runs with machine-readable reports.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sfa/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitUsage = 64;

struct DataOptions {
    std::string data;
    std::string delimiter = ",";
    std::string cluster;
    std::string unit_column;
    std::string period_column;
    std::vector<std::string> binary_columns;
    std::vector<std::string> categorical_columns;
};

struct ModelOptions {
    std::string outcome;
    bool log_outcome = false;
    std::vector<std::string> inputs; // "name" or "name:nolog"
    std::string treatment;
    std::vector<std::string> covariates;
    std::vector<std::string> interactions;
    std::vector<std::string> ineff;
    std::vector<std::string> noise;
    std::string land;
    bool per_land = false;
    std::string zero_policy = "drop"; // drop | shift:<eps>
};

struct OutputOptions {
    std::string out;
    std::string format = "json";
};

void add_data_options(CLI::App* cmd, DataOptions& d, bool require_cluster = true) {
    cmd->add_option("--data", d.data, "Delimited input file (header row required)")
        ->required();
    cmd->add_option("--delimiter", d.delimiter, "Field delimiter (default comma)");
    auto* cl = cmd->add_option("--cluster", d.cluster,
                               "Column holding the randomization cluster");
    if (require_cluster) cl->required();
    cmd->add_option("--unit-column", d.unit_column,
                    "Unit identifier column (default: 'unit' when present)");
    cmd->add_option("--period-column", d.period_column,
                    "Period column with values baseline/followup "
                    "(default: 'period' when present)");
    cmd->add_option("--binary", d.binary_columns, "Columns validated as 0/1")
        ->delimiter(',');
    cmd->add_option("--categorical", d.categorical_columns,
                    "Columns treated as categorical labels")
        ->delimiter(',');
}

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--out", o.out, "Report destination (default stdout)");
    cmd->add_option("--format", o.format, "Report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
}

sfa::TableSchema make_schema(const DataOptions& d, const ModelOptions& m) {
    sfa::TableSchema s;
    if (d.delimiter.size() != 1)
        throw CLI::ValidationError("--delimiter must be a single character");
    s.delimiter = d.delimiter[0];
    s.cluster_column = d.cluster;
    s.unit_column = d.unit_column;
    s.period_column = d.period_column;
    for (const auto& c : d.binary_columns) s.kinds[c] = sfa::ColumnKind::binary;
    for (const auto& c : d.categorical_columns) s.kinds[c] = sfa::ColumnKind::categorical;
    if (!m.treatment.empty() && !s.kinds.count(m.treatment))
        s.kinds[m.treatment] = sfa::ColumnKind::binary;
    if (!d.cluster.empty() && !s.kinds.count(d.cluster))
        s.kinds[d.cluster] = sfa::ColumnKind::categorical;
    return s;
}

sfa::FormulaSpec make_formula(const DataOptions& d, const ModelOptions& m) {
    sfa::FormulaSpec spec;
    spec.outcome = m.outcome;
    spec.log_outcome = m.log_outcome;
    for (const auto& raw : m.inputs) {
        const auto pos = raw.rfind(":nolog");
        if (pos != std::string::npos && pos == raw.size() - 6)
            spec.inputs.push_back({raw.substr(0, pos), false});
        else
            spec.inputs.push_back({raw, true});
    }
    spec.treatment = m.treatment;
    spec.covariates = m.covariates;
    spec.interactions = m.interactions;
    spec.ineff_determinants = m.ineff;
    spec.noise_determinants = m.noise;
    spec.land_column = m.land;
    spec.cluster = d.cluster;
    return spec;
}

sfa::ZeroPolicy make_zero_policy(const ModelOptions& m) {
    if (m.zero_policy == "drop") return sfa::ZeroPolicy::drop();
    if (m.zero_policy.rfind("shift:", 0) == 0)
        return sfa::ZeroPolicy::shift(std::stod(m.zero_policy.substr(6)));
    throw CLI::ValidationError("--zero-policy must be 'drop' or 'shift:<eps>'");
}

struct LoadedData {
    sfa::ObservationTable table;
    std::vector<sfa::CoercionIssue> issues;
    std::size_t normalization_dropped = 0;
};

// Unit/period carrier columns default to "unit"/"period" when the header
// has them and no explicit column was named.
void autodetect_carriers(DataOptions& d) {
    if (!d.unit_column.empty() && !d.period_column.empty()) return;
    std::ifstream probe(d.data);
    std::string head;
    if (!std::getline(probe, head)) return;
    if (!head.empty() && head.back() == '\r') head.pop_back();
    const char delim = d.delimiter.empty() ? ',' : d.delimiter[0];
    std::istringstream ss(head);
    std::string field;
    while (std::getline(ss, field, delim)) {
        if (d.unit_column.empty() && field == "unit") d.unit_column = "unit";
        if (d.period_column.empty() && field == "period") d.period_column = "period";
    }
}

// The table loader insists on a cluster column; commands that do not use
// clustering fall back to any plausible carrier in the header.
std::string fallback_cluster(const DataOptions& d, const std::string& exclude) {
    if (!d.cluster.empty()) return d.cluster;
    std::ifstream probe(d.data);
    std::string head;
    if (!std::getline(probe, head)) return {};
    if (!head.empty() && head.back() == '\r') head.pop_back();
    const char delim = d.delimiter.empty() ? ',' : d.delimiter[0];
    std::istringstream ss(head);
    std::string field, first;
    while (std::getline(ss, field, delim)) {
        if (field == "cluster") return field;
        if (first.empty() && field != exclude) first = field;
    }
    if (!d.unit_column.empty()) return d.unit_column;
    return first;
}

LoadedData load_data(const DataOptions& d_in, const ModelOptions& m) {
    DataOptions d = d_in;
    autodetect_carriers(d);
    std::ifstream in(d.data);
    if (!in) throw sfa::InputError("cannot open data file: " + d.data);
    auto loaded = sfa::load_table(in, make_schema(d, m));
    LoadedData out{std::move(loaded.table), std::move(loaded.issues), 0};
    if (m.per_land) {
        if (m.land.empty())
            throw CLI::ValidationError("--per-land requires --land <column>");
        auto t = sfa::per_unit_transform(out.table, make_formula(d, m));
        out.table = std::move(t.table);
        out.normalization_dropped = t.dropped;
    }
    return out;
}

sfa::json base_report(int argc, char** argv, const DataOptions* d) {
    sfa::json j;
    j["tool"] = "sfa";
    j["version"] = sfa::version_string();
    std::ostringstream cmd;
    for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
    j["command"] = cmd.str();
    if (d) j["inputs"][d->data] = sfa::content_digest(d->data);
    j["warnings"] = sfa::json::array();
    return j;
}

int write_report(const sfa::json& report, const OutputOptions& o) {
    const std::string text =
        o.format == "csv" ? sfa::report_to_csv(report) : report.dump(2) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write " << o.out << "\n";
            return kExitValidation;
        }
        f << text;
    }
    return kExitOk;
}

void attach_issues(sfa::json& report, const LoadedData& data) {
    sfa::json issues = sfa::json::array();
    for (const auto& i : data.issues) {
        sfa::json x;
        x["row"] = i.row;
        x["column"] = i.column;
        x["value"] = i.value;
        issues.push_back(x);
    }
    report["coercion_issues"] = issues;
    report["rows_loaded"] = data.table.row_count;
    report["rows_dropped_normalization"] = data.normalization_dropped;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Production-frontier treatment-effect analysis"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    DataOptions data_opts;
    ModelOptions model_opts;
    OutputOptions out_opts;

    // ---- validate ----
    auto* cmd_validate = app.add_subcommand("validate", "Parse and validate a data file");
    DataOptions v_data;
    OutputOptions v_out;
    add_data_options(cmd_validate, v_data);
    add_output_options(cmd_validate, v_out);

    // ---- balance ----
    auto* cmd_balance =
        app.add_subcommand("balance", "Baseline balance table with joint orthogonality test");
    DataOptions b_data;
    OutputOptions b_out;
    std::vector<std::string> b_vars;
    std::string b_treatment;
    add_data_options(cmd_balance, b_data);
    add_output_options(cmd_balance, b_out);
    cmd_balance->add_option("--vars", b_vars, "Balance variables")->delimiter(',')->required();
    cmd_balance->add_option("--treatment", b_treatment, "Binary assignment column")->required();

    // ---- attrition ----
    auto* cmd_attrition =
        app.add_subcommand("attrition", "Follow-up attrition regression and rates");
    DataOptions a_data;
    OutputOptions a_out;
    std::string a_treatment;
    std::vector<std::string> a_covariates;
    add_data_options(cmd_attrition, a_data);
    add_output_options(cmd_attrition, a_out);
    cmd_attrition->add_option("--treatment", a_treatment, "Binary assignment column")
        ->required();
    cmd_attrition->add_option("--covariates", a_covariates, "Baseline covariates")
        ->delimiter(',');

    auto add_model_options = [&](CLI::App* cmd, ModelOptions& m, bool need_outcome) {
        auto* oc = cmd->add_option("--outcome", m.outcome, "Outcome column");
        if (need_outcome) oc->required();
        cmd->add_flag("--log,!--no-log", m.log_outcome,
                      "Log-transform the outcome (reports on the percent scale)");
        cmd->add_option("--inputs", m.inputs,
                        "Input columns, logged unless suffixed :nolog")
            ->delimiter(',');
        cmd->add_option("--treatment", m.treatment, "Binary assignment column");
        cmd->add_option("--covariates", m.covariates, "Frontier covariates")->delimiter(',');
        cmd->add_option("--interactions", m.interactions,
                        "Covariates interacted with treatment")
            ->delimiter(',');
        cmd->add_option("--ineff", m.ineff, "Inefficiency-variance determinants")
            ->delimiter(',');
        cmd->add_option("--noise", m.noise, "Noise-variance determinants")->delimiter(',');
        cmd->add_option("--land", m.land, "Land column for per-unit normalization");
        cmd->add_flag("--per-land", m.per_land,
                      "Divide outcome and non-land inputs by the land column");
        cmd->add_option("--zero-policy", m.zero_policy,
                        "Nonpositive values under log: drop or shift:<eps>");
    };

    // ---- ols ----
    auto* cmd_ols = app.add_subcommand("ols", "OLS production fit with cluster-robust SEs");
    DataOptions o_data;
    ModelOptions o_model;
    OutputOptions o_out;
    add_data_options(cmd_ols, o_data);
    add_model_options(cmd_ols, o_model, true);
    add_output_options(cmd_ols, o_out);

    // ---- sfa ----
    auto* cmd_sfa =
        app.add_subcommand("sfa", "Stochastic frontier MLE with inefficiency index");
    DataOptions s_data;
    ModelOptions s_model;
    OutputOptions s_out;
    add_data_options(cmd_sfa, s_data);
    add_model_options(cmd_sfa, s_model, true);
    add_output_options(cmd_sfa, s_out);
    bool s_allow_partial = false;
    cmd_sfa->add_flag("--allow-partial", s_allow_partial,
                      "Report non-converged fits instead of failing");

    // ---- decompose ----
    auto* cmd_decompose = app.add_subcommand(
        "decompose", "Split the treatment effect into frontier shift and efficiency");
    DataOptions dc_data;
    ModelOptions dc_model;
    OutputOptions dc_out;
    add_data_options(cmd_decompose, dc_data);
    add_model_options(cmd_decompose, dc_model, true);
    add_output_options(cmd_decompose, dc_out);
    bool dc_allow_partial = false;
    cmd_decompose->add_flag("--allow-partial", dc_allow_partial,
                            "Report non-converged fits instead of failing");

    // ---- dose ----
    auto* cmd_dose = app.add_subcommand("dose", "Effects binned by credit dose");
    DataOptions ds_data;
    ModelOptions ds_model;
    OutputOptions ds_out;
    std::string ds_dose;
    int ds_bins = 10;
    int ds_boot = 200;
    std::uint64_t ds_seed = 0;
    add_data_options(cmd_dose, ds_data);
    add_model_options(cmd_dose, ds_model, true);
    add_output_options(cmd_dose, ds_out);
    cmd_dose->add_option("--dose", ds_dose, "Dose column (positive for treated takers)")
        ->required();
    cmd_dose->add_option("--bins", ds_bins, "Number of quantile bins");
    cmd_dose->add_option("--boot", ds_boot, "Cluster-bootstrap replications");
    cmd_dose->add_option("--seed", ds_seed, "Master seed (required: bootstrap CIs)")
        ->required();

    // ---- density ----
    auto* cmd_density = app.add_subcommand("density", "Kernel density export of a column");
    DataOptions de_data;
    OutputOptions de_out;
    std::string de_values;
    int de_grid = 512;
    std::string de_bandwidth = "silverman";
    add_data_options(cmd_density, de_data, /*require_cluster=*/false);
    add_output_options(cmd_density, de_out);
    cmd_density->add_option("--values", de_values, "Column to estimate the density of")
        ->required();
    cmd_density->add_option("--grid", de_grid, "Grid size");
    cmd_density->add_option("--bandwidth", de_bandwidth,
                            "Bandwidth: silverman or fixed:<h>");

    // ---- simulate ----
    auto* cmd_simulate =
        app.add_subcommand("simulate", "Generate a synthetic clustered frontier dataset");
    OutputOptions si_out;
    sfa::DgpConfig si_cfg = sfa::default_dgp();
    std::uint64_t si_seed = 0;
    double si_delta0 = si_cfg.delta0;
    bool si_dose = false;
    cmd_simulate->add_option("--n", si_cfg.n, "Sample size");
    cmd_simulate->add_option("--clusters", si_cfg.n_clusters, "Number of clusters");
    cmd_simulate->add_option("--gamma1", si_cfg.gamma1, "Frontier shift coefficient");
    cmd_simulate->add_option("--delta0", si_delta0, "ln sigma_u^2 intercept");
    cmd_simulate->add_option("--delta1", si_cfg.delta1, "ln sigma_u^2 treatment shift");
    cmd_simulate->add_option("--sigma-v", si_cfg.sigma_v, "Noise standard deviation");
    cmd_simulate->add_option("--cluster-sd", si_cfg.cluster_effect_sd,
                             "Cluster effect standard deviation");
    cmd_simulate->add_option("--share", si_cfg.treatment_share,
                             "Treated share of clusters");
    cmd_simulate->add_flag("--dose", si_dose, "Emit a positive dose for treated units");
    cmd_simulate->add_option("--seed", si_seed, "Master seed (required)")->required();
    cmd_simulate->add_option("--out", si_out.out, "Output CSV path")->required();

    // ---- montecarlo ----
    auto* cmd_mc = app.add_subcommand("montecarlo", "Monte Carlo verification battery");
    OutputOptions mc_out;
    sfa::DgpConfig mc_cfg = sfa::default_dgp();
    std::string mc_estimator = "ols";
    int mc_reps = 100;
    std::uint64_t mc_seed = 0;
    double mc_delta0 = mc_cfg.delta0;
    cmd_mc->add_option("--estimator", mc_estimator, "ols, sfa, decompose, skewness, balance")
        ->check(CLI::IsMember({"ols", "sfa", "decompose", "skewness", "balance"}));
    cmd_mc->add_option("--reps", mc_reps, "Replications");
    cmd_mc->add_option("--seed", mc_seed, "Master seed (required)")->required();
    cmd_mc->add_option("--n", mc_cfg.n, "Sample size per replication");
    cmd_mc->add_option("--clusters", mc_cfg.n_clusters, "Number of clusters");
    cmd_mc->add_option("--gamma1", mc_cfg.gamma1, "Frontier shift coefficient");
    cmd_mc->add_option("--delta0", mc_delta0, "ln sigma_u^2 intercept");
    cmd_mc->add_option("--delta1", mc_cfg.delta1, "ln sigma_u^2 treatment shift");
    cmd_mc->add_option("--sigma-v", mc_cfg.sigma_v, "Noise standard deviation");
    cmd_mc->add_option("--cluster-sd", mc_cfg.cluster_effect_sd,
                       "Cluster effect standard deviation");
    cmd_mc->add_option("--share", mc_cfg.treatment_share, "Treated share of clusters");
    cmd_mc->add_option("--balance-covariates", mc_cfg.n_balance_covariates,
                       "Independent covariates for the balance battery");
    add_output_options(cmd_mc, mc_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*cmd_validate) {
            auto report = base_report(argc, argv, &v_data);
            ModelOptions none;
            auto data = load_data(v_data, none);
            attach_issues(report, data);
            report["valid"] = data.issues.empty();
            const int rc = write_report(report, v_out);
            if (rc != kExitOk) return rc;
            return data.issues.empty() ? kExitOk : kExitValidation;
        }

        if (*cmd_balance) {
            auto report = base_report(argc, argv, &b_data);
            ModelOptions m;
            m.treatment = b_treatment;
            auto data = load_data(b_data, m);
            attach_issues(report, data);
            report["results"] =
                sfa::to_json(sfa::balance_table(data.table, b_vars, b_treatment,
                                                b_data.cluster));
            return write_report(report, b_out);
        }

        if (*cmd_attrition) {
            auto report = base_report(argc, argv, &a_data);
            ModelOptions m;
            m.treatment = a_treatment;
            auto data = load_data(a_data, m);
            attach_issues(report, data);
            report["results"] =
                sfa::to_json(sfa::attrition_check(data.table, a_treatment, a_covariates));
            return write_report(report, a_out);
        }

        if (*cmd_ols) {
            auto report = base_report(argc, argv, &o_data);
            auto data = load_data(o_data, o_model);
            attach_issues(report, data);
            const auto spec = make_formula(o_data, o_model);
            const auto design =
                sfa::build_design(data.table, spec, make_zero_policy(o_model));
            report["exclusions"] = sfa::to_json(design.exclusions);
            const auto fit = sfa::ols_fit(design, sfa::SeMode::cluster_cr1);
            report["results"]["fit"] = sfa::to_json(fit);
            if (!o_model.treatment.empty())
                report["results"]["treatment_effect"] = sfa::to_json(
                    fit.effect(o_model.treatment, o_model.log_outcome));
            report["results"]["skewness_test"] =
                sfa::to_json(sfa::skewness_test(fit.residuals));
            return write_report(report, o_out);
        }

        if (*cmd_sfa) {
            auto report = base_report(argc, argv, &s_data);
            auto data = load_data(s_data, s_model);
            attach_issues(report, data);
            const auto spec = make_formula(s_data, s_model);
            const auto design =
                sfa::build_design(data.table, spec, make_zero_policy(s_model));
            report["exclusions"] = sfa::to_json(design.exclusions);
            const auto fit = sfa::sf_fit(design);
            if (!fit.converged && !s_allow_partial) {
                std::cerr << "error: frontier fit did not converge "
                             "(rerun with --allow-partial to inspect)\n";
                return kExitEstimation;
            }
            report["results"]["fit"] = sfa::to_json(fit);
            if (fit.boundary_flag)
                report["warnings"].push_back("boundary: sigma_u is effectively zero");
            if (fit.converged) {
                const auto idx = sfa::jlms_index(fit, design);
                report["results"]["inefficiency"]["mean_u"] = idx.mean_u;
                report["results"]["inefficiency"]["mean_te"] = idx.te.mean();
            }
            return write_report(report, s_out);
        }

        if (*cmd_decompose) {
            auto report = base_report(argc, argv, &dc_data);
            auto data = load_data(dc_data, dc_model);
            attach_issues(report, data);
            const auto spec = make_formula(dc_data, dc_model);
            if (dc_model.treatment.empty())
                throw CLI::ValidationError("decompose requires --treatment");
            const auto design =
                sfa::build_design(data.table, spec, make_zero_policy(dc_model));
            report["exclusions"] = sfa::to_json(design.exclusions);
            sfa::DecomposeOptions opt;
            opt.treatment = dc_model.treatment;
            const auto rep = sfa::decompose(design, opt);
            if (!rep.converged && !dc_allow_partial) {
                std::cerr << "error: frontier fit did not converge\n";
                return kExitEstimation;
            }
            if (rep.boundary_warning)
                report["warnings"].push_back(
                    "boundary: efficiency effect reported as zero");
            report["results"] = sfa::to_json(rep);
            return write_report(report, dc_out);
        }

        if (*cmd_dose) {
            auto report = base_report(argc, argv, &ds_data);
            auto data = load_data(ds_data, ds_model);
            attach_issues(report, data);
            const auto spec = make_formula(ds_data, ds_model);
            sfa::DoseOptions opt;
            opt.n_bins = ds_bins;
            opt.bootstrap_reps = ds_boot;
            opt.seed = ds_seed;
            report["seed"] = ds_seed;
            report["results"] = sfa::to_json(
                sfa::effect_by_dose(data.table, spec, ds_dose, opt));
            return write_report(report, ds_out);
        }

        if (*cmd_density) {
            auto report = base_report(argc, argv, &de_data);
            autodetect_carriers(de_data);
            std::ifstream in(de_data.data);
            if (!in) throw sfa::InputError("cannot open data file: " + de_data.data);
            sfa::TableSchema schema;
            schema.delimiter = de_data.delimiter.empty() ? ',' : de_data.delimiter[0];
            schema.unit_column = de_data.unit_column;
            schema.period_column = de_data.period_column;
            schema.cluster_column = fallback_cluster(de_data, de_values);
            if (!schema.cluster_column.empty())
                schema.kinds[schema.cluster_column] = sfa::ColumnKind::categorical;
            auto loaded = sfa::load_table(in, schema);
            const auto& col = loaded.table.column(de_values);
            sfa::DensityBandwidth bw = sfa::DensityBandwidth::silverman();
            if (de_bandwidth.rfind("fixed:", 0) == 0)
                bw = sfa::DensityBandwidth::fixed(std::stod(de_bandwidth.substr(6)));
            else if (de_bandwidth != "silverman")
                throw CLI::ValidationError("--bandwidth must be silverman or fixed:<h>");
            const auto dens = sfa::density_export(col.values, de_grid, bw);
            if (de_out.format == "csv") {
                std::ostringstream ss;
                ss.precision(17);
                ss << "x,density\n";
                for (const auto& [x, d] : dens.points) ss << x << "," << d << "\n";
                if (de_out.out.empty()) std::cout << ss.str();
                else std::ofstream(de_out.out, std::ios::binary) << ss.str();
                return kExitOk;
            }
            report["results"] = sfa::to_json(dens);
            return write_report(report, de_out);
        }

        if (*cmd_simulate) {
            si_cfg.seed = si_seed;
            si_cfg.delta0 = si_delta0;
            si_cfg.with_dose = si_dose;
            const auto table = sfa::generate(si_cfg);
            std::ofstream f(si_out.out, std::ios::binary);
            if (!f) {
                std::cerr << "error: cannot write " << si_out.out << "\n";
                return kExitValidation;
            }
            sfa::write_table(f, table);
            return kExitOk;
        }

        if (*cmd_mc) {
            auto report = base_report(argc, argv, nullptr);
            mc_cfg.delta0 = mc_delta0;
            sfa::McEstimator est = sfa::McEstimator::ols;
            if (mc_estimator == "sfa") est = sfa::McEstimator::sfa;
            else if (mc_estimator == "decompose") est = sfa::McEstimator::decompose;
            else if (mc_estimator == "skewness") est = sfa::McEstimator::skewness;
            else if (mc_estimator == "balance") est = sfa::McEstimator::balance;
            report["seed"] = mc_seed;
            report["results"] =
                sfa::to_json(sfa::monte_carlo(mc_cfg, est, mc_reps, mc_seed));
            return write_report(report, mc_out);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const sfa::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sfa::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sfa::DuplicationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sfa::EmptySampleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sfa::DesignError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    }
    return kExitOk;
}
