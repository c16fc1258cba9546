// Tabular data ingestion, schema validation, per-land normalization and
// log transforms producing estimation-ready design matrices.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfa {

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DuplicationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class EmptySampleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Period { baseline, followup };

enum class ColumnKind { continuous, binary, categorical };

struct Column {
    ColumnKind kind = ColumnKind::continuous;
    std::vector<double> values;          // NaN marks missing (continuous/binary)
    std::vector<std::string> labels;     // categorical only, "" marks missing
};

struct ObservationTable {
    std::vector<std::string> unit_id;
    std::vector<Period> period;
    std::map<std::string, Column> columns;
    std::string cluster;                 // name of the cluster column
    std::size_t row_count = 0;

    const Column& column(const std::string& name) const {
        auto it = columns.find(name);
        if (it == columns.end()) throw SchemaError("unknown column: " + name);
        return it->second;
    }
    bool has_column(const std::string& name) const { return columns.count(name) > 0; }

    // Keeps rows where keep[i] is true; preserves order.
    ObservationTable filter(const std::vector<bool>& keep) const {
        ObservationTable out;
        out.cluster = cluster;
        for (std::size_t i = 0; i < row_count; ++i) {
            if (!keep[i]) continue;
            out.unit_id.push_back(unit_id[i]);
            out.period.push_back(period[i]);
        }
        for (const auto& [name, col] : columns) {
            Column c;
            c.kind = col.kind;
            for (std::size_t i = 0; i < row_count; ++i) {
                if (!keep[i]) continue;
                if (col.kind == ColumnKind::categorical)
                    c.labels.push_back(col.labels[i]);
                else
                    c.values.push_back(col.values[i]);
            }
            out.columns.emplace(name, std::move(c));
        }
        out.row_count = out.unit_id.size();
        return out;
    }
};

struct LoggedInput {
    std::string name;
    bool log = true;
};

struct FormulaSpec {
    std::string outcome;
    bool log_outcome = true;
    std::vector<LoggedInput> inputs;
    std::string land_column;
    std::string treatment;
    std::vector<std::string> covariates;
    std::vector<std::string> interactions;       // interacted with treatment
    std::vector<std::string> ineff_determinants; // enter ln sigma_u^2
    std::vector<std::string> noise_determinants; // enter ln sigma_v^2
    std::string cluster;
};

struct ExclusionCounts {
    std::size_t missing = 0;         // non-finite value in a referenced column
    std::size_t nonpositive_log = 0; // value <= 0 in a logged column under drop policy
    std::size_t nonpositive_land = 0;
    std::size_t total() const { return missing + nonpositive_log + nonpositive_land; }
};

struct DesignMatrices {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    Eigen::MatrixXd W_u;
    Eigen::MatrixXd W_v;
    Eigen::VectorXi cluster_ids; // 0..G-1, order of first appearance
    std::vector<std::string> x_names;
    std::vector<std::string> wu_names;
    std::vector<std::string> wv_names;
    std::vector<std::size_t> source_rows; // design row -> table row
    ExclusionCounts exclusions;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    int n_clusters() const {
        return cluster_ids.size() == 0 ? 0 : cluster_ids.maxCoeff() + 1;
    }
    int x_index(const std::string& name) const {
        auto it = std::find(x_names.begin(), x_names.end(), name);
        if (it == x_names.end()) throw DesignError("no design column named " + name);
        return static_cast<int>(it - x_names.begin());
    }
};

struct TableSchema {
    char delimiter = ',';
    std::string unit_column;    // empty: row index used
    std::string period_column;  // empty: all baseline
    std::string cluster_column;
    std::map<std::string, ColumnKind> kinds; // columns not listed default to continuous
};

struct CoercionIssue {
    std::size_t row = 0; // 1-based data row index
    std::string column;
    std::string value;
};

struct LoadResult {
    ObservationTable table;
    std::vector<CoercionIssue> issues; // offending rows are dropped
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty() || s == "NA" || s == "na" || s == ".") {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace detail

inline LoadResult load_table(std::istream& in, const TableSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty input: no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_line(line, schema.delimiter);

    std::map<std::string, std::size_t> col_index;
    for (std::size_t j = 0; j < header.size(); ++j) col_index[header[j]] = j;

    auto require = [&](const std::string& name) {
        if (!name.empty() && !col_index.count(name))
            throw SchemaError("header missing required column: " + name);
    };
    require(schema.unit_column);
    require(schema.period_column);
    require(schema.cluster_column);
    if (schema.cluster_column.empty())
        throw SchemaError("schema must designate a cluster column");
    for (const auto& [name, kind] : schema.kinds) require(name);

    ObservationTable table;
    table.cluster = schema.cluster_column;
    for (const auto& name : header) {
        Column c;
        auto it = schema.kinds.find(name);
        c.kind = (it != schema.kinds.end()) ? it->second : ColumnKind::continuous;
        table.columns.emplace(name, std::move(c));
    }

    std::vector<CoercionIssue> issues;
    std::set<std::pair<std::string, Period>> seen_keys;
    std::size_t data_row = 0;
    bool any_data = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        any_data = true;
        ++data_row;
        const auto fields = detail::split_line(line, schema.delimiter);
        if (fields.size() != header.size()) {
            issues.push_back({data_row, "<record>", line});
            continue;
        }

        // parse into a staging row first so a bad field drops the whole row
        std::map<std::string, double> vals;
        std::map<std::string, std::string> labs;
        bool row_ok = true;
        for (std::size_t j = 0; j < header.size(); ++j) {
            const auto& name = header[j];
            const auto& col = table.columns.at(name);
            if (col.kind == ColumnKind::categorical || name == schema.unit_column ||
                name == schema.period_column) {
                labs[name] = fields[j];
                continue;
            }
            double v;
            if (!detail::parse_double(fields[j], v)) {
                issues.push_back({data_row, name, fields[j]});
                row_ok = false;
                break;
            }
            if (col.kind == ColumnKind::binary && std::isfinite(v) && v != 0.0 && v != 1.0) {
                issues.push_back({data_row, name, fields[j]});
                row_ok = false;
                break;
            }
            vals[name] = v;
        }
        if (!row_ok) continue;

        std::string unit = schema.unit_column.empty()
                               ? std::to_string(data_row)
                               : labs.count(schema.unit_column)
                                     ? labs[schema.unit_column]
                                     : fields[col_index[schema.unit_column]];
        Period per = Period::baseline;
        if (!schema.period_column.empty()) {
            const std::string& p = labs[schema.period_column];
            if (p == "baseline") per = Period::baseline;
            else if (p == "followup") per = Period::followup;
            else {
                issues.push_back({data_row, schema.period_column, p});
                continue;
            }
        }
        if (!seen_keys.insert({unit, per}).second)
            throw DuplicationError("duplicate (unit, period) pair: unit=" + unit);

        table.unit_id.push_back(unit);
        table.period.push_back(per);
        for (std::size_t j = 0; j < header.size(); ++j) {
            const auto& name = header[j];
            auto& col = table.columns.at(name);
            if (col.kind == ColumnKind::categorical || name == schema.unit_column ||
                name == schema.period_column) {
                col.labels.push_back(labs.count(name) ? labs[name] : fields[j]);
            } else {
                col.values.push_back(vals[name]);
            }
        }
        ++table.row_count;
    }
    if (!any_data) throw InputError("empty input: header but no data rows");

    // unit/period carrier columns live in unit_id/period; treat a duplicate
    // numeric view as categorical labels so downstream code cannot misread them
    for (auto& [name, col] : table.columns) {
        if (name == schema.unit_column || name == schema.period_column)
            col.kind = ColumnKind::categorical;
    }
    return {std::move(table), std::move(issues)};
}

inline void validate_formula(const ObservationTable& table, const FormulaSpec& spec) {
    auto check = [&](const std::string& name, const char* what) {
        if (name.empty()) return;
        if (!table.has_column(name))
            throw SchemaError(std::string(what) + " column not in table: " + name);
    };
    check(spec.outcome, "outcome");
    for (const auto& in : spec.inputs) check(in.name, "input");
    check(spec.land_column, "land");
    check(spec.treatment, "treatment");
    for (const auto& c : spec.covariates) check(c, "covariate");
    for (const auto& c : spec.interactions) check(c, "interaction");
    for (const auto& c : spec.ineff_determinants) check(c, "inefficiency determinant");
    for (const auto& c : spec.noise_determinants) check(c, "noise determinant");
    check(spec.cluster.empty() ? table.cluster : spec.cluster, "cluster");

    if (!spec.treatment.empty()) {
        const auto& z = table.column(spec.treatment);
        for (double v : z.values)
            if (std::isfinite(v) && v != 0.0 && v != 1.0)
                throw SchemaError("treatment column is not binary: " + spec.treatment);
    }
    for (const auto& c : spec.interactions) {
        const bool in_cov = std::find(spec.covariates.begin(), spec.covariates.end(), c) !=
                            spec.covariates.end();
        const bool in_ineff = std::find(spec.ineff_determinants.begin(),
                                        spec.ineff_determinants.end(),
                                        c) != spec.ineff_determinants.end();
        if (!in_cov && !in_ineff)
            throw SchemaError("interacted variable must also enter in levels: " + c);
    }
}

struct TransformResult {
    ObservationTable table;
    std::size_t dropped = 0; // rows with land <= 0 or missing land
};

// Divides the outcome and every input except the land column by land,
// row-wise. Land stays unscaled so its coefficient reads as RTS - 1.
inline TransformResult per_unit_transform(const ObservationTable& table,
                                          const FormulaSpec& spec) {
    const auto& land = table.column(spec.land_column);
    std::vector<bool> keep(table.row_count, true);
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < table.row_count; ++i) {
        const double l = land.values[i];
        if (!(l > 0.0)) {
            keep[i] = false;
            ++dropped;
        }
    }
    if (dropped == table.row_count) throw EmptySampleError("all rows have nonpositive land");

    ObservationTable out = table.filter(keep);
    std::vector<std::string> scaled{spec.outcome};
    for (const auto& in : spec.inputs)
        if (in.name != spec.land_column) scaled.push_back(in.name);
    const auto& land_kept = out.column(spec.land_column).values;
    for (const auto& name : scaled) {
        auto& col = out.columns.at(name);
        for (std::size_t i = 0; i < out.row_count; ++i) col.values[i] /= land_kept[i];
    }
    return {std::move(out), dropped};
}

struct ZeroPolicy {
    enum class Kind { drop, shift_epsilon } kind = Kind::drop;
    double epsilon = 0.0;
    static ZeroPolicy drop() { return {Kind::drop, 0.0}; }
    static ZeroPolicy shift(double eps) { return {Kind::shift_epsilon, eps}; }
};

namespace detail {

// Categorical expansion: one 0/1 indicator per level, alphabetically first
// level is the base.
inline std::vector<std::pair<std::string, std::vector<double>>> expand_categorical(
    const std::string& name, const Column& col) {
    std::set<std::string> levels(col.labels.begin(), col.labels.end());
    levels.erase("");
    std::vector<std::pair<std::string, std::vector<double>>> out;
    bool first = true;
    for (const auto& lev : levels) {
        if (first) { first = false; continue; } // base level
        std::vector<double> ind(col.labels.size());
        for (std::size_t i = 0; i < col.labels.size(); ++i) {
            ind[i] = col.labels[i].empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : (col.labels[i] == lev ? 1.0 : 0.0);
        }
        out.emplace_back(name + "=" + lev, std::move(ind));
    }
    return out;
}

} // namespace detail

inline DesignMatrices build_design(const ObservationTable& table, const FormulaSpec& spec,
                                   const ZeroPolicy& policy = ZeroPolicy::drop()) {
    validate_formula(table, spec);
    const std::string cluster_col = spec.cluster.empty() ? table.cluster : spec.cluster;
    const std::size_t n0 = table.row_count;

    // assemble raw named columns first; log flags tracked alongside
    struct Raw {
        std::string name;
        std::vector<double> values;
        bool take_log = false;
    };
    auto numeric_values = [&](const std::string& name) -> std::vector<double> {
        const auto& col = table.column(name);
        if (col.kind == ColumnKind::categorical)
            throw DesignError("categorical column used where numeric required: " + name);
        return col.values;
    };

    std::vector<Raw> x_raw, wu_raw, wv_raw;
    for (const auto& in : spec.inputs) {
        std::string nm = in.log ? "ln_" + in.name : in.name;
        x_raw.push_back({nm, numeric_values(in.name), in.log});
    }
    std::vector<double> z;
    if (!spec.treatment.empty()) {
        z = numeric_values(spec.treatment);
        x_raw.push_back({spec.treatment, z, false});
    }
    for (const auto& c : spec.covariates) {
        const auto& col = table.column(c);
        if (col.kind == ColumnKind::categorical) {
            for (auto& [nm, vals] : detail::expand_categorical(c, col))
                x_raw.push_back({nm, std::move(vals), false});
        } else {
            x_raw.push_back({c, col.values, false});
        }
    }
    for (const auto& c : spec.interactions) {
        if (spec.treatment.empty()) throw DesignError("interactions require a treatment column");
        auto vals = numeric_values(c);
        for (std::size_t i = 0; i < n0; ++i) vals[i] *= z[i];
        x_raw.push_back({c + ":" + spec.treatment, std::move(vals), false});
    }

    if (!spec.treatment.empty()) wu_raw.push_back({spec.treatment, z, false});
    for (const auto& c : spec.ineff_determinants) {
        auto vals = numeric_values(c);
        wu_raw.push_back({c, vals, false});
        if (!spec.treatment.empty()) {
            auto inter = vals;
            for (std::size_t i = 0; i < n0; ++i) inter[i] *= z[i];
            wu_raw.push_back({c + ":" + spec.treatment, std::move(inter), false});
        }
    }
    for (const auto& c : spec.noise_determinants) wv_raw.push_back({c, numeric_values(c), false});

    std::vector<double> y = numeric_values(spec.outcome);
    const bool log_y = spec.log_outcome;

    // row filter: missing anywhere, or nonpositive under a logged column with drop policy
    ExclusionCounts excl;
    std::vector<bool> keep(n0, true);
    const auto& cluster_column = table.column(cluster_col);
    auto cluster_label = [&](std::size_t i) -> std::string {
        if (cluster_column.kind == ColumnKind::categorical) return cluster_column.labels[i];
        std::ostringstream ss;
        ss << cluster_column.values[i];
        return ss.str();
    };
    for (std::size_t i = 0; i < n0; ++i) {
        bool missing = !std::isfinite(y[i]);
        bool bad_log = log_y && !(policy.kind == ZeroPolicy::Kind::shift_epsilon
                                      ? y[i] + policy.epsilon > 0.0
                                      : y[i] > 0.0);
        for (const auto* group : {&x_raw, &wu_raw, &wv_raw}) {
            for (const auto& r : *group) {
                if (!std::isfinite(r.values[i])) missing = true;
                else if (r.take_log &&
                         !(policy.kind == ZeroPolicy::Kind::shift_epsilon
                               ? r.values[i] + policy.epsilon > 0.0
                               : r.values[i] > 0.0))
                    bad_log = true;
            }
        }
        if (cluster_column.kind == ColumnKind::categorical && cluster_column.labels[i].empty())
            missing = true;
        if (cluster_column.kind != ColumnKind::categorical &&
            !std::isfinite(cluster_column.values[i]))
            missing = true;
        if (missing) { keep[i] = false; ++excl.missing; }
        else if (bad_log) { keep[i] = false; ++excl.nonpositive_log; }
    }
    std::size_t n = 0;
    for (bool k : keep) n += k;
    if (n == 0) throw EmptySampleError("no rows remain after exclusions");

    DesignMatrices d;
    d.exclusions = excl;
    d.y.resize(n);
    d.X.resize(n, 1 + x_raw.size());
    d.W_u.resize(n, 1 + wu_raw.size());
    d.W_v.resize(n, 1 + wv_raw.size());
    d.cluster_ids.resize(n);
    d.x_names.push_back("(intercept)");
    for (const auto& r : x_raw) d.x_names.push_back(r.name);
    d.wu_names.push_back("(intercept)");
    for (const auto& r : wu_raw) d.wu_names.push_back(r.name);
    d.wv_names.push_back("(intercept)");
    for (const auto& r : wv_raw) d.wv_names.push_back(r.name);

    std::map<std::string, int> cluster_map;
    std::size_t row = 0;
    for (std::size_t i = 0; i < n0; ++i) {
        if (!keep[i]) continue;
        auto take = [&](double v, bool lg) {
            if (!lg) return v;
            if (policy.kind == ZeroPolicy::Kind::shift_epsilon) v += policy.epsilon;
            return std::log(v);
        };
        d.y(row) = take(y[i], log_y);
        d.X(row, 0) = 1.0;
        for (std::size_t j = 0; j < x_raw.size(); ++j)
            d.X(row, 1 + j) = take(x_raw[j].values[i], x_raw[j].take_log);
        d.W_u(row, 0) = 1.0;
        for (std::size_t j = 0; j < wu_raw.size(); ++j)
            d.W_u(row, 1 + j) = wu_raw[j].values[i];
        d.W_v(row, 0) = 1.0;
        for (std::size_t j = 0; j < wv_raw.size(); ++j)
            d.W_v(row, 1 + j) = wv_raw[j].values[i];
        const std::string lab = cluster_label(i);
        auto [it, inserted] = cluster_map.emplace(lab, static_cast<int>(cluster_map.size()));
        d.cluster_ids(row) = it->second;
        d.source_rows.push_back(i);
        ++row;
    }
    // remap cluster ids to order of first appearance
    {
        std::map<int, int> remap;
        for (int i = 0; i < d.cluster_ids.size(); ++i) {
            auto [it, ins] = remap.emplace(d.cluster_ids(i), static_cast<int>(remap.size()));
            d.cluster_ids(i) = it->second;
        }
    }

    // rank check; the trailing pivots of a column-pivoted QR name the culprits
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    if (rank < d.X.cols()) {
        const auto perm = qr.colsPermutation().indices();
        std::string names;
        for (Eigen::Index j = rank; j < d.X.cols(); ++j) {
            if (!names.empty()) names += ", ";
            names += d.x_names[static_cast<std::size_t>(perm(j))];
        }
        throw DesignError("design matrix is rank deficient; collinear columns: " + names);
    }
    return d;
}

// Writes the table back out in the delimited input format.
inline void write_table(std::ostream& out, const ObservationTable& table,
                        char delimiter = ',') {
    out << "unit" << delimiter << "period";
    for (const auto& [name, col] : table.columns) out << delimiter << name;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < table.row_count; ++i) {
        out << table.unit_id[i] << delimiter
            << (table.period[i] == Period::baseline ? "baseline" : "followup");
        for (const auto& [name, col] : table.columns) {
            out << delimiter;
            if (col.kind == ColumnKind::categorical) out << col.labels[i];
            else out << col.values[i];
        }
        out << "\n";
    }
}

} // namespace sfa
