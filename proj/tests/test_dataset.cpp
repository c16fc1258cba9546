#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "sfa/table.hpp"

using Catch::Approx;
using namespace sfa;

namespace {

TableSchema basic_schema() {
    TableSchema s;
    s.unit_column = "unit";
    s.period_column = "period";
    s.cluster_column = "branch";
    s.kinds["branch"] = ColumnKind::categorical;
    return s;
}

LoadResult load(const std::string& csv, TableSchema schema = basic_schema()) {
    std::istringstream in(csv);
    return load_table(in, schema);
}

} // namespace

TEST_CASE("three-row csv parses into a table") {
    auto r = load("unit,period,branch,rice,land\n"
                  "1,baseline,b1,100,50\n"
                  "2,baseline,b1,80,40\n"
                  "3,baseline,b2,120,60\n");
    REQUIRE(r.table.row_count == 3);
    REQUIRE(r.issues.empty());
    REQUIRE(r.table.column("rice").values[0] == 100.0);
    REQUIRE(r.table.cluster == "branch");
}

TEST_CASE("coercion failure names row and column") {
    auto r = load("unit,period,branch,rice,land\n"
                  "1,baseline,b1,100,50\n"
                  "2,baseline,b1,80,abc\n"
                  "3,baseline,b2,120,60\n");
    REQUIRE(r.table.row_count == 2);
    REQUIRE(r.issues.size() == 1);
    REQUIRE(r.issues[0].row == 2);
    REQUIRE(r.issues[0].column == "land");
}

TEST_CASE("duplicate unit-period pair is an error") {
    REQUIRE_THROWS_AS(load("unit,period,branch,rice\n"
                           "7,baseline,b1,100\n"
                           "7,baseline,b2,90\n"),
                      DuplicationError);
}

TEST_CASE("empty file and missing columns are errors") {
    REQUIRE_THROWS_AS(load(""), InputError);
    REQUIRE_THROWS_AS(load("unit,period,branch,rice\n"), InputError);
    REQUIRE_THROWS_AS(load("unit,period,rice\n1,baseline,100\n"), SchemaError);
}

TEST_CASE("binary schema column rejects other values") {
    auto s = basic_schema();
    s.kinds["z"] = ColumnKind::binary;
    auto r = load("unit,period,branch,z\n1,baseline,b1,1\n2,baseline,b1,2\n", s);
    REQUIRE(r.table.row_count == 1);
    REQUIRE(r.issues.size() == 1);
    REQUIRE(r.issues[0].column == "z");
}

TEST_CASE("per-unit transform divides by land and keeps land unscaled") {
    auto r = load("unit,period,branch,rice,land,seed\n"
                  "1,baseline,b1,100,50,10\n"
                  "2,baseline,b1,90,30,6\n");
    FormulaSpec spec;
    spec.outcome = "rice";
    spec.inputs = {{"seed", true}, {"land", true}};
    spec.land_column = "land";
    const auto t = per_unit_transform(r.table, spec);
    REQUIRE(t.dropped == 0);
    REQUIRE(t.table.column("rice").values[0] == Approx(2.0));
    REQUIRE(t.table.column("seed").values[1] == Approx(0.2));
    REQUIRE(t.table.column("land").values[0] == 50.0);
}

TEST_CASE("nonpositive land rows are dropped and counted") {
    auto r = load("unit,period,branch,rice,land\n"
                  "1,baseline,b1,100,50\n"
                  "2,baseline,b1,90,0\n");
    FormulaSpec spec;
    spec.outcome = "rice";
    spec.land_column = "land";
    const auto t = per_unit_transform(r.table, spec);
    REQUIRE(t.dropped == 1);
    REQUIRE(t.table.row_count == 1);

    auto all_bad = load("unit,period,branch,rice,land\n1,baseline,b1,100,0\n");
    REQUIRE_THROWS_AS(per_unit_transform(all_bad.table, spec), EmptySampleError);
}

TEST_CASE("proportional output yields a constant per-land outcome") {
    std::ostringstream csv;
    csv << "unit,period,branch,rice,land\n";
    for (int i = 1; i <= 20; ++i)
        csv << i << ",baseline,b" << (i % 4) << "," << 18.12 * (10.0 + i) << ","
            << (10.0 + i) << "\n";
    auto r = load(csv.str());
    FormulaSpec spec;
    spec.outcome = "rice";
    spec.land_column = "land";
    const auto t = per_unit_transform(r.table, spec);
    for (double v : t.table.column("rice").values) REQUIRE(v == Approx(18.12));
}

TEST_CASE("per-land transform preserves totals over retained rows") {
    auto r = load("unit,period,branch,rice,land\n"
                  "1,baseline,b1,123.4,50\n"
                  "2,baseline,b1,95.7,31\n"
                  "3,baseline,b2,14.2,7\n");
    FormulaSpec spec;
    spec.outcome = "rice";
    spec.land_column = "land";
    const auto t = per_unit_transform(r.table, spec);
    double total = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < t.table.row_count; ++i)
        total += t.table.column("rice").values[i] * t.table.column("land").values[i];
    for (double v : r.table.column("rice").values) raw += v;
    REQUIRE(total == Approx(raw).epsilon(1e-9));
}

TEST_CASE("build_design logs flagged inputs and places the treatment") {
    auto r = load("unit,period,branch,y,seed,land,z\n"
                  "1,baseline,b1,2.5,2.718281828459045,1,1\n"
                  "2,baseline,b2,1.5,1,1,0\n"
                  "3,baseline,b1,2.0,2,3,1\n"
                  "4,baseline,b2,1.1,1.5,2,0\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.inputs = {{"seed", true}, {"land", true}};
    spec.treatment = "z";
    const auto d = build_design(r.table, spec);
    REQUIRE(d.x_names == std::vector<std::string>{"(intercept)", "ln_seed", "ln_land", "z"});
    REQUIRE(d.X(0, 1) == Approx(1.0));
    REQUIRE(d.X(0, 2) == Approx(0.0));
    REQUIRE(d.X(0, 3) == 1.0);
    // W_u carries intercept and treatment
    REQUIRE(d.wu_names == std::vector<std::string>{"(intercept)", "z"});
    REQUIRE(d.wv_names == std::vector<std::string>{"(intercept)"});
}

TEST_CASE("zero values under drop policy are excluded and counted") {
    auto r = load("unit,period,branch,y,pesticide\n"
                  "1,baseline,b1,2.0,3\n"
                  "2,baseline,b1,1.0,0\n"
                  "3,baseline,b2,1.5,2\n"
                  "4,baseline,b2,1.2,1\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.inputs = {{"pesticide", true}};
    const auto d = build_design(r.table, spec);
    REQUIRE(d.n() == 3);
    REQUIRE(d.exclusions.nonpositive_log == 1);
    REQUIRE(d.n() + d.exclusions.total() == r.table.row_count);

    const auto d2 = build_design(r.table, spec, ZeroPolicy::shift(0.5));
    REQUIRE(d2.n() == 4);
    REQUIRE(d2.X(1, 1) == Approx(std::log(0.5)));
}

TEST_CASE("duplicated column triggers a design error naming the culprit") {
    auto r = load("unit,period,branch,y,fertilizer\n"
                  "1,baseline,b1,2.0,3\n"
                  "2,baseline,b1,1.0,4\n"
                  "3,baseline,b2,1.5,2\n"
                  "4,baseline,b2,1.2,1\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.inputs = {{"fertilizer", true}, {"fertilizer", true}};
    REQUIRE_THROWS_WITH(build_design(r.table, spec),
                        Catch::Matchers::ContainsSubstring("fertilizer"));
}

TEST_CASE("design is deterministic and order preserving") {
    auto r = load("unit,period,branch,y,x\n"
                  "1,baseline,b1,5,1\n"
                  "2,baseline,b2,7,2\n"
                  "3,baseline,b1,9,3\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.inputs = {{"x", false}};
    const auto a = build_design(r.table, spec);
    const auto b = build_design(r.table, spec);
    REQUIRE(a.y == b.y);
    REQUIRE(a.y(0) == 5.0);
    REQUIRE(a.y(2) == 9.0);
    REQUIRE(a.cluster_ids(0) == 0);
    REQUIRE(a.cluster_ids(1) == 1);
    REQUIRE(a.cluster_ids(2) == 0);
}

TEST_CASE("missing values are listwise-deleted with a count") {
    auto r = load("unit,period,branch,y,x\n"
                  "1,baseline,b1,5,1\n"
                  "2,baseline,b2,NA,2\n"
                  "3,baseline,b1,9,3\n"
                  "4,baseline,b2,4,2\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.inputs = {{"x", false}};
    const auto d = build_design(r.table, spec);
    REQUIRE(d.n() == 3);
    REQUIRE(d.exclusions.missing == 1);
}

TEST_CASE("categorical covariates expand with an alphabetical base") {
    auto s = basic_schema();
    s.kinds["soil"] = ColumnKind::categorical;
    auto r = load("unit,period,branch,y,soil\n"
                  "1,baseline,b1,5,loam\n"
                  "2,baseline,b2,7,clay\n"
                  "3,baseline,b1,9,sand\n"
                  "4,baseline,b2,6,loam\n",
                  s);
    FormulaSpec spec;
    spec.outcome = "y";
    spec.log_outcome = false;
    spec.covariates = {"soil"};
    const auto d = build_design(r.table, spec);
    // clay is the base; loam and sand get indicators
    REQUIRE(d.x_names == std::vector<std::string>{"(intercept)", "soil=loam", "soil=sand"});
    REQUIRE(d.X(0, 1) == 1.0);
    REQUIRE(d.X(1, 1) == 0.0);
    REQUIRE(d.X(2, 2) == 1.0);
}

TEST_CASE("interactions must enter in levels") {
    auto r = load("unit,period,branch,y,z,w\n"
                  "1,baseline,b1,5,1,2\n"
                  "2,baseline,b2,7,0,3\n");
    FormulaSpec spec;
    spec.outcome = "y";
    spec.treatment = "z";
    spec.interactions = {"w"};
    REQUIRE_THROWS_AS(validate_formula(r.table, spec), SchemaError);
    spec.covariates = {"w"};
    REQUIRE_NOTHROW(validate_formula(r.table, spec));
}
