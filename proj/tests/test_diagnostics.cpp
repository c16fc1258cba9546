#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "sfa/diagnostics.hpp"
#include "sfa/rng.hpp"
#include "sfa/table.hpp"

using Catch::Approx;
using namespace sfa;

namespace {

LoadResult load(const std::string& csv) {
    TableSchema s;
    s.unit_column = "unit";
    s.period_column = "period";
    s.cluster_column = "branch";
    s.kinds["branch"] = ColumnKind::categorical;
    std::istringstream in(csv);
    return load_table(in, s);
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<long>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<long>(i)) = v[i];
    return out;
}

} // namespace

TEST_CASE("symmetric residuals give a zero skewness statistic") {
    const auto r = skewness_test(to_vec({-3, -2, -1, 1, 2, 3, -3, -2, -1, 1, 2, 3}));
    REQUIRE(r.m3 == Approx(0.0).margin(1e-12));
    REQUIRE(r.z_stat == Approx(0.0).margin(1e-10));
    REQUIRE(r.p_value == Approx(1.0).epsilon(1e-6));
    REQUIRE(r.direction == SkewDirection::symmetric);
}

TEST_CASE("skewness statistic is location and scale invariant") {
    SplitMix64 rng(11);
    std::vector<double> v(200), w(200);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = rng.normal() - std::fabs(rng.normal());
        w[i] = 5.0 + 3.0 * v[i];
    }
    const auto a = skewness_test(to_vec(v));
    const auto b = skewness_test(to_vec(w));
    REQUIRE(a.z_stat == Approx(b.z_stat).epsilon(1e-10));
    REQUIRE(a.direction == SkewDirection::negative_skew);
}

TEST_CASE("skewness test flags a composed half-normal error") {
    SplitMix64 rng(29);
    std::vector<double> v(5000);
    for (auto& x : v) x = 0.15 * rng.normal() - rng.half_normal(0.3);
    const auto r = skewness_test(to_vec(v));
    REQUIRE(r.direction == SkewDirection::negative_skew);
    REQUIRE(r.p_value < 1e-6);
}

TEST_CASE("skewness test rejects tiny and constant samples") {
    REQUIRE_THROWS_AS(skewness_test(to_vec({1, 2, 3})), std::invalid_argument);
    REQUIRE_THROWS_AS(skewness_test(to_vec(std::vector<double>(12, 4.0))),
                      std::invalid_argument);
}

TEST_CASE("balance table on identical arms accepts the null") {
    std::ostringstream csv;
    csv << "unit,period,branch,z,age,educ,flat\n";
    int unit = 0;
    for (int arm = 0; arm <= 1; ++arm)
        for (int g = 0; g < 4; ++g)
            for (int i = 0; i < 5; ++i)
                csv << ++unit << ",baseline,b" << arm << g << "," << arm << ","
                    << 30 + 2 * g + i << "," << 4 + ((i + g) % 3) << ",7\n";
    const auto r = load(csv.str());
    const auto rep = balance_table(r.table, {"age", "educ", "flat"}, "z", "branch");
    REQUIRE(rep.rows.size() == 3);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto& row = rep.rows[j];
        REQUIRE(row.control_mean == Approx(row.treatment_mean));
        REQUIRE_FALSE(row.degenerate);
        REQUIRE(row.p_value == Approx(1.0).epsilon(1e-6));
    }
    // constant column is reported but kept out of the joint test
    REQUIRE(rep.rows[2].degenerate);
    REQUIRE(rep.joint_df1 == 2);
    REQUIRE(rep.joint_p > 0.99);
}

TEST_CASE("balance p-values agree with the arm-difference regression") {
    std::ostringstream csv;
    csv << "unit,period,branch,z,age\n";
    SplitMix64 rng(3);
    for (int i = 1; i <= 60; ++i)
        csv << i << ",baseline,b" << (i % 6) << "," << (i % 6 < 3 ? 1 : 0) << ","
            << 30 + rng.normal() << "\n";
    const auto r = load(csv.str());
    const auto rep = balance_table(r.table, {"age"}, "z", "branch");
    FormulaSpec spec;
    spec.treatment = "z";
    spec.cluster = "branch";
    const auto direct = itt_effect(r.table, "age", spec, false);
    REQUIRE(rep.rows[0].p_value == Approx(direct.p_value).epsilon(1e-12));
    REQUIRE(rep.rows[0].treatment_mean - rep.rows[0].control_mean ==
            Approx(direct.estimate).epsilon(1e-10));
}

TEST_CASE("balance table requires both arms and numeric variables") {
    const auto r = load("unit,period,branch,z,age\n"
                        "1,baseline,b1,1,30\n"
                        "2,baseline,b2,1,31\n");
    REQUIRE_THROWS_AS(balance_table(r.table, {"age"}, "z", "branch"), DesignError);
}

TEST_CASE("attrition check without attrition is degenerate") {
    const auto r = load("unit,period,branch,z\n"
                        "1,baseline,b1,1\n"
                        "1,followup,b1,1\n"
                        "2,baseline,b2,0\n"
                        "2,followup,b2,0\n");
    const auto rep = attrition_check(r.table, "z", {});
    REQUIRE(rep.degenerate);
    REQUIRE(rep.rate_overall == 0.0);
}

TEST_CASE("attrition rates and the arm contrast") {
    // 4 clusters per arm, 4 units each; one unit attrites in half the clusters
    std::ostringstream csv;
    csv << "unit,period,branch,z\n";
    int unit = 0;
    for (int arm = 0; arm <= 1; ++arm)
        for (int g = 0; g < 4; ++g)
            for (int i = 0; i < 4; ++i) {
                ++unit;
                csv << unit << ",baseline,b" << arm << g << "," << arm << "\n";
                const bool gone = (g % 2 == 0) && i == 0;
                if (!gone) csv << unit << ",followup,b" << arm << g << "," << arm << "\n";
            }
    const auto r = load(csv.str());
    const auto rep = attrition_check(r.table, "z", {});
    REQUIRE_FALSE(rep.degenerate);
    REQUIRE(rep.rate_control == Approx(2.0 / 16.0));
    REQUIRE(rep.rate_treatment == Approx(2.0 / 16.0));
    REQUIRE(rep.rate_overall == Approx(4.0 / 32.0));
    // equal rates: the LPM contrast is exactly zero
    REQUIRE(rep.treatment_only.estimate == Approx(0.0).margin(1e-12));
    REQUIRE_FALSE(rep.has_covariate_column);
}

TEST_CASE("overall attrition rate is the arm-size weighted mean") {
    std::ostringstream csv;
    csv << "unit,period,branch,z\n";
    int unit = 0;
    auto add = [&](int arm, int g, bool gone) {
        ++unit;
        csv << unit << ",baseline,b" << arm << g << "," << arm << "\n";
        if (!gone) csv << unit << ",followup,b" << arm << g << "," << arm << "\n";
    };
    for (int i = 0; i < 12; ++i) add(0, i % 3, i < 3);     // 12 control, 3 attrite
    for (int i = 0; i < 6; ++i) add(1, i % 3, i < 1);      // 6 treated, 1 attrites
    const auto r = load(csv.str());
    const auto rep = attrition_check(r.table, "z", {});
    const double expected =
        (12.0 * rep.rate_control + 6.0 * rep.rate_treatment) / 18.0;
    REQUIRE(rep.rate_overall == Approx(expected).epsilon(1e-12));
}

TEST_CASE("density of a two-point sample is symmetric and integrates to one") {
    const auto r = density_export({0.0, 1.0}, 401, DensityBandwidth::fixed(0.5));
    REQUIRE(r.bandwidth == 0.5);
    const std::size_t m = r.points.size();
    for (std::size_t i = 0; i < m; ++i) {
        const auto& [x, d] = r.points[i];
        const auto& [xr, dr] = r.points[m - 1 - i];
        REQUIRE(x + xr == Approx(1.0).margin(1e-9));
        REQUIRE(d == Approx(dr).epsilon(1e-9));
    }
    double integral = 0.0;
    for (std::size_t i = 1; i < m; ++i)
        integral += 0.5 * (r.points[i].second + r.points[i - 1].second) *
                    (r.points[i].first - r.points[i - 1].first);
    REQUIRE(std::fabs(integral - 1.0) < 1e-3);
}

TEST_CASE("density recovers a standard normal sample") {
    SplitMix64 rng(17);
    std::vector<double> v(100000);
    for (auto& x : v) x = rng.normal();
    const auto r = density_export(v, 513);
    double integral = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& [x, d] = r.points[i];
        if (i > 0)
            integral += 0.5 * (d + r.points[i - 1].second) * (x - r.points[i - 1].first);
        if (x >= -2.0 && x <= 2.0) sup = std::max(sup, std::fabs(d - norm_pdf(x)));
    }
    REQUIRE(std::fabs(integral - 1.0) < 1e-3);
    REQUIRE(sup < 0.01);
}

TEST_CASE("zero-variance density degenerates to a spike") {
    const auto r = density_export({2.0, 2.0, 2.0}, 100);
    REQUIRE(r.degenerate);
    REQUIRE(r.points.size() == 1);
    REQUIRE(r.points[0].first == 2.0);
}

TEST_CASE("density rejects invalid input") {
    REQUIRE_THROWS_AS(density_export({1.0}, 100), std::invalid_argument);
    REQUIRE_THROWS_AS(density_export({1.0, std::nan("")}, 100), std::invalid_argument);
    REQUIRE_THROWS_AS(density_export({1.0, 2.0}, 100, DensityBandwidth::fixed(0.0)),
                      std::invalid_argument);
}
