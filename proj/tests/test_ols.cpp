#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sfa/ols.hpp"
#include "sfa/rng.hpp"

using Catch::Approx;
using namespace sfa;

namespace {

DesignMatrices simple_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& x_cols,
                             const std::vector<std::string>& names,
                             const Eigen::VectorXi& clusters) {
    DesignMatrices d;
    d.y = y;
    d.X.resize(y.size(), x_cols.cols() + 1);
    d.X.col(0).setOnes();
    d.X.rightCols(x_cols.cols()) = x_cols;
    d.x_names = {"(intercept)"};
    for (const auto& n : names) d.x_names.push_back(n);
    d.cluster_ids = clusters;
    d.W_u.resize(y.size(), 1);
    d.W_u.setOnes();
    d.W_v = d.W_u;
    d.wu_names = d.wv_names = {"(intercept)"};
    return d;
}

} // namespace

TEST_CASE("perfect linear fit recovers slope and intercept exactly") {
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    Eigen::VectorXi cl(3);
    cl << 0, 1, 2;
    const auto fit = ols_fit(simple_design(y, x, {"x"}, cl), SeMode::classical);
    REQUIRE(fit.coef(0) == Approx(0.0).margin(1e-12));
    REQUIRE(fit.coef(1) == Approx(1.0));
    REQUIRE(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(fit.r_squared == Approx(1.0));
}

TEST_CASE("normal equations orthogonality holds") {
    SplitMix64 rng(11);
    const int n = 200;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i) = 1.0 + 0.5 * x(i, 0) - 0.3 * x(i, 1) + rng.normal();
        cl(i) = i % 10;
    }
    const auto d = simple_design(y, x, {"a", "b"}, cl);
    const auto fit = ols_fit(d);
    const Eigen::VectorXd xe = d.X.transpose() * fit.residuals;
    REQUIRE(xe.cwiseAbs().maxCoeff() / std::max(1.0, y.norm()) < 1e-8);
    REQUIRE(std::fabs(fit.residuals.sum()) < 1e-8);
    // covariance symmetric PSD
    REQUIRE((fit.cov - fit.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.cov);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("singleton clusters reduce CR1 to the HC sandwich up to c") {
    SplitMix64 rng(23);
    const int n = 150;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y(i) = 2.0 + 0.5 * x(i, 0) + (1.0 + 0.5 * std::fabs(x(i, 0))) * rng.normal();
        cl(i) = i;
    }
    const auto d = simple_design(y, x, {"x"}, cl);
    const auto fit = ols_fit(d, SeMode::cluster_cr1);

    // HC0 by hand
    const Eigen::MatrixXd xtx_inv = (d.X.transpose() * d.X).inverse();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < n; ++i)
        meat += fit.residuals(i) * fit.residuals(i) * d.X.row(i).transpose() * d.X.row(i);
    const Eigen::MatrixXd hc0 = xtx_inv * meat * xtx_inv;
    const double c = (n / (n - 1.0)) * ((n - 1.0) / (n - 2.0));
    REQUIRE((fit.cov - c * hc0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("intercept shift and regressor scaling behave as expected") {
    SplitMix64 rng(5);
    const int n = 300;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y(i) = 1.0 + 0.7 * x(i, 0) + rng.normal();
        cl(i) = i % 20;
    }
    const auto base = ols_fit(simple_design(y, x, {"x"}, cl));

    const auto shifted = ols_fit(simple_design(y.array() + 5.0, x, {"x"}, cl));
    REQUIRE(shifted.coef(0) == Approx(base.coef(0) + 5.0).epsilon(1e-8));
    REQUIRE(shifted.coef(1) == Approx(base.coef(1)).epsilon(1e-8));
    REQUIRE(std::sqrt(shifted.cov(1, 1)) == Approx(std::sqrt(base.cov(1, 1))).epsilon(1e-8));

    const auto scaled = ols_fit(simple_design(y, 4.0 * x, {"x"}, cl));
    REQUIRE(scaled.coef(1) == Approx(base.coef(1) / 4.0).epsilon(1e-8));
    REQUIRE(std::sqrt(scaled.cov(1, 1)) ==
            Approx(std::sqrt(base.cov(1, 1)) / 4.0).epsilon(1e-8));
    REQUIRE(scaled.coef(1) / std::sqrt(scaled.cov(1, 1)) ==
            Approx(base.coef(1) / std::sqrt(base.cov(1, 1))).epsilon(1e-8));
}

TEST_CASE("classical and CR1 agree under iid errors with singleton clusters") {
    SplitMix64 rng(31);
    const int n = 20000;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y(i) = 1.0 + 0.5 * x(i, 0) + rng.normal();
        cl(i) = i;
    }
    const auto d = simple_design(y, x, {"x"}, cl);
    const auto cr = ols_fit(d, SeMode::cluster_cr1);
    const auto cls = ols_fit(d, SeMode::classical);
    for (int j = 0; j < 2; ++j) {
        const double a = std::sqrt(cr.cov(j, j));
        const double b = std::sqrt(cls.cov(j, j));
        REQUIRE(std::fabs(a - b) / b < 0.10);
    }
}

TEST_CASE("underdetermined and single-cluster inputs are rejected") {
    Eigen::VectorXd y(2);
    y << 1, 2;
    Eigen::MatrixXd x(2, 1);
    x << 1, 2;
    Eigen::VectorXi cl(2);
    cl << 0, 0;
    REQUIRE_THROWS_AS(ols_fit(simple_design(y, x, {"x"}, cl)), DesignError);
}

TEST_CASE("itt effect is zero when arms are identical") {
    std::ostringstream csv;
    csv << "unit,period,branch,q,z\n";
    for (int i = 0; i < 40; ++i)
        csv << i << ",baseline,b" << i % 8 << ",3.5," << i % 2 << "\n";
    std::istringstream in(csv.str());
    TableSchema s;
    s.unit_column = "unit";
    s.period_column = "period";
    s.cluster_column = "branch";
    s.kinds["branch"] = ColumnKind::categorical;
    auto r = load_table(in, s);
    FormulaSpec spec;
    spec.treatment = "z";
    spec.cluster = "branch";
    const auto e = itt_effect(r.table, "q", spec, false);
    REQUIRE(e.estimate == Approx(0.0).margin(1e-12));
}

TEST_CASE("constant treatment column is a degenerate-treatment error") {
    std::istringstream in("unit,period,branch,q,z\n1,baseline,b1,3,1\n2,baseline,b2,4,1\n");
    TableSchema s;
    s.unit_column = "unit";
    s.period_column = "period";
    s.cluster_column = "branch";
    s.kinds["branch"] = ColumnKind::categorical;
    auto r = load_table(in, s);
    FormulaSpec spec;
    spec.treatment = "z";
    spec.cluster = "branch";
    REQUIRE_THROWS_AS(itt_effect(r.table, "q", spec, false), DesignError);
}

TEST_CASE("joint wald test rejects strong association and needs restrictions") {
    SplitMix64 rng(17);
    const int n = 2000;
    Eigen::VectorXd z(n);
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        // x0 strongly predicts z
        z(i) = (x(i, 0) + 0.2 * rng.normal() > 0) ? 1.0 : 0.0;
        cl(i) = i % 40;
    }
    const auto fit = ols_fit(simple_design(z, x, {"x0", "x1"}, cl));
    REQUIRE_THROWS_AS(wald_joint_test(fit, {}), DesignError);
    const auto w = wald_joint_test(fit, {"x0", "x1"});
    REQUIRE(w.df1 == 2);
    REQUIRE(w.df2 == 39.0);
    REQUIRE(w.p_value < 0.01);
}

TEST_CASE("marginal effect at the zero profile equals the treatment coefficient") {
    SplitMix64 rng(3);
    const int n = 400;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 3); // z, I, I*z
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        const double z = (i % 2 == 0) ? 1.0 : 0.0;
        const double I = (rng.uniform() < 0.4) ? 1.0 : 0.0;
        x(i, 0) = z;
        x(i, 1) = I;
        x(i, 2) = I * z;
        y(i) = 0.5 + 0.13 * z + 0.02 * I + 0.03 * I * z + 0.1 * rng.normal();
        cl(i) = i % 40;
    }
    auto d = simple_design(y, x, {"z", "tenant", "tenant:z"}, cl);
    const auto res = heterogeneous_ols(d, "z", {}, /*percent_scale=*/false);
    REQUIRE(res.marginal_effect.estimate == res.fit.coef(res.fit.index("z")));

    REQUIRE_THROWS_AS(heterogeneous_ols(d, "z", {{"missing", 0.5}}, false), DesignError);
}

TEST_CASE("heterogeneous marginal effect combines coefficients linearly") {
    // exact data: y = 13.06 z + 3.45 I*z + 2 I, no noise
    const int n = 40;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXi cl(n);
    for (int i = 0; i < n; ++i) {
        const double z = (i % 2 == 0) ? 1.0 : 0.0;
        const double I = (i % 4 < 2) ? 1.0 : 0.0;
        x(i, 0) = z;
        x(i, 1) = I;
        x(i, 2) = I * z;
        y(i) = 1.0 + 13.06 * z + 2.0 * I + 3.45 * I * z;
        cl(i) = i % 8;
    }
    auto d = simple_design(y, x, {"z", "tenant", "tenant:z"}, cl);
    const auto res = heterogeneous_ols(d, "z", {{"tenant", 0.32}}, false);
    REQUIRE(res.marginal_effect.estimate == Approx(13.06 + 3.45 * 0.32).epsilon(1e-10));
    REQUIRE(res.marginal_effect.estimate == Approx(14.164).epsilon(1e-10));
}

TEST_CASE("heterogeneous effect recovery on a noisy DGP") {
    SplitMix64 rng(47);
    const int n = 4000;
    const double g1 = 0.11, d1 = 0.05;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXi cl(n);
    std::vector<char> treated(40);
    for (int g = 0; g < 40; ++g) treated[g] = g % 2;
    for (int i = 0; i < n; ++i) {
        const int g = i % 40;
        const double z = treated[g] ? 1.0 : 0.0;
        const double I = (rng.uniform() < 0.5) ? 1.0 : 0.0;
        x(i, 0) = z;
        x(i, 1) = I;
        x(i, 2) = I * z;
        y(i) = 0.3 + g1 * z + 0.02 * I + d1 * I * z + 0.2 * rng.normal();
        cl(i) = g;
    }
    auto d = simple_design(y, x, {"z", "I", "I:z"}, cl);
    for (double profile : {0.0, 0.5, 1.0}) {
        const auto res = heterogeneous_ols(d, "z", {{"I", profile}}, false);
        const double truth = g1 + d1 * profile;
        REQUIRE(std::fabs(res.marginal_effect.estimate - truth) <
                3.0 * res.marginal_effect.std_error);
    }
}
