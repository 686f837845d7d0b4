#include "oracles.hpp"

#include "aberrant_mix/diagnostics.hpp"
#include "aberrant_mix/error.hpp"
#include "aberrant_mix/model.hpp"

#include <gtest/gtest.h>

#include <string>

namespace am = aberrant_mix;
namespace amt = aberrant_mix::testing;
using am::MatrixXd;
using am::MatrixXi;
using am::VectorXd;

namespace {

am::Dataset structured_sample(int n, std::uint64_t seed, am::FactorStructure& structure) {
    am::Rng rng(seed);
    structure = am::FactorStructure::simple(9, 3);
    am::MixtureParams params = amt::random_params(structure, 1, 0, true, rng);
    params.reg.beta(0) = 40.0;  // every row from the CFA block
    return amt::sample_dataset(params, n, rng);
}

}  // namespace

TEST(FitIndices, SaturatedModelIsPerfect) {
    am::Rng rng(51);
    const MatrixXd a = MatrixXd::NullaryExpr(5, 5, [&] { return rng.normal(); });
    const MatrixXd s = a * a.transpose() + MatrixXd::Identity(5, 5);
    const am::FitIndices idx = am::fit_indices(s, s, 200, 15);
    EXPECT_EQ(idx.df, 0);
    EXPECT_EQ(idx.cfi, 1.0);
    EXPECT_EQ(idx.rmsea, 0.0);
}

TEST(FitIndices, DiscrepancyNonnegativeAndZeroAtTruth) {
    am::Rng rng(52);
    for (int t = 0; t < 50; ++t) {
        const int p = 2 + t % 6;
        const MatrixXd a = MatrixXd::NullaryExpr(p, p, [&] { return rng.normal(); });
        const MatrixXd b = MatrixXd::NullaryExpr(p, p, [&] { return rng.normal(); });
        const MatrixXd s = a * a.transpose() + 0.3 * MatrixXd::Identity(p, p);
        const MatrixXd sigma = b * b.transpose() + 0.3 * MatrixXd::Identity(p, p);
        EXPECT_GT(am::ml_discrepancy(s, sigma), 0.0);
        EXPECT_NEAR(am::ml_discrepancy(s, s), 0.0, 1e-10);
    }
}

TEST(FitCfaSingle, WellSpecifiedModelFits) {
    am::FactorStructure s;
    const am::Dataset data = structured_sample(5000, 53, s);
    const am::CfaBaseline fit = am::fit_cfa_single(data, s);
    EXPECT_TRUE(fit.converged);
    EXPECT_GT(fit.indices.cfi, 0.98);
    EXPECT_LT(fit.indices.rmsea, 0.03);
    EXPECT_EQ(fit.indices.df, 9 * 10 / 2 - (9 + 9 + 3));
    EXPECT_EQ(fit.indices.df_null, 9 * 10 / 2 - 9);
}

TEST(FitCfaSingle, MisspecifiedModelFitsWorse) {
    am::FactorStructure s;
    const am::Dataset data = structured_sample(2000, 54, s);
    const am::CfaBaseline good = am::fit_cfa_single(data, s);
    MatrixXi wrong = MatrixXi::Zero(9, 3);
    for (int j = 0; j < 9; ++j) wrong(j, j % 3) = 1;
    const am::CfaBaseline bad = am::fit_cfa_single(data, am::FactorStructure(wrong));
    EXPECT_LT(bad.indices.cfi, good.indices.cfi);
    EXPECT_GT(bad.indices.rmsea, good.indices.rmsea);
}

TEST(FitCfaSingle, InvariantToItemOrderAndScale) {
    am::FactorStructure s;
    const am::Dataset data = structured_sample(1500, 55, s);
    const am::CfaBaseline base = am::fit_cfa_single(data, s);

    std::vector<int> order{8, 3, 5, 0, 7, 1, 6, 2, 4};
    MatrixXd permuted(data.n(), 9);
    MatrixXi pattern(9, 3);
    for (int j = 0; j < 9; ++j) {
        permuted.col(j) = data.responses.col(order[static_cast<std::size_t>(j)]);
        pattern.row(j) = s.pattern().row(order[static_cast<std::size_t>(j)]);
    }
    const am::CfaBaseline relabeled =
        am::fit_cfa_single(am::Dataset::from_responses(permuted), am::FactorStructure(pattern));
    EXPECT_NEAR(relabeled.indices.cfi, base.indices.cfi, 1e-6);
    EXPECT_NEAR(relabeled.indices.rmsea, base.indices.rmsea, 1e-6);

    const am::CfaBaseline scaled = am::fit_cfa_single(am::Dataset::from_responses(3.5 * data.responses), s);
    EXPECT_NEAR(scaled.indices.rmsea, base.indices.rmsea, 1e-6);
    EXPECT_NEAR(scaled.indices.cfi, base.indices.cfi, 1e-6);
}

TEST(Correlation, DuplicatedColumnsAndShape) {
    am::Rng rng(56);
    MatrixXd rows = MatrixXd::NullaryExpr(100, 4, [&] { return rng.normal(); });
    rows.col(3) = rows.col(1);
    const MatrixXd r = am::correlation(rows);
    EXPECT_NEAR(r(1, 3), 1.0, 1e-15);
    EXPECT_TRUE((r.diagonal().array() == 1.0).all());
    EXPECT_EQ(r, r.transpose());
}

TEST(Correlation, IndependentColumnsNearZero) {
    am::Rng rng(57);
    const MatrixXd rows = MatrixXd::NullaryExpr(100000, 5, [&] { return rng.normal(); });
    const MatrixXd r = am::correlation(rows) - MatrixXd::Identity(5, 5);
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 0.02);
}

TEST(CorrByClass, SplitsRowsAndChecksSize) {
    am::Rng rng(58);
    am::Dataset data = am::Dataset::from_responses(MatrixXd::NullaryExpr(40, 3, [&] { return rng.normal(); }));
    Eigen::VectorXi z = Eigen::VectorXi::Ones(40);
    EXPECT_EQ(am::class_correlation(data, z, 1), am::correlation(data.responses));
    try {
        am::corr_by_class(data, z);
        FAIL() << "expected an error for the empty class";
    } catch (const am::InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("class 0"), std::string::npos) << e.what();
    }
    z.head(20).setZero();
    const am::ClassCorrelations c = am::corr_by_class(data, z);
    EXPECT_EQ(c.efa, am::correlation(data.responses.topRows(20)));
    EXPECT_EQ(c.cfa, am::correlation(data.responses.bottomRows(20)));
}
