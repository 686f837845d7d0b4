#include "aberrant_mix/error.hpp"
#include "aberrant_mix/io.hpp"
#include "aberrant_mix/model.hpp"
#include "aberrant_mix/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace am = aberrant_mix;
using am::MatrixXd;
using am::MatrixXi;
using am::VectorXd;

namespace {

MatrixXd sample_cov(const MatrixXd& rows) {
    const MatrixXd centered = rows.rowwise() - rows.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(rows.rows());
}

am::CfaParams small_cfa() {
    am::CfaParams cfa;
    cfa.loadings = MatrixXd::Zero(4, 2);
    cfa.loadings(0, 0) = 0.8;
    cfa.loadings(1, 0) = 0.6;
    cfa.loadings(2, 1) = 0.7;
    cfa.loadings(3, 1) = 0.5;
    cfa.factor_corr = (MatrixXd(2, 2) << 1.0, 0.3, 0.3, 1.0).finished();
    cfa.uniquenesses = (VectorXd(4) << 0.4, 0.6, 0.5, 0.7).finished();
    cfa.factor_means = (VectorXd(2) << 0.5, -1.0).finished();
    return cfa;
}

am::EfaParams small_efa() {
    am::EfaParams efa;
    efa.loadings = (MatrixXd(4, 1) << 0.9, -0.2, 0.4, 0.6).finished();
    efa.uniquenesses = VectorXd::Constant(4, 0.85);
    efa.factor_means = VectorXd::Constant(1, 2.0);
    return efa;
}

double z_mean(const am::Dataset& d) {
    return d.truth->cast<double>().mean();
}

}  // namespace

TEST(SampleLkj, OneByOne) {
    am::Rng rng(1);
    EXPECT_EQ(am::sample_lkj(1, 2.0, rng), MatrixXd::Identity(1, 1));
}

TEST(SampleLkj, UniformOffDiagonalAtShapeOne) {
    am::Rng rng(2);
    std::vector<double> r;
    for (int t = 0; t < 10000; ++t) {
        r.push_back(am::sample_lkj(2, 1.0, rng)(0, 1));
    }
    std::sort(r.begin(), r.end());
    double ks = 0.0;
    const auto n = static_cast<double>(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double f = (r[i] + 1.0) / 2.0;
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    EXPECT_LT(ks, 0.05);
}

TEST(SampleLkj, DrawsAreCorrelationMatrices) {
    am::Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const int q = 1 + t % 6;
        const MatrixXd c = am::sample_lkj(q, 0.5 + (t % 4), rng);
        EXPECT_TRUE((c.diagonal().array() == 1.0).all());
        EXPECT_EQ(c, c.transpose());
        EXPECT_EQ(Eigen::LLT<MatrixXd>(c).info(), Eigen::Success);
    }
}

TEST(GenCfaBlock, ZeroLoadingsGiveUniquenessCovariance) {
    am::CfaParams cfa = small_cfa();
    cfa.loadings.setZero();
    am::Rng rng(4);
    const MatrixXd s = sample_cov(am::gen_cfa_block(cfa, 100000, rng));
    EXPECT_LE((s - MatrixXd(cfa.uniquenesses.asDiagonal())).cwiseAbs().maxCoeff(), 0.02);
}

TEST(GenCfaBlock, CovarianceAndMeanConverge) {
    const am::CfaParams cfa = small_cfa();
    am::Rng rng(5);
    const MatrixXd rows = am::gen_cfa_block(cfa, 100000, rng);
    EXPECT_LE((sample_cov(rows) - am::assemble_cfa_cov(cfa)).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_LE((rows.colwise().mean().transpose() - cfa.loadings * cfa.factor_means).cwiseAbs().maxCoeff(), 0.03);
}

TEST(GenCfaBlock, SeedReproducible) {
    am::Rng a(6);
    am::Rng b(6);
    EXPECT_EQ(am::gen_cfa_block(small_cfa(), 50, a), am::gen_cfa_block(small_cfa(), 50, b));
}

TEST(GenEfaBlock, ZeroLoadingsGiveUniquenessCovariance) {
    am::EfaParams efa = small_efa();
    efa.loadings.setZero();
    am::Rng rng(7);
    const MatrixXd s = sample_cov(am::gen_efa_block(efa, 100000, rng));
    EXPECT_LE((s - 0.85 * MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(GenEfaBlock, CovarianceAndMeanConverge) {
    const am::EfaParams efa = small_efa();
    am::Rng rng(8);
    const MatrixXd rows = am::gen_efa_block(efa, 100000, rng);
    EXPECT_LE((sample_cov(rows) - am::assemble_efa_cov(efa)).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_LE((rows.colwise().mean().transpose() - efa.loadings * efa.factor_means).cwiseAbs().maxCoeff(), 0.03);
}

TEST(GenEfaBlock, SeedReproducible) {
    am::Rng a(9);
    am::Rng b(9);
    EXPECT_EQ(am::gen_efa_block(small_efa(), 50, a), am::gen_efa_block(small_efa(), 50, b));
}

TEST(GenStudy1, MembershipMatchesWeights) {
    am::Study1Config cfg;
    cfg.c = 2;
    cfg.pi = 0.6;
    cfg.seed = 10;
    const am::SimulatedData sim = am::gen_study1(cfg);
    const VectorXd pi = am::mixture_weights(sim.data.design, sim.reg);
    const double expected = pi.mean();
    const double se = std::sqrt((pi.array() * (1.0 - pi.array())).sum()) / cfg.n;
    EXPECT_LE(std::abs(z_mean(sim.data) - expected), 3.0 * se);
}

TEST(GenStudy1, DesignColumns) {
    am::Study1Config cfg;
    cfg.seed = 11;
    cfg.c = 1;
    const am::SimulatedData one = am::gen_study1(cfg);
    EXPECT_EQ(one.data.design.cols(), 2);
    EXPECT_TRUE((one.data.design.col(1).array() == 0.0 || one.data.design.col(1).array() == 1.0).all());
    cfg.c = 2;
    const am::SimulatedData two = am::gen_study1(cfg);
    EXPECT_EQ(two.data.design.cols(), 3);
    EXPECT_TRUE((two.data.design.col(2).array().abs() <= 5.0).all());
    EXPECT_TRUE((two.data.design.col(0).array() == 1.0).all());
}

TEST(GenStudy1, MostlyAberrantAtFivePercent) {
    am::Study1Config cfg;
    cfg.pi = 0.05;
    cfg.c = 1;
    cfg.seed = 12;
    const am::SimulatedData sim = am::gen_study1(cfg);
    const double expected = am::mixture_weights(sim.data.design, sim.reg).mean();
    EXPECT_LE(std::abs(z_mean(sim.data) - expected), 3.0 * std::sqrt(0.05 * 0.95 / cfg.n) + 0.02);
    EXPECT_LT(z_mean(sim.data), 0.15);
}

TEST(GenStudy1, ShapesAndTruthRoundTrip) {
    am::Study1Config cfg;
    cfg.n = 200;
    cfg.p = 12;
    cfg.q = 3;
    cfg.k = 2;
    cfg.c = 2;
    cfg.seed = 13;
    const am::SimulatedData sim = am::gen_study1(cfg);
    EXPECT_EQ(sim.data.responses.rows(), 200);
    EXPECT_EQ(sim.data.responses.cols(), 12);
    EXPECT_EQ(sim.data.design.rows(), 200);
    EXPECT_EQ(sim.data.truth->size(), 200);
    EXPECT_TRUE((sim.cfa.uniquenesses.array() > 0.0).all());
    EXPECT_LE((am::assemble_cfa_cov(sim.cfa).diagonal().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_TRUE((sim.efa->uniquenesses.array() == 0.85).all());
    EXPECT_TRUE((sim.efa->factor_means.array() >= 0.5).all() && (sim.efa->factor_means.array() <= 5.0).all());

    am::MixtureParams params{sim.cfa, *sim.efa, sim.reg};
    const am::json j = am::params_to_json(params, sim.structure);
    const am::MixtureParams back = am::params_from_json(am::json::parse(j.dump()));
    EXPECT_EQ(back.cfa.loadings, params.cfa.loadings);
    EXPECT_EQ(back.cfa.factor_corr, params.cfa.factor_corr);
    EXPECT_EQ(back.cfa.uniquenesses, params.cfa.uniquenesses);
    EXPECT_EQ(back.efa.loadings, params.efa.loadings);
    EXPECT_EQ(back.efa.factor_means, params.efa.factor_means);
    EXPECT_EQ(back.reg.beta, params.reg.beta);
    EXPECT_EQ(am::structure_from_json(j), sim.structure);
}

TEST(GenStudy1, RejectsBadConfig) {
    am::Study1Config cfg;
    cfg.pi = 1.0;
    EXPECT_THROW(am::gen_study1(cfg), am::InvalidArgument);
    cfg = {};
    cfg.k = cfg.p;
    EXPECT_THROW(am::gen_study1(cfg), am::InvalidArgument);
}

TEST(Discretize, ThresholdRule) {
    const std::vector<double> tau{-1.0, 0.0, 1.0};
    MatrixXd v(1, 6);
    v << -5.0, -1.0, -0.5, 0.0, 1.0, 7.0;
    const MatrixXi c = am::discretize(v, 4, tau);
    EXPECT_EQ(c(0, 0), 1);
    EXPECT_EQ(c(0, 1), 1);  // a tie goes down
    EXPECT_EQ(c(0, 2), 2);
    EXPECT_EQ(c(0, 3), 2);
    EXPECT_EQ(c(0, 4), 3);
    EXPECT_EQ(c(0, 5), 4);
}

TEST(Discretize, Monotone) {
    am::Rng rng(14);
    const std::vector<double> tau = am::default_thresholds(11);
    ASSERT_EQ(tau.size(), 10U);
    VectorXd v = VectorXd::NullaryExpr(500, [&] { return rng.normal(0.0, 2.0); });
    std::sort(v.data(), v.data() + v.size());
    const MatrixXi c = am::discretize(v.transpose(), 11, tau);
    for (int i = 1; i < c.cols(); ++i) {
        EXPECT_LE(c(0, i - 1), c(0, i));
    }
    EXPECT_THROW(am::discretize(v.transpose(), 3, {1.0, 0.0}), am::InvalidArgument);
}

TEST(SgrMatrix, LastRowAndNoFaking) {
    const MatrixXd r = am::sgr_replacement_matrix(11, 4.0, 1.5, 1.0);
    EXPECT_EQ(r.row(10).sum(), 1.0);
    EXPECT_EQ(r(10, 10), 1.0);
    EXPECT_EQ(am::sgr_replacement_matrix(11, 4.0, 1.5, 0.0), MatrixXd::Identity(11, 11));
}

TEST(SgrMatrix, StructureOfRows) {
    const int m = 7;
    const MatrixXd r = am::sgr_replacement_matrix(m, 1.5, 4.0, 0.5);
    for (int row = 0; row + 1 < m; ++row) {
        EXPECT_EQ(r(row, row), 0.5);
        for (int col = 0; col < row; ++col) EXPECT_EQ(r(row, col), 0.0);
        EXPECT_NEAR(r.row(row).sum(), 1.0, 1e-12);
    }
}

TEST(SgrMatrix, SymmetricTwoCategorySplit) {
    for (double g : {0.5, 2.0, 4.0}) {
        const MatrixXd r = am::sgr_replacement_matrix(11, g, g, 1.0);
        EXPECT_NEAR(r(8, 9), 0.5, 1e-12);
        EXPECT_NEAR(r(8, 10), 0.5, 1e-12);
    }
}

TEST(SgrMatrix, RejectsBadArguments) {
    EXPECT_THROW(am::sgr_replacement_matrix(11, 0.0, 1.0, 1.0), am::InvalidArgument);
    EXPECT_THROW(am::sgr_replacement_matrix(11, 1.0, 1.0, 1.5), am::InvalidArgument);
    EXPECT_THROW(am::sgr_replacement_matrix(1, 1.0, 1.0, 0.5), am::InvalidArgument);
}

TEST(PerturbFaking, NoFakingIsIdentity) {
    am::Rng rng(15);
    const MatrixXi y = MatrixXi::NullaryExpr(20, 5, [&] { return rng.uniform_int(1, 11); });
    std::vector<int> rows(20);
    std::iota(rows.begin(), rows.end(), 0);
    EXPECT_EQ(am::perturb_faking(y, rows, 11, 4.0, 1.5, 0.0, rng), y);
}

TEST(PerturbFaking, FakingGoodNeverDecreases) {
    am::Rng rng(16);
    const MatrixXi y = MatrixXi::NullaryExpr(200, 6, [&] { return rng.uniform_int(1, 11); });
    const std::vector<int> rows{0, 3, 5, 7, 100, 150};
    const MatrixXi out = am::perturb_faking(y, rows, 11, 4.0, 1.5, 1.0, rng);
    EXPECT_TRUE((out.array() >= y.array()).all());
    for (int i = 0; i < y.rows(); ++i) {
        if (std::find(rows.begin(), rows.end(), i) == rows.end()) {
            EXPECT_EQ(out.row(i), y.row(i));
        } else {
            for (int j = 0; j < y.cols(); ++j) {
                if (y(i, j) < 11) EXPECT_GT(out(i, j), y(i, j));
            }
        }
    }
}

TEST(PerturbFaking, ExtremeShiftsMoreThanSlight) {
    am::Rng base(17);
    const MatrixXi y = MatrixXi::NullaryExpr(1000, 10, [&] { return base.uniform_int(1, 11); });
    std::vector<int> rows(1000);
    std::iota(rows.begin(), rows.end(), 0);
    am::Rng a(18);
    am::Rng b(18);
    const double extreme = am::perturb_faking(y, rows, 11, 4.0, 1.5, 1.0, a).cast<double>().mean();
    const double slight = am::perturb_faking(y, rows, 11, 1.5, 4.0, 1.0, b).cast<double>().mean();
    EXPECT_GT(extreme, slight);
}

TEST(GenStudy2, FakingShareAndShift) {
    am::Study2Config cfg;
    cfg.n = 1000;
    cfg.p = 16;
    cfg.pi = 0.6;
    cfg.seed = 19;
    const am::SimulatedData sim = am::gen_study2(cfg);
    const auto& truth = *sim.data.truth;
    const double faking = static_cast<double>((truth.array() == 0).count());
    EXPECT_LE(std::abs(faking - 400.0), 3.0 * std::sqrt(1000.0 * 0.6 * 0.4));
    double honest_mean = 0.0;
    double faking_mean = 0.0;
    for (int i = 0; i < cfg.n; ++i) {
        (truth(i) == 1 ? honest_mean : faking_mean) += sim.data.responses.row(i).mean();
    }
    honest_mean /= static_cast<double>(cfg.n) - faking;
    faking_mean /= faking;
    EXPECT_GT(faking_mean - honest_mean, 0.5);
    EXPECT_TRUE((sim.data.responses.array() >= 1.0).all() && (sim.data.responses.array() <= 11.0).all());
    EXPECT_FALSE(sim.efa.has_value());
}

TEST(GenStudy2, HonestRowsMatchUnperturbedDraw) {
    // Same seed without faking: honest rows must be unchanged.
    am::Study2Config cfg;
    cfg.n = 300;
    cfg.pi = 0.6;
    cfg.seed = 20;
    const am::SimulatedData faked = am::gen_study2(cfg);
    cfg.kappa = 0.0;
    const am::SimulatedData plain = am::gen_study2(cfg);
    ASSERT_EQ(*faked.data.truth, *plain.data.truth);
    for (int i = 0; i < cfg.n; ++i) {
        if ((*faked.data.truth)(i) == 1) {
            EXPECT_EQ(faked.data.responses.row(i), plain.data.responses.row(i));
        }
    }
}

TEST(ScoreRecovery, ExactAndShifted) {
    const am::CfaParams truth = small_cfa();
    const am::FactorStructure s(((truth.loadings.array() != 0.0).cast<int>()).matrix());
    am::Recovery r = am::score_recovery(truth, truth, s, 0.6, 0.6);
    EXPECT_EQ(r.loadings.bias, 0.0);
    EXPECT_EQ(r.loadings.rmse, 0.0);
    EXPECT_EQ(r.uniquenesses.rmse, 0.0);
    EXPECT_EQ(r.factor_corr.rmse, 0.0);
    EXPECT_EQ(r.factor_means.rmse, 0.0);
    EXPECT_EQ(r.pi.rmse, 0.0);

    am::CfaParams est = truth;
    for (int j = 0; j < 4; ++j) {
        for (int f = 0; f < 2; ++f) {
            if (s.is_free(j, f)) est.loadings(j, f) += 0.1;
        }
    }
    r = am::score_recovery(truth, est, s, 0.6, 0.6);
    EXPECT_NEAR(r.loadings.bias, 0.1, 1e-12);
    EXPECT_NEAR(r.loadings.rmse, 0.1, 1e-12);
}

TEST(ScoreRecovery, SignFlippedColumnIsAligned) {
    const am::CfaParams truth = small_cfa();
    const am::FactorStructure s(((truth.loadings.array() != 0.0).cast<int>()).matrix());
    am::CfaParams est = truth;
    est.loadings.col(1) *= -1.0;
    est.factor_means(1) *= -1.0;
    est.factor_corr(0, 1) = est.factor_corr(1, 0) = -est.factor_corr(0, 1);
    const am::Recovery r = am::score_recovery(truth, est, s, 0.6, 0.6);
    EXPECT_NEAR(r.loadings.rmse, 0.0, 1e-15);
    EXPECT_NEAR(r.factor_corr.rmse, 0.0, 1e-15);
    EXPECT_NEAR(r.factor_means.rmse, 0.0, 1e-15);
}
