#include <gtest/gtest.h>

#include <cmath>

#include "pssmp/factorization.hpp"
#include "pssmp/reference_models.hpp"

namespace {

using namespace pssmp;

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

class FactorizationTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        F = new Factorization(reference::model_F());
        B = new Factorization(reference::model_B());
    }
    static void TearDownTestSuite() {
        delete F;
        delete B;
    }
    static Factorization* F;
    static Factorization* B;
};

Factorization* FactorizationTest::F = nullptr;
Factorization* FactorizationTest::B = nullptr;

TEST_F(FactorizationTest, ZeroRateReductions) {
    for (const auto* f : {F, B}) {
        const double phi_p = f->model().phi_p();
        for (double y : {0.3, 1.0, 2.0}) {
            for (double d : {2.0, 3.0, 5.0}) {
                EXPECT_NEAR(f->big_M(y, d, 0.0), 1.0 - std::pow(y / d, phi_p), 1e-13);
                EXPECT_NEAR(f->exit_lt_Y(y, d, 0.0), std::pow(y / d, phi_p), 1e-13);
                EXPECT_NEAR(f->laplace_L_given_sup(y, d, 0.0), 1.0, 1e-13);
            }
            EXPECT_NEAR(f->big_N(y, 0.0), 1.0, 1e-13);
            EXPECT_NEAR(f->laplace_T0(y, 0.0), 1.0, 1e-13);
        }
    }
}

TEST_F(FactorizationTest, ExitTransformMatchesHighPrecisionValues) {
    EXPECT_NEAR(F->exit_lt_Y(0.5, 1.0, 1.0), 0.2171877410238197, 1e-13);
    EXPECT_NEAR(B->exit_lt_Y(0.5, 1.0, 1.0), 0.45632159788109077, 1e-13);
}

TEST_F(FactorizationTest, AbsorptionTransformMatchesHighPrecisionValues) {
    EXPECT_NEAR(F->laplace_T0(2.0, 10.0), 0.0275614828958524, 1e-13);
    EXPECT_NEAR(F->laplace_T0(1.0, 1.0), 0.441667871847665, 1e-13);
    EXPECT_NEAR(B->laplace_T0(1.0, 1.0), 0.468450812204292, 1e-13);
}

TEST_F(FactorizationTest, TwoRoutesAgree) {
    for (const auto* f : {F, B}) {
        for (double y : {0.5, 1.0, 2.0}) {
            for (double beta : {0.1, 1.0, 10.0}) {
                const auto [ext, integ] = f->laplace_T0_checked(y, beta);
                EXPECT_NEAR(integ / ext, 1.0, 1e-6) << "y=" << y << " beta=" << beta;
            }
        }
    }
}

TEST_F(FactorizationTest, JumpLawGoldenRatio) {
    const auto law = F->jump_law();
    EXPECT_NEAR(law.atom_mass(), 1.0 / kGolden, 1e-12);
    EXPECT_NEAR(law.continuous_mass(), 1.0 / (kGolden * kGolden), 1e-10);
    EXPECT_NEAR(law.integrate([](double) { return 1.0; }), 1.0, 1e-10);
    EXPECT_THROW((void)B->jump_law(), NotFiniteVariation);
}

TEST_F(FactorizationTest, ResidualTransformBoundsAndLimits) {
    double prev = F->laplace_residual_given(1.0, 0.01, 1.0);
    for (double j = 0.02; j < 1.0; j += 0.01) {
        const double v = F->laplace_residual_given(1.0, j, 1.0);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_LT(std::abs(v - prev), 0.05);
        prev = v;
    }
    EXPECT_EQ(F->laplace_residual_given(1.0, 1.0, 1.0), 1.0);
    EXPECT_NEAR(F->laplace_residual_given(1.0, 0.5, 0.0), 1.0, 1e-13);
    EXPECT_NEAR(B->laplace_residual_given(1.0, 1.0, 1.0), B->big_N(1.0, 1.0), 0.0);
    EXPECT_THROW((void)B->laplace_residual_given(1.0, 0.5, 1.0), DomainError);
    EXPECT_THROW((void)F->laplace_residual_given(1.0, 0.0, 1.0), DomainError);
}

TEST_F(FactorizationTest, ConditionalProductIntegratesToTransform) {
    const double y = 1.0;
    const double beta = 0.7;
    const double direct = F->laplace_T0(y, beta);
    const double via_product = F->expect_over_sup(
        y,
        [&](double sup) {
            return F->jump_law().integrate([&](double j) { return F->laplace_T0_given(y, sup, j, beta); });
        },
        [](double) { return 1.0; }, {}, 30.0);
    EXPECT_NEAR(via_product, direct, 1e-6);
}

TEST_F(FactorizationTest, SupremumMoments) {
    EXPECT_EQ(F->sup_moment_transform(1.0, 0.0, 1.0), 1.0);
    EXPECT_NEAR(F->sup_moment_transform(1.0, 1.0, 1.0), 1.370633, 1e-6);
    EXPECT_NEAR(F->sup_moment_transform(1.0, 2.0, 1.0), 2.006076, 1e-6);
    // gamma -> 0 recovers E[sup^k] = Phi / (Phi - k) y^k for k < Phi.
    EXPECT_NEAR(F->sup_moment_transform(2.0, 1.0, 1e-30), 2.0 * kGolden / (kGolden - 1.0), 1e-6);
    EXPECT_THROW((void)F->sup_moment_transform(1.0, 1.0, 0.0), DomainError);
}

TEST_F(FactorizationTest, LookbackPrices) {
    EXPECT_NEAR(F->lookback_price(1.0, 0.05, ConstantPayoff{1.0}), F->laplace_T0(1.0, 0.05), 1e-9);
    EXPECT_NEAR(F->lookback_price(1.0, 0.0, PowerPayoff{1.0}), kGolden / (kGolden - 1.0), 1e-8);
    EXPECT_NEAR(F->lookback_price(1.0, 0.0, DigitalPayoff{2.0}), std::pow(0.5, kGolden), 1e-9);
    EXPECT_NEAR(F->lookback_price(1.0, 0.05, CallPayoff{1.5}), 0.37927, 1e-5);
    const TabulatedPayoff flat{{1.0, 2.0}, {3.0, 3.0}};
    EXPECT_NEAR(F->lookback_price(1.0, 0.05, flat), 3.0 * F->laplace_T0(1.0, 0.05), 1e-8);
    EXPECT_THROW((void)F->lookback_price(1.0, 0.0, PowerPayoff{2.0}), DomainError);
    EXPECT_THROW((void)F->lookback_price(1.0, 0.05, TabulatedPayoff{{2.0, 1.0}, {0.0, 1.0}}), DomainError);
}

TEST(Factorization, SeamLimitIsContinuous) {
    const auto seam = reference::model_B(1.0, 1.0);
    const Factorization limit(seam);
    const double M0 = limit.big_M(0.5, 1.0, 1.0);
    const double N0 = limit.big_N(0.5, 1.0);
    for (double s : {1.0 - 1e-4, 1.0 + 1e-4}) {
        const Factorization near(seam.with_alpha(s));
        EXPECT_NEAR(near.big_M(0.5, 1.0, 1.0) / M0, 1.0, 1e-3);
        EXPECT_NEAR(near.big_N(0.5, 1.0) / N0, 1.0, 1e-3);
    }
    EXPECT_THROW((void)limit.laplace_T0(1.0, 1.0, T0Method::Extension), Degenerate);
    const double integrated = limit.laplace_T0(1.0, 1.0, T0Method::Integrated);
    EXPECT_GT(integrated, 0.0);
    EXPECT_LT(integrated, 1.0);
}

TEST_F(FactorizationTest, DomainErrors) {
    EXPECT_THROW((void)F->big_M(2.0, 1.0, 1.0), DomainError);
    EXPECT_THROW((void)F->big_M(1.0, 2.0, -1.0), DomainError);
    EXPECT_THROW((void)F->exit_lt_Y(0.0, 1.0, 1.0), DomainError);
    EXPECT_THROW((void)F->laplace_L_given_sup(2.0, 1.0, 1.0), DomainError);
    EXPECT_THROW((void)F->laplace_T0(1.0, std::nan("")), DomainError);
}

}  // namespace
