#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pssmp/levy_model.hpp"
#include "pssmp/reference_models.hpp"

namespace {

using namespace pssmp;

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

LevyModel mixture_levy() {
    MixtureJumps mix{{{0.7, ExponentialJumps{2.0}}, {0.3, PointMassJumps{0.5}}}};
    return LevyModel(0.0, 1.5, JumpSpec{2.0, mix});
}

TEST(LevyModel, ModelFExponentIsRational) {
    const auto m = reference::model_F().levy();
    for (double l : {0.0, 0.3, 1.0, 2.5, 10.0}) {
        EXPECT_NEAR(psi(m, l), l * l / (1.0 + l), 1e-14 * (1.0 + l));
        EXPECT_NEAR(psi_prime(m, l), l * (l + 2.0) / ((1.0 + l) * (1.0 + l)), 1e-12);
    }
}

TEST(LevyModel, ModelBExponentIsQuadratic) {
    const auto m = reference::model_B().levy();
    EXPECT_DOUBLE_EQ(psi(m, 3.0), 9.0);
    EXPECT_DOUBLE_EQ(psi_prime(m, 3.0), 6.0);
    EXPECT_NEAR(phi(m, 4.0), 2.0, 1e-13);
}

TEST(LevyModel, GoldenRatioRoot) {
    EXPECT_NEAR(phi(reference::model_F().levy(), 1.0), kGolden, 1e-13);
    EXPECT_NEAR(reference::model_F().phi_p(), kGolden, 1e-13);
}

TEST(LevyModel, MixtureMatchesHighPrecisionValues) {
    const auto m = mixture_levy();
    EXPECT_NEAR(psi(m, 0.5), 0.33728046984284292, 1e-13);
    EXPECT_NEAR(psi(m, 1.0), 0.79725172916091339, 1e-13);
    EXPECT_NEAR(psi(m, 3.0), 3.1938780960890579, 1e-13);
    EXPECT_NEAR(psi_prime(m, 0.5), 0.81835976507857854, 1e-12);
    EXPECT_NEAR(psi_prime(m, 3.0), 1.3210609519554711, 1e-12);
    EXPECT_NEAR(phi(m, 0.5), 0.68908440575689499, 1e-12);
    EXPECT_EQ(phi(m, 0.0), 0.0);
}

TEST(LevyModel, PhiIsRightInverseWhenDriftingDown) {
    const LevyModel m(1.0, -1.0, JumpSpec{});
    EXPECT_NEAR(psi_argmin(m), 1.0, 1e-12);
    EXPECT_NEAR(phi(m, 0.0), 2.0, 1e-12);
    for (double q : {0.1, 1.0, 7.0}) EXPECT_NEAR(psi(m, phi(m, q)), q, 1e-11 * (1.0 + q));
}

TEST(LevyModel, VariationClass) {
    EXPECT_EQ(reference::model_F().variation(), Variation::Finite);
    EXPECT_EQ(reference::model_B().variation(), Variation::Infinite);
    EXPECT_EQ(mixture_levy().variation(), Variation::Finite);
}

TEST(LevyModel, AtomAtSupremum) {
    EXPECT_NEAR(at_sup_atom(reference::model_F()), (std::sqrt(5.0) - 1.0) / 2.0, 1e-13);
    EXPECT_EQ(at_sup_atom(reference::model_B()), 0.0);
}

TEST(LevyModel, FirstPassageTransform) {
    const auto m = reference::model_B().levy();
    EXPECT_NEAR(first_passage_lt(m, 0.0, 1.5, 4.0), std::exp(-3.0), 1e-13);
    EXPECT_THROW((void)first_passage_lt(m, 2.0, 1.0, 1.0), DomainError);
}

TEST(LevyModel, LadderExponentsFactorise) {
    const auto model = reference::model_F();
    for (double delta : {0.2, 1.0, 3.0}) {
        const double gamma = 0.7;
        const double product = ladder_kappa(model, gamma, -delta) * ladder_kappa_hat(model, gamma, delta);
        EXPECT_NEAR(product, gamma - psi(model.levy(), delta), 1e-10);
    }
    const double root = phi(model.levy(), 0.7);
    EXPECT_NEAR(ladder_kappa_hat(model, 0.7, root), psi_prime(model.levy(), root), 1e-12);
}

TEST(LevyModel, DegeneracySeam) {
    EXPECT_FALSE(reference::model_B().degenerate());
    const auto seam = reference::model_B(1.0, 1.0);
    ASSERT_TRUE(seam.degenerate());
    EXPECT_EQ(*seam.degeneracy(), 1);
    EXPECT_EQ(*reference::model_B(1.0, 0.5).degeneracy(), 2);
}

TEST(LevyModel, JumpExpectationAndSampling) {
    const auto law = mixture_levy().jumps().size_law;
    const double mean = jump_expectation(law, [](double z) { return z; });
    EXPECT_NEAR(mean, -(0.7 * 0.5 + 0.3 * 0.5), 1e-10);
    EXPECT_NEAR(jump_mean_size(law), 0.5, 1e-14);
    std::mt19937_64 rng(7);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += sample_jump(law, rng);
    EXPECT_NEAR(sum / n, -0.5, 5e-3);
}

TEST(LevyModel, RejectsInvalidModels) {
    EXPECT_THROW(LevyModel(-1.0, 0.0, JumpSpec{}), ModelError);
    EXPECT_THROW(LevyModel(0.0, 1.0, JumpSpec{}), ModelError);
    EXPECT_THROW(LevyModel(0.0, -1.0, JumpSpec{1.0, ExponentialJumps{1.0}}), ModelError);
    EXPECT_THROW(LevyModel(0.0, 1.0, JumpSpec{1.0, ExponentialJumps{0.0}}), ModelError);
    EXPECT_THROW(LevyModel(0.0, 1.0, JumpSpec{1.0, PointMassJumps{-1.0}}), ModelError);
    EXPECT_THROW(LevyModel(0.0, 1.0, JumpSpec{1.0, MixtureJumps{{{0.5, ExponentialJumps{1.0}}}}}), ModelError);
    EXPECT_THROW(PssmpModel(reference::model_B().levy(), -0.5, 2.0), ModelError);
    EXPECT_THROW(PssmpModel(reference::model_B().levy(), 1.0, 0.0), ModelError);
    // p = 0 with an oscillating process gives Phi(0) = 0.
    EXPECT_THROW(PssmpModel(reference::model_B().levy(), 0.0, 1.0), ModelError);
    EXPECT_THROW((void)phi(reference::model_B().levy(), -1.0), DomainError);
}

}  // namespace
