#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pssmp/reference_models.hpp"
#include "pssmp/series.hpp"

namespace {

using namespace pssmp;

TEST(Series, ModelBCoefficients) {
    const SeriesTable s(reference::model_B());
    EXPECT_NEAR(double(s.a(0)), 1.0, 0.0);
    EXPECT_NEAR(double(s.a(1)), 1.0 / 3.0, 1e-16);
    EXPECT_NEAR(double(s.a(2)), 1.0 / 45.0, 1e-17);
    EXPECT_NEAR(double(s.b(1)), 1.0 / 8.0, 1e-16);
    EXPECT_NEAR(double(s.b(2)), 1.0 / 192.0, 1e-17);
}

TEST(Series, SeriesMatchHighPrecisionValues) {
    const SeriesTable f(reference::model_F());
    const SeriesTable b(reference::model_B());
    EXPECT_NEAR(double(f.eval_J(0.5)), 2.8856384333361583, 1e-14);
    EXPECT_NEAR(double(f.eval_I(0.5)), 1.3120649882168034, 1e-14);
    EXPECT_NEAR(double(f.eval_J(1.0)), 5.754028027685501, 1e-13);
    EXPECT_NEAR(double(f.eval_I(1.0)), 1.7185623972888617, 1e-14);
    EXPECT_NEAR(double(f.eval_J(5.0)), 162.4694978635943, 1e-11);
    EXPECT_NEAR(double(f.eval_I(5.0)), 14.279296758008445, 1e-12);
    EXPECT_NEAR(double(b.eval_J(1.0)), 1.3562006568103824, 1e-14);
    EXPECT_NEAR(double(b.eval_I(1.0)), 1.1303182079849701, 1e-14);
    EXPECT_NEAR(double(b.eval_J(5.0)), 3.3082156534573169, 1e-14);
    EXPECT_NEAR(double(b.eval_I(5.0)), 1.7696558082696595, 1e-14);
}

TEST(Series, ValueAtZero) {
    const SeriesTable f(reference::model_F());
    EXPECT_EQ(double(f.eval_J(0.0)), 1.0);
    EXPECT_EQ(double(f.eval_I(0.0)), 1.0);
    EXPECT_EQ(double(f.eval_kJ(0.0)), 0.0);
    EXPECT_EQ(double(f.eval_kI(0.0)), 0.0);
}

TEST(Series, IndexWeightedSeriesIsDerivative) {
    const SeriesTable f(reference::model_F());
    const long double x = 2.0L;
    const long double h = 1e-5L;
    const long double dJ = (f.eval_J(x + h) - f.eval_J(x - h)) / (2 * h);
    const long double dI = (f.eval_I(x + h) - f.eval_I(x - h)) / (2 * h);
    EXPECT_NEAR(double(f.eval_kJ(x)), double(x * dJ), 1e-7);
    EXPECT_NEAR(double(f.eval_kI(x)), double(x * dI), 1e-7);
}

TEST(Series, TailConstants) {
    EXPECT_NEAR(SeriesTable(reference::model_F()).const_C(), 3.09116512977266, 1e-12);
    EXPECT_NEAR(SeriesTable(reference::model_B()).const_C(), std::numbers::pi / 4.0, 1e-12);
}

TEST(Series, ExtensionDecays) {
    const SeriesTable f(reference::model_F());
    double prev = f.eval_extension(0.0);
    EXPECT_NEAR(prev, 1.0, 1e-14);
    for (double x : {1.0, 4.0, 16.0, 40.0}) {
        const double v = f.eval_extension(x);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_NEAR(f.eval_extension(40.0), 0.0275614828958524, 1e-13);
}

TEST(Series, DegenerateModelRestrictsJ) {
    const SeriesTable s(reference::model_B(1.0, 1.0));
    EXPECT_EQ(s.a_defined(), 1u);
    EXPECT_THROW((void)s.const_C(), Degenerate);
    EXPECT_THROW((void)s.eval_J(1.0), Degenerate);
    EXPECT_EQ(double(s.eval_J_head(3.0, 1)), 1.0);
    EXPECT_NEAR(double(s.b(1)), 1.0 / 3.0, 1e-16);
}

TEST(Series, RejectsNegativeArgument) {
    const SeriesTable f(reference::model_F());
    EXPECT_THROW((void)f.eval_extension(-1.0), DomainError);
}

}  // namespace
