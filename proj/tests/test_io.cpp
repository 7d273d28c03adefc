#include <gtest/gtest.h>

#include <string>

#include "pssmp/io.hpp"
#include "pssmp/reference_models.hpp"

namespace {

using namespace pssmp;

TEST(Io, ParsesModelF) {
    const auto m = io::parse_model(std::string(R"({"sigma2": 0, "drift": 1,
        "jumps": {"intensity": 1, "size_law": {"type": "exp_neg", "rate": 1}}, "p": 1, "alpha": 2})"));
    EXPECT_NEAR(m.phi_p(), (1.0 + std::sqrt(5.0)) / 2.0, 1e-13);
    EXPECT_EQ(m.variation(), Variation::Finite);
}

TEST(Io, ParsesBrownianWithoutSizeLaw) {
    const auto m = io::parse_model(
        std::string(R"({"sigma2": 2, "drift": 0, "jumps": {"intensity": 0}, "p": 1, "alpha": 2})"));
    EXPECT_EQ(m.variation(), Variation::Infinite);
    EXPECT_NEAR(m.phi_p(), 1.0, 1e-13);
}

TEST(Io, RoundTripsMixture) {
    const std::string text = R"({"sigma2": 0.5, "drift": 1.5, "jumps": {"intensity": 2, "size_law":
        {"type": "mixture", "components": [{"weight": 0.7, "type": "exp_neg", "rate": 2},
                                           {"weight": 0.3, "type": "point_neg", "size": 0.5}]}},
        "p": 0.5, "alpha": 1.5})";
    const auto m = io::parse_model(text);
    const auto again = io::parse_model(io::to_json(m));
    EXPECT_EQ(io::to_json(m), io::to_json(again));
    EXPECT_DOUBLE_EQ(psi(m.levy(), 1.3), psi(again.levy(), 1.3));
    EXPECT_EQ(io::to_json(m)["jumps"]["size_law"]["components"][1]["size"], 0.5);
}

TEST(Io, RejectsMalformedInput) {
    const auto bad = [](const std::string& text) { return [text] { (void)io::parse_model(text); }; };
    EXPECT_THROW(bad("{not json")(), ModelError);
    EXPECT_THROW(bad("[1, 2]")(), ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 2, "drift": 0, "p": 1, "alpha": 2})")(), ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 2, "drift": 0, "jumps": {"intensity": 0}, "p": 1, "alpha": 2, "x": 1})")(),
                 ModelError);
    EXPECT_THROW(bad(R"({"sigma2": "2", "drift": 0, "jumps": {"intensity": 0}, "p": 1, "alpha": 2})")(),
                 ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 0, "drift": 1, "jumps": {"intensity": 1}, "p": 1, "alpha": 2})")(), ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 0, "drift": 1, "jumps": {"intensity": 1,
        "size_law": {"type": "gamma", "rate": 1}}, "p": 1, "alpha": 2})")(),
                 ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 0, "drift": 1, "jumps": {"intensity": 1,
        "size_law": {"type": "exp_neg", "rate": -1}}, "p": 1, "alpha": 2})")(),
                 ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 0, "drift": 1, "jumps": {"intensity": 1, "size_law": {"type": "mixture",
        "components": [{"weight": 0.4, "type": "exp_neg", "rate": 1}]}}, "p": 1, "alpha": 2})")(),
                 ModelError);
    EXPECT_THROW(bad(R"({"sigma2": 2, "drift": 0, "jumps": {"intensity": 0}, "p": 1, "alpha": -2})")(),
                 ModelError);
    EXPECT_THROW((void)io::load_model("/nonexistent/model.json"), ModelError);
}

TEST(Io, ReportJson) {
    mc::EstimatorReport r{"exp(-beta*T0)", 0.4, 0.001, 1000, 7, std::nullopt, std::nullopt};
    auto j = io::to_json(r);
    EXPECT_TRUE(j["analytic"].is_null());
    EXPECT_TRUE(j["z"].is_null());
    r.compare(0.402);
    j = io::to_json(r);
    EXPECT_EQ(j["stderr"], 0.001);
    EXPECT_EQ(j["seed"], 7);
    EXPECT_NEAR(j["z"].get<double>(), -2.0, 1e-9);
}

}  // namespace
