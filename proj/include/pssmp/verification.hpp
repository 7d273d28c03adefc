#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pssmp/errors.hpp"
#include "pssmp/factorization.hpp"
#include "pssmp/montecarlo.hpp"

namespace pssmp::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    /// False when the check does not apply to the model (e.g. J-law checks in infinite variation).
    bool applicable = true;
    std::string detail;
    std::vector<mc::EstimatorReport> reports;
};

struct Options {
    double y = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    /// Upper level for first-passage and stopped-martingale checks, as a multiple of y.
    double d_factor = 2.0;
    std::size_t n = 200000;
    std::uint64_t seed = 1;
    double z_max = 3.5;
    mc::SimulationOptions sim{};
};

/// Extra tolerance on MC-vs-analytic gaps from the Euler scheme: 5 sqrt(h) in infinite variation.
inline double bias_allowance(const PssmpModel& m, const mc::SimulationOptions& sim) {
    return m.variation() == Variation::Infinite ? 5.0 * std::sqrt(sim.step) : 0.0;
}

inline std::string format(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline bool all_within(const std::vector<mc::EstimatorReport>& reports, double z_max) {
    return std::all_of(reports.begin(), reports.end(), [&](const auto& r) { return r.within(z_max); });
}

inline std::string worst_z(const std::vector<mc::EstimatorReport>& reports) {
    double worst = 0.0;
    for (const auto& r : reports)
        if (r.z) worst = std::max(worst, std::abs(*r.z));
    return "max |z| = " + format(worst);
}

inline CheckResult not_applicable(std::string name, std::string why) {
    CheckResult r;
    r.name = std::move(name);
    r.passed = true;
    r.applicable = false;
    r.detail = std::move(why);
    return r;
}

/// beta = 0 / gamma = 0 reductions of every transform on a (y, d) grid.
inline CheckResult check_reductions(const Factorization& f, const std::vector<double>& ys,
                                    const std::vector<double>& ds, double tol = 1e-12) {
    double worst = 0.0;
    const double phi_p = f.model().phi_p();
    const bool extension = !f.model().degenerate();
    for (double y : ys) {
        for (double d : ds) {
            const double lo = std::min(y, d);
            const double hi = std::max(y, d);
            const double ratio = std::pow(lo / hi, phi_p);
            worst = std::max(worst, std::abs(f.big_M(lo, hi, 0.0) - (1.0 - ratio)));
            worst = std::max(worst, std::abs(f.exit_lt_Y(lo, hi, 0.0) - ratio));
            worst = std::max(worst, std::abs(f.laplace_L_given_sup(lo, hi, 0.0) - 1.0));
        }
        worst = std::max(worst, std::abs(f.big_N(y, 0.0) - 1.0));
        if (extension) worst = std::max(worst, std::abs(f.laplace_T0(y, 0.0, T0Method::Extension) - 1.0));
        worst = std::max(worst, std::abs(f.laplace_T0(y, 0.0, T0Method::Integrated) - 1.0));
    }
    return {"zero-rate reductions", worst < tol, true, "max abs error " + format(worst), {}};
}

/// Extension and integrated routes for the absorption-time transform.
inline CheckResult check_two_route(const Factorization& f, const std::vector<double>& ys,
                                   const std::vector<double>& betas, double tol = 1e-6) {
    if (f.model().degenerate())
        return not_applicable("two-route laplace_T0", "extension formula undefined on the degeneracy seam");
    double worst = 0.0;
    for (double y : ys) {
        for (double b : betas) {
            const double e = f.laplace_T0(y, b, T0Method::Extension);
            const double i = f.laplace_T0(y, b, T0Method::Integrated);
            worst = std::max(worst, std::abs(e - i) / std::abs(e));
        }
    }
    return {"two-route laplace_T0", worst < tol, true, "max relative gap " + format(worst), {}};
}

/// Total mass of the law of J and its split into atom and continuous part.
inline CheckResult check_jump_law(const Factorization& f, double tol = 1e-9) {
    if (f.model().variation() != Variation::Finite)
        return not_applicable("law of J", "J = 1 almost surely in infinite variation");
    const auto law = f.jump_law();
    const double total = law.integrate([](double) { return 1.0; });
    const double closed = law.atom_mass() + law.continuous_mass();
    const double gap = std::max(std::abs(total - 1.0), std::abs(closed - 1.0));
    return {"law of J mass", gap < tol, true, "max |mass - 1| " + format(gap), {}};
}

/// Fixed menus of bounded test functions.
struct TestFunction {
    std::string label;
    std::function<double(double)> g;
};
struct TestFunction2 {
    std::string label;
    std::function<double(double, double)> h;
    double sup_max;  // h vanishes beyond this supremum
};

inline std::vector<TestFunction> sup_menu(double y) {
    return {{"1", [](double) { return 1.0; }},
            {"y/sup", [y](double s) { return y / s; }},
            {"1{sup<=2y}", [y](double s) { return s <= 2.0 * y ? 1.0 : 0.0; }}};
}
inline std::vector<TestFunction2> residual_menu(double y) {
    return {{"1{sup<=2y}", [y](double s, double) { return s <= 2.0 * y ? 1.0 : 0.0; }, 2.0 * y},
            {"J*1{sup<=2y}", [y](double s, double j) { return s <= 2.0 * y ? j : 0.0; }, 2.0 * y},
            {"J^2*1{sup<=3y}", [y](double s, double j) { return s <= 3.0 * y ? j * j : 0.0; }, 3.0 * y}};
}
inline std::vector<TestFunction> jump_menu() {
    return {{"J", [](double j) { return j; }},
            {"J^2", [](double j) { return j * j; }},
            {"1{J<1/2}", [](double j) { return j < 0.5 ? 1.0 : 0.0; }}};
}

/// MC against the factorization: e^{-beta T0}, e^{-gamma L} g(sup), e^{-beta(T0-L)} h(sup, J),
/// test functions of J, and e^{-beta T0} on {sup < d}, e^{-gamma T_d^+}.
inline CheckResult check_mc_transforms(const Factorization& f, const Options& o) {
    using namespace mc::functionals;
    const auto& m = f.model();
    const double y = o.y;
    const double d = o.d_factor * y;
    const bool finite = m.variation() == Variation::Finite;
    std::vector<mc::Functional> fs;
    std::vector<double> analytic;
    fs.push_back(lt_T0(o.beta));
    analytic.push_back(f.laplace_T0(y, o.beta, T0Method::Integrated));
    for (const auto& t : sup_menu(y)) {
        fs.push_back(lt_L(o.gamma, t.g, t.label));
        analytic.push_back(f.expected_lt_L(y, o.gamma, t.g));
    }
    for (const auto& t : residual_menu(y)) {
        fs.push_back(lt_residual(o.beta, t.h, t.label));
        analytic.push_back(f.expected_lt_residual(y, o.beta, t.h, t.sup_max, {2.0 * y}));
    }
    if (finite) {
        const auto law = f.jump_law();
        for (const auto& t : jump_menu()) {
            fs.push_back(of_J(t.g, t.label));
            analytic.push_back(law.integrate(t.g));
        }
    }
    fs.push_back(lt_T0_below(o.beta, d));
    analytic.push_back(f.big_M(y, d, o.beta));
    fs.push_back(lt_first_passage(o.gamma, d));
    analytic.push_back(f.exit_lt_Y(y, d, o.gamma));

    auto reports = mc::estimate_many(m, y, fs, o.n, o.seed, o.sim);
    const double allowance = bias_allowance(m, o.sim);
    for (std::size_t i = 0; i < reports.size(); ++i) reports[i].compare(analytic[i], allowance);
    return {"MC factorization transforms", all_within(reports, o.z_max), true, worst_z(reports), reports};
}

/// Empirical mean of J in infinite variation, where J = 1 almost surely.
inline CheckResult check_J_near_one(const PssmpModel& m, const Options& o, double threshold = 0.99) {
    if (m.variation() != Variation::Infinite)
        return not_applicable("J concentrated at 1", "J has a non-trivial law in finite variation");
    auto r = mc::estimate(m, o.y, mc::functionals::of_J([](double j) { return j; }, "J"), o.n, o.seed, o.sim);
    return {"J concentrated at 1", r.estimate > threshold, true, "mean J " + format(r.estimate), {r}};
}

/// J- and I-martingales at fixed Lamperti times.
inline CheckResult check_martingales(const Factorization& f, const Options& o,
                                     const std::vector<double>& times = {0.5, 1.0, 2.0},
                                     const std::vector<double>& times_I = {0.5, 1.0}) {
    const auto& m = f.model();
    const auto& series = f.series();
    const double allowance = bias_allowance(m, o.sim);
    std::vector<mc::EstimatorReport> reports;
    if (!m.degenerate()) {
        auto J = [&](double x) { return double(series.eval_J(x)); };
        auto rj = mc::martingale_check(m, o.y, o.beta, times, J, o.n, o.seed, o.sim);
        for (auto& r : rj) reports.push_back(r.compare(*r.analytic, allowance));
    }
    auto I = [&](double x) { return double(series.eval_I(x)); };
    auto ri = mc::martingale_check_I(m, o.y, o.d_factor * o.y, o.gamma, times_I, I, o.n, o.seed, o.sim);
    for (auto& r : ri) reports.push_back(r.compare(*r.analytic, allowance));
    return {"martingales", all_within(reports, o.z_max), true, worst_z(reports), reports};
}

inline CheckResult check_moment_recursion(const Factorization& f, const Options& o, int n_mom = 1, double s = 1.0) {
    auto r = mc::moment_recursion_check(f.model(), o.y, n_mom, s, o.n, o.seed, o.sim);
    r.compare(0.0, bias_allowance(f.model(), o.sim));
    return {"moment recursion", r.within(o.z_max), true, worst_z({r}), {r}};
}

inline CheckResult check_sup_moments(const Factorization& f, const Options& o,
                                     const std::vector<double>& ks = {0.0, 1.0, 2.0}) {
    std::vector<mc::Functional> fs;
    for (double k : ks) fs.push_back(mc::functionals::sup_moment(k, o.gamma));
    auto reports = mc::estimate_many(f.model(), o.y, fs, o.n, o.seed, o.sim);
    const double allowance = bias_allowance(f.model(), o.sim);
    bool exact = true;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const double value = f.sup_moment_transform(o.y, ks[i], o.gamma);
        reports[i].functional += " k=" + format(ks[i]);
        reports[i].compare(value, allowance);
        if (ks[i] == 0.0) exact = exact && value == 1.0;
    }
    return {"supremum moments", exact && all_within(reports, o.z_max), true, worst_z(reports), reports};
}

/// Kolmogorov-Smirnov test of log(sup / y) against exponential(Phi(p)).
inline CheckResult check_sup_law(const PssmpModel& m, const Options& o, std::size_t n, double level = 1e-3) {
    if (m.variation() != Variation::Finite)
        return not_applicable("exponential supremum law", "the Euler scheme biases the supremum");
    const auto samples = mc::sample_functionals(m, o.y, n, o.seed, o.sim);
    std::vector<double> logs;
    logs.reserve(samples.size());
    for (const auto& s : samples) logs.push_back(std::log(s.sup / o.y));
    const auto ks = mc::ks_exponential(std::move(logs), m.phi_p(), level);
    return {"exponential supremum law", ks.passed(), true,
            "KS " + format(ks.statistic) + " vs critical " + format(ks.critical), {}};
}

/// Limiting formulas on the seam against the generic formulas at alpha (1 +- eps).
inline CheckResult check_seam(const PssmpModel& m, double y = 0.5, double d = 1.0, double beta = 1.0,
                              double eps = 1e-4, double tol = 1e-3) {
    if (!m.degenerate()) return not_applicable("degeneracy seam", "model is not on the seam");
    const Factorization limit(m);
    const double M0 = limit.big_M(y, d, beta);
    const double N0 = limit.big_N(y, beta);
    double worst = 0.0;
    for (double s : {1.0 - eps, 1.0 + eps}) {
        const Factorization near(m.with_alpha(m.alpha() * s));
        worst = std::max(worst, std::abs(near.big_M(y, d, beta) - M0) / std::abs(M0));
        worst = std::max(worst, std::abs(near.big_N(y, beta) - N0) / std::abs(N0));
    }
    return {"degeneracy seam continuity", worst < tol, true, "max relative gap " + format(worst), {}};
}

/// Every model-generic check at the given options.
inline std::vector<CheckResult> run_all(const PssmpModel& m, const Options& o) {
    const Factorization f(m);
    const std::vector<double> ys{0.5 * o.y, o.y, 2.0 * o.y};
    std::vector<CheckResult> out;
    out.push_back(check_reductions(f, ys, {o.y, 2.0 * o.y, 4.0 * o.y}));
    out.push_back(check_two_route(f, ys, {0.1 * o.beta, o.beta, 10.0 * o.beta}));
    out.push_back(check_jump_law(f));
    out.push_back(check_seam(m));
    out.push_back(check_mc_transforms(f, o));
    out.push_back(check_J_near_one(m, o));
    out.push_back(check_martingales(f, o));
    out.push_back(check_moment_recursion(f, o));
    out.push_back(check_sup_moments(f, o));
    out.push_back(check_sup_law(m, o, std::min<std::size_t>(o.n, 100000)));
    return out;
}

}  // namespace pssmp::verify
