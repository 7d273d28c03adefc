#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pssmp/errors.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/quadrature.hpp"
#include "pssmp/series.hpp"

namespace pssmp {

// ---------------------------------------------------------------------------
// Law of the multiplicative jump J at the overall maximum (finite variation).
// ---------------------------------------------------------------------------

/// Q[g(J)] = [p g(1) + int g(e^z) (1 - e^{Phi(p) z}) nu(dz)] / (Phi(p) d).
class JumpAtMaxLaw {
public:
    explicit JumpAtMaxLaw(const PssmpModel& model, quad::Options opt = {1e-11, 1e-11, 4000})
        : model_(model), opt_(opt) {
        if (model_.variation() != Variation::Finite)
            throw NotFiniteVariation("the law of J is non-degenerate only for finite-variation models");
        normaliser_ = model_.phi_p() * model_.levy().drift();
    }

    [[nodiscard]] double atom_mass() const { return model_.p() / normaliser_; }

    /// Closed form: intensity * (1 - E[e^{Phi(p) jump}]) / (Phi(p) d).
    [[nodiscard]] double continuous_mass() const {
        const auto& jumps = model_.levy().jumps();
        return jumps.intensity * (1.0 - jump_transform(jumps.size_law, model_.phi_p())) / normaliser_;
    }

    [[nodiscard]] double mass() const { return atom_mass() + continuous_mass(); }

    /// E[g(J)].
    template <class G>
    [[nodiscard]] double integrate(G&& g) const {
        const double rate = model_.phi_p();
        return integrate_levy(g(1.0), [&](double z) { return g(std::exp(z)) * -std::expm1(rate * z); });
    }

    /// [p atom_value + int h(z) nu(dz)] / (Phi(p) d): the raw form with the (1 - e^{Phi z})
    /// density factor left to the caller.
    template <class H>
    [[nodiscard]] double integrate_levy(double atom_value, H&& h) const {
        return integrate_levy(atom_value, std::forward<H>(h), opt_);
    }
    template <class H>
    [[nodiscard]] double integrate_levy(double atom_value, H&& h, const quad::Options& opt) const {
        const auto& jumps = model_.levy().jumps();
        double cont = 0.0;
        if (jumps.intensity > 0.0) cont = jumps.intensity * jump_expectation(jumps.size_law, h, opt);
        return (model_.p() * atom_value + cont) / normaliser_;
    }

    template <class Rng>
    [[nodiscard]] double sample(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) * mass() < atom_mass()) return 1.0;
        const auto& law = model_.levy().jumps().size_law;
        for (;;) {
            const double z = sample_jump(law, rng);
            if (unit(rng) < -std::expm1(model_.phi_p() * z)) return std::exp(z);
        }
    }

private:
    PssmpModel model_;
    quad::Options opt_;
    double normaliser_ = 1.0;
};

// ---------------------------------------------------------------------------
// Payoffs for the lookback ("regret") option on the overall maximum.
// ---------------------------------------------------------------------------

struct ConstantPayoff {
    double value = 1.0;
};
/// s^exponent
struct PowerPayoff {
    double exponent = 1.0;
};
/// max(s - strike, 0)
struct CallPayoff {
    double strike = 1.0;
};
/// 1{s > strike}
struct DigitalPayoff {
    double strike = 1.0;
};
/// Piecewise-linear through (s_i, v_i), flat outside [s_0, s_n].
struct TabulatedPayoff {
    std::vector<double> s;
    std::vector<double> v;
};

using Payoff = std::variant<ConstantPayoff, PowerPayoff, CallPayoff, DigitalPayoff, TabulatedPayoff>;

inline void validate(const Payoff& payoff) {
    std::visit(detail::overloaded{
                   [](const ConstantPayoff& c) {
                       if (!(c.value >= 0.0)) throw DomainError("constant payoff must be >= 0");
                   },
                   [](const PowerPayoff& pw) {
                       if (!(pw.exponent >= 0.0) || !std::isfinite(pw.exponent))
                           throw DomainError("power payoff exponent must be finite and >= 0");
                   },
                   [](const CallPayoff&) {},
                   [](const DigitalPayoff&) {},
                   [](const TabulatedPayoff& t) {
                       if (t.s.empty() || t.s.size() != t.v.size())
                           throw DomainError("tabulated payoff needs matching non-empty node lists");
                       for (std::size_t i = 0; i < t.s.size(); ++i) {
                           if (!(t.v[i] >= 0.0)) throw DomainError("tabulated payoff must be >= 0");
                           if (i > 0 && !(t.s[i] > t.s[i - 1]))
                               throw DomainError("tabulated payoff nodes must be strictly increasing");
                           if (i > 0 && t.v[i] < t.v[i - 1])
                               throw DomainError("tabulated payoff must be nondecreasing");
                       }
                   }},
               payoff);
}

inline double payoff_value(const Payoff& payoff, double s) {
    return std::visit(detail::overloaded{[&](const ConstantPayoff& c) { return c.value; },
                                         [&](const PowerPayoff& pw) { return std::pow(s, pw.exponent); },
                                         [&](const CallPayoff& c) { return std::max(s - c.strike, 0.0); },
                                         [&](const DigitalPayoff& d) { return s > d.strike ? 1.0 : 0.0; },
                                         [&](const TabulatedPayoff& t) {
                                             if (s <= t.s.front()) return t.v.front();
                                             if (s >= t.s.back()) return t.v.back();
                                             const auto it = std::upper_bound(t.s.begin(), t.s.end(), s);
                                             const auto i = static_cast<std::size_t>(it - t.s.begin());
                                             const double w = (s - t.s[i - 1]) / (t.s[i] - t.s[i - 1]);
                                             return t.v[i - 1] + w * (t.v[i] - t.v[i - 1]);
                                         }},
                      payoff);
}

/// Exponent g with payoff(s) = O(s^g) as s -> inf.
inline double payoff_growth(const Payoff& payoff) {
    return std::visit(detail::overloaded{[](const ConstantPayoff&) { return 0.0; },
                                         [](const PowerPayoff& pw) { return pw.exponent; },
                                         [](const CallPayoff&) { return 1.0; },
                                         [](const DigitalPayoff&) { return 0.0; },
                                         [](const TabulatedPayoff&) { return 0.0; }},
                      payoff);
}

/// Points where the payoff has a kink or jump.
inline std::vector<double> payoff_kinks(const Payoff& payoff) {
    return std::visit(detail::overloaded{[](const ConstantPayoff&) { return std::vector<double>{}; },
                                         [](const PowerPayoff&) { return std::vector<double>{}; },
                                         [](const CallPayoff& c) { return std::vector<double>{c.strike}; },
                                         [](const DigitalPayoff& d) { return std::vector<double>{d.strike}; },
                                         [](const TabulatedPayoff& t) { return t.s; }},
                      payoff);
}

// ---------------------------------------------------------------------------
// Conditional factorization of the absorption time at the maximum.
// ---------------------------------------------------------------------------

enum class T0Method { Extension, Integrated };

struct FactorizationOptions {
    SeriesOptions series{};
    /// Outer integral over the law of the overall supremum.
    quad::Options outer{1e-10, 1e-9, 4000};
    /// Inner integral over the law of J.
    quad::Options inner{1e-12, 1e-11, 4000};
    /// Relative size of the neglected supremum tail.
    double tail_cut = 1e-17;
    /// Relative tolerance of the two-route check on the absorption-time transform.
    double consistency_tol = 1e-6;
};

/// Evaluates every transform of the factorization for one model. Built once
/// (series table, tail constant), then read-only.
class Factorization {
public:
    explicit Factorization(const PssmpModel& model, FactorizationOptions options = {})
        : options_(options), series_(model, options.series) {}

    [[nodiscard]] const PssmpModel& model() const noexcept { return series_.model(); }
    [[nodiscard]] const SeriesTable& series() const noexcept { return series_; }
    [[nodiscard]] const FactorizationOptions& options() const noexcept { return options_; }

    /// E_{log y}[e^{-beta I_e}; tau^+_{log d} >= e], including the limiting form on the
    /// degeneracy seam Phi(p) = m alpha.
    [[nodiscard]] double big_M(double y, double d, double beta) const {
        check_positive(y, "big_M: y");
        if (y > d) throw DomainError("big_M: need y <= d");
        check_nonneg(beta, "big_M: beta");
        return double(m_value(y, d, beta));
    }

    /// Laplace transform of the post-maximum residual time given the supremum (infinite variation).
    [[nodiscard]] double big_N(double y, double beta) const {
        check_positive(y, "big_N: y");
        check_nonneg(beta, "big_N: beta");
        const auto& m = model();
        const extended x = beta * std::pow(extended(y), extended(m.alpha()));
        const extended alpha = m.alpha();
        const extended phi_p = series_.phi_extended();
        const extended I = series_.eval_I(x);
        const extended kI = series_.eval_kI(x);
        if (auto deg = m.degeneracy()) {
            const auto terms = static_cast<std::size_t>(*deg);
            const extended head = series_.eval_J_head(x, terms);
            const extended k_head = series_.eval_kJ_head(x, terms);
            const extended lead = series_.a(terms - 1) * std::pow(x, extended(terms)) /
                                  (psi_prime_as<extended>(m.levy(), phi_p) * phi_p);
            const extended K = series_.eval_K(x);
            const extended kK = series_.eval_kK(x);
            return double(head + alpha / phi_p * (head * kI / I - k_head) +
                          lead * (alpha * (kK - kI / I * K) - I));
        }
        const extended J = series_.eval_J(x);
        const extended kJ = series_.eval_kJ(x);
        return double(J + alpha / phi_p * (J / I * kI - kJ));
    }

    /// Q_y[e^{-gamma T_d^+}; T_d^+ < inf] = (y/d)^Phi I(gamma y^alpha) / I(gamma d^alpha).
    [[nodiscard]] double exit_lt_Y(double y, double d, double gamma) const {
        check_positive(y, "exit_lt_Y: y");
        if (y > d) throw DomainError("exit_lt_Y: need y <= d");
        check_nonneg(gamma, "exit_lt_Y: gamma");
        return double(std::pow(extended(y) / d, series_.phi_extended()) * i_ratio(y, d, gamma));
    }

    /// Q_y[e^{-gamma L} | sup = s] = I(gamma y^alpha) / I(gamma s^alpha).
    [[nodiscard]] double laplace_L_given_sup(double y, double sup, double gamma) const {
        check_positive(y, "laplace_L_given_sup: y");
        if (sup < y) throw DomainError("laplace_L_given_sup: need sup >= y");
        check_nonneg(gamma, "laplace_L_given_sup: gamma");
        return double(i_ratio(y, sup, gamma));
    }

    [[nodiscard]] JumpAtMaxLaw jump_law() const { return JumpAtMaxLaw(model(), options_.inner); }

    /// Q[e^{-beta (T0 - L)} | sup, J = j].
    [[nodiscard]] double laplace_residual_given(double sup, double j, double beta) const {
        check_positive(sup, "laplace_residual_given: sup");
        check_nonneg(beta, "laplace_residual_given: beta");
        if (!(j > 0.0 && j <= 1.0)) throw DomainError("laplace_residual_given: need j in (0, 1]");
        if (model().variation() == Variation::Infinite) {
            if (j != 1.0) throw DomainError("laplace_residual_given: J = 1 a.s. for infinite variation");
            return std::clamp(big_N(sup, beta), 0.0, 1.0);
        }
        if (j == 1.0) return 1.0;
        const double below = -std::expm1(model().phi_p() * std::log(j));
        return std::clamp(double(m_value(sup * j, sup, beta)) / below, 0.0, 1.0);
    }

    /// Q_y[e^{-beta T0} | sup, J]: product of the pre- and post-maximum factors.
    [[nodiscard]] double laplace_T0_given(double y, double sup, double j, double beta) const {
        return laplace_L_given_sup(y, sup, beta) * laplace_residual_given(sup, j, beta);
    }

    /// E[h(J) Q[e^{-beta (T0 - L)} | sup, J]] for a fixed supremum.
    template <class H>
    [[nodiscard]] double expected_residual(double sup, double beta, H&& h) const {
        if (model().variation() == Variation::Infinite) return h(1.0) * laplace_residual_given(sup, 1.0, beta);
        const auto law = jump_law();
        const DSide side = d_side(sup, beta);
        const double rate = model().phi_p();
        quad::Options opt = options_.inner;
        opt.abs_tol = std::max(opt.abs_tol, side.noise);
        return law.integrate_levy(
            h(1.0),
            [&](double z) {
                const double value = double(m_value_with(sup * std::exp(z), side));
                return h(std::exp(z)) * std::clamp(value, 0.0, -std::expm1(rate * z));
            },
            opt);
    }
    [[nodiscard]] double expected_residual(double sup, double beta) const {
        return expected_residual(sup, beta, [](double) { return 1.0; });
    }

    /// Q_y[e^{-beta T0}].
    [[nodiscard]] double laplace_T0(double y, double beta, T0Method method = T0Method::Extension) const {
        check_positive(y, "laplace_T0: y");
        check_nonneg(beta, "laplace_T0: beta");
        if (method == T0Method::Extension) {
            const double x = beta * std::pow(y, model().alpha());
            return std::clamp(series_.eval_extension(x), 0.0, 1.0);
        }
        return expect_over_sup(
            y,
            [&](double sup) { return laplace_L_given_sup(y, sup, beta) * expected_residual(sup, beta); },
            l_envelope(y, beta, 0.0), {});
    }

    /// Both routes, with a ConsistencyError if they disagree beyond consistency_tol.
    [[nodiscard]] std::pair<double, double> laplace_T0_checked(double y, double beta) const {
        const double ext = laplace_T0(y, beta, T0Method::Extension);
        const double integ = laplace_T0(y, beta, T0Method::Integrated);
        const double gap = std::abs(ext - integ) / std::max(std::abs(ext), std::numeric_limits<double>::min());
        if (gap > options_.consistency_tol)
            throw ConsistencyError("laplace_T0: extension " + std::to_string(ext) + " vs integrated " +
                                   std::to_string(integ));
        return {ext, integ};
    }

    /// int gamma e^{-gamma s} Q_y[sup_{u<=s} Y_u^k] ds.
    [[nodiscard]] double sup_moment_transform(double y, double k, double gamma) const {
        check_positive(y, "sup_moment_transform: y");
        if (!(k >= 0.0)) throw DomainError("sup_moment_transform: need k >= 0");
        if (!(gamma > 0.0)) throw DomainError("sup_moment_transform: need gamma > 0");
        const double base = std::pow(y, k);
        if (k == 0.0) return base;
        const double scale = k / model().phi_p();
        return base + expect_over_sup(
                          y, [&](double sup) { return scale * std::pow(sup, k) * laplace_L_given_sup(y, sup, gamma); },
                          l_envelope(y, gamma, k), {});
    }

    /// Q_y[e^{-r T0} f(sup)] for a nondecreasing, nonnegative payoff f.
    [[nodiscard]] double lookback_price(double y, double r, const Payoff& payoff) const {
        check_positive(y, "lookback_price: y");
        check_nonneg(r, "lookback_price: r");
        validate(payoff);
        const double growth = payoff_growth(payoff);
        if (r == 0.0 && growth >= model().phi_p())
            throw DomainError("lookback_price: payoff growth s^" + std::to_string(growth) +
                              " is not integrable against the supremum tail with r = 0");
        std::vector<double> kinks;
        for (double s : payoff_kinks(payoff))
            if (s > y) kinks.push_back(std::log(s / y));
        return expect_over_sup(
            y,
            [&](double sup) {
                const double f = payoff_value(payoff, sup);
                if (f == 0.0) return 0.0;
                return f * laplace_L_given_sup(y, sup, r) * expected_residual(sup, r);
            },
            l_envelope(y, r, growth), kinks);
    }

    /// Q_y[e^{-gamma L} g(sup)] for g bounded by `g_bound`.
    template <class G>
    [[nodiscard]] double expected_lt_L(double y, double gamma, G&& g, double g_bound = 1.0) const {
        check_positive(y, "expected_lt_L: y");
        check_nonneg(gamma, "expected_lt_L: gamma");
        const auto env = l_envelope(y, gamma, 0.0);
        return expect_over_sup(
            y, [&](double sup) { return g(sup) * laplace_L_given_sup(y, sup, gamma); },
            [&](double t) { return g_bound * env(t); }, {});
    }

    /// Q_y[e^{-beta (T0 - L)} h(sup, J); sup <= sup_max] for bounded h; the residual factor is not
    /// damped in the supremum, so the support must be bounded.
    template <class H>
    [[nodiscard]] double expected_lt_residual(double y, double beta, H&& h, double sup_max,
                                              std::vector<double> sup_breaks = {}) const {
        check_positive(y, "expected_lt_residual: y");
        check_nonneg(beta, "expected_lt_residual: beta");
        if (!std::isfinite(sup_max)) throw DomainError("expected_lt_residual: sup_max must be finite");
        std::vector<double> t_breaks;
        for (double s : sup_breaks)
            if (s > y) t_breaks.push_back(std::log(s / y));
        return expect_over_sup(
            y, [&](double sup) { return expected_residual(sup, beta, [&](double j) { return h(sup, j); }); },
            [](double) { return 1.0; }, t_breaks, sup_max);
    }

    /// E_y[fn(sup)] with log(sup / y) ~ exponential(Phi(p)); `envelope(t)` bounds |fn(y e^t)| and
    /// must be nonincreasing once it drops, it fixes the truncation of the tail.
    /// With a finite `sup_max` only {sup <= sup_max} contributes.
    template <class Fn, class Env>
    [[nodiscard]] double expect_over_sup(double y, Fn&& fn, Env&& envelope, std::vector<double> t_breaks,
                                         double sup_max = std::numeric_limits<double>::infinity()) const {
        const double rate = model().phi_p();
        const double step = 1.0 / rate;
        const double t_limit = std::log(sup_max / y);
        if (!(t_limit > 0.0)) return 0.0;
        const double reference = envelope(0.0);
        double t_max = step;
        for (int i = 1;; ++i) {
            t_max = step * i;
            if (t_max >= t_limit) {
                t_max = t_limit;
                break;
            }
            const double bound = std::exp(-rate * t_max) * envelope(t_max);
            if (bound <= options_.tail_cut * std::max(reference, std::numeric_limits<double>::min())) break;
            if (i > 100000) throw NoConvergence("expect_over_sup: supremum tail does not decay");
        }
        auto breaks = quad::partition(0.0, t_max, step, t_breaks);
        auto integrand = [&](double t) {
            const double w = rate * std::exp(-rate * t);
            return w == 0.0 ? 0.0 : w * fn(y * std::exp(t));
        };
        return quad::integrate(integrand, std::span<const double>(breaks), options_.outer).value;
    }

private:
    static void check_positive(double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive");
    }
    static void check_nonneg(double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be >= 0");
    }

    // I(gamma y^alpha) / I(gamma d^alpha); a denominator beyond the reach of the series means
    // the ratio is below the double range.
    [[nodiscard]] extended i_ratio(double y, double d, double gamma) const {
        const extended alpha = model().alpha();
        const extended top = series_.eval_I(gamma * std::pow(extended(y), alpha));
        try {
            return top / series_.eval_I(gamma * std::pow(extended(d), alpha));
        } catch (const NoConvergence&) {
            if (top < extended(1e300)) return 0.0L;
            throw;
        }
    }

    // Envelope of e^{kt} * I-ratio over the supremum; series overflow means the ratio is negligible.
    [[nodiscard]] std::function<double(double)> l_envelope(double y, double gamma, double growth) const {
        return [this, y, gamma, growth](double t) {
            return (1.0 + std::exp(growth * t)) * double(i_ratio(y, y * std::exp(t), gamma));
        };
    }

    // Quantities of M that depend on the upper level d only.
    struct DSide {
        double d;
        double beta;
        extended x_d;
        extended I_d;
        extended J_d;  // full series, or the head sum_{k<m} on the seam
        extended K_d;  // seam only
        double noise;  // rounding level of M(., d), set by the size of the cancelling terms
    };

    [[nodiscard]] DSide d_side(double d, double beta) const {
        const auto& m = model();
        DSide s{d, beta, beta * std::pow(extended(d), extended(m.alpha())), 0.0L, 0.0L, 0.0L, 0.0};
        s.I_d = series_.eval_I(s.x_d);
        if (auto deg = m.degeneracy()) {
            s.J_d = series_.eval_J_head(s.x_d, static_cast<std::size_t>(*deg));
            s.K_d = series_.eval_K(s.x_d);
        } else {
            s.J_d = series_.eval_J(s.x_d);
        }
        const extended scale = std::max({std::abs(s.J_d), s.I_d, std::abs(s.K_d)});
        s.noise = double(256.0L * std::numeric_limits<extended>::epsilon() * scale);
        return s;
    }

    [[nodiscard]] extended m_value(double y, double d, double beta) const {
        return m_value_with(y, d_side(d, beta));
    }

    [[nodiscard]] extended m_value_with(double y, const DSide& s) const {
        const auto& m = model();
        const extended x_y = s.beta * std::pow(extended(y), extended(m.alpha()));
        const extended I_y = series_.eval_I(x_y);
        const extended i_ratio = I_y / s.I_d;
        const extended weight = std::pow(extended(y) / s.d, series_.phi_extended()) * i_ratio;
        if (auto deg = m.degeneracy()) {
            const auto terms = static_cast<std::size_t>(*deg);
            const extended head_y = series_.eval_J_head(x_y, terms);
            const extended lead = series_.a(terms - 1) * std::pow(x_y, extended(terms)) /
                                  psi_prime_as<extended>(m.levy(), series_.phi_extended());
            const extended K_y = series_.eval_K(x_y);
            return head_y - weight * s.J_d +
                   lead * (std::log(extended(y) / s.d) * I_y - K_y + i_ratio * s.K_d);
        }
        return series_.eval_J(x_y) - weight * s.J_d;
    }

    FactorizationOptions options_;
    SeriesTable series_;
};

}  // namespace pssmp
