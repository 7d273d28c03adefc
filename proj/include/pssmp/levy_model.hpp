#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pssmp/errors.hpp"
#include "pssmp/quadrature.hpp"

namespace pssmp {

// ---------------------------------------------------------------------------
// Jump size laws. A jump is always negative: jump = -E with E on (0, inf).
// ---------------------------------------------------------------------------

/// jump = -E, E ~ exponential(rate).
struct ExponentialJumps {
    double rate;
};

/// jump = -size.
struct PointMassJumps {
    double size;
};

using SimpleJumpLaw = std::variant<ExponentialJumps, PointMassJumps>;

/// Finite mixture; weights are probabilities summing to one.
struct MixtureJumps {
    std::vector<std::pair<double, SimpleJumpLaw>> components;
};

using JumpSizeLaw = std::variant<ExponentialJumps, PointMassJumps, MixtureJumps>;

/// Finite-activity jump part: Poisson arrivals at `intensity`, sizes from `size_law`.
struct JumpSpec {
    double intensity = 0.0;
    JumpSizeLaw size_law = ExponentialJumps{1.0};
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate_simple(const SimpleJumpLaw& law) {
    std::visit(overloaded{[](const ExponentialJumps& e) {
                              if (!(e.rate > 0.0) || !std::isfinite(e.rate))
                                  throw ModelError("exponential jump rate must be positive and finite");
                          },
                          [](const PointMassJumps& c) {
                              if (!(c.size > 0.0) || !std::isfinite(c.size))
                                  throw ModelError("point-mass jump size must be positive and finite");
                          }},
               law);
}

template <class Fn>
double visit_mixture(const JumpSizeLaw& law, Fn&& fn) {
    return std::visit(overloaded{[&](const ExponentialJumps& e) { return fn(SimpleJumpLaw{e}); },
                                 [&](const PointMassJumps& c) { return fn(SimpleJumpLaw{c}); },
                                 [&](const MixtureJumps& m) {
                                     double acc = 0.0;
                                     for (const auto& [w, comp] : m.components) acc += w * fn(comp);
                                     return acc;
                                 }},
                      law);
}

}  // namespace detail

inline void validate(const JumpSizeLaw& law) {
    std::visit(detail::overloaded{
                   [](const ExponentialJumps& e) { detail::validate_simple(e); },
                   [](const PointMassJumps& c) { detail::validate_simple(c); },
                   [](const MixtureJumps& m) {
                       if (m.components.empty()) throw ModelError("jump mixture has no components");
                       double total = 0.0;
                       for (const auto& [w, comp] : m.components) {
                           if (!(w > 0.0) || !std::isfinite(w))
                               throw ModelError("jump mixture weights must be positive");
                           detail::validate_simple(comp);
                           total += w;
                       }
                       if (std::abs(total - 1.0) > 1e-9)
                           throw ModelError("jump mixture weights must sum to one");
                   }},
               law);
}

/// E[exp(lambda * jump)] for lambda >= 0.
inline double jump_transform(const JumpSizeLaw& law, double lambda) {
    return detail::visit_mixture(law, [lambda](const SimpleJumpLaw& s) {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) { return e.rate / (e.rate + lambda); },
                                             [&](const PointMassJumps& c) { return std::exp(-lambda * c.size); }},
                          s);
    });
}

/// d/dlambda E[exp(lambda * jump)] = E[jump * exp(lambda * jump)].
inline double jump_transform_prime(const JumpSizeLaw& law, double lambda) {
    return detail::visit_mixture(law, [lambda](const SimpleJumpLaw& s) {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) {
                                                 const double d = e.rate + lambda;
                                                 return -e.rate / (d * d);
                                             },
                                             [&](const PointMassJumps& c) {
                                                 return -c.size * std::exp(-lambda * c.size);
                                             }},
                          s);
    });
}

/// E[|jump|].
inline double jump_mean_size(const JumpSizeLaw& law) {
    return detail::visit_mixture(law, [](const SimpleJumpLaw& s) {
        return std::visit(detail::overloaded{[](const ExponentialJumps& e) { return 1.0 / e.rate; },
                                             [](const PointMassJumps& c) { return c.size; }},
                          s);
    });
}

/// E[fn(jump)] under the size law. Exponential components are integrated by
/// quadrature after the substitution v = exp(rate * jump), v in (0, 1].
template <class Fn>
double jump_expectation(const JumpSizeLaw& law, Fn&& fn, const quad::Options& opt = {}) {
    return detail::visit_mixture(law, [&](const SimpleJumpLaw& s) {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) {
                                                 auto integrand = [&](double v) { return fn(std::log(v) / e.rate); };
                                                 return quad::integrate(integrand, 0.0, 1.0, opt).value;
                                             },
                                             [&](const PointMassJumps& c) { return double(fn(-c.size)); }},
                          s);
    });
}

template <class Rng>
double sample_jump(const JumpSizeLaw& law, Rng& rng) {
    auto draw_simple = [&rng](const SimpleJumpLaw& s) {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) {
                                                 return -std::exponential_distribution<double>(e.rate)(rng);
                                             },
                                             [&](const PointMassJumps& c) { return -c.size; }},
                          s);
    };
    return std::visit(detail::overloaded{[&](const ExponentialJumps& e) { return draw_simple(e); },
                                         [&](const PointMassJumps& c) { return draw_simple(c); },
                                         [&](const MixtureJumps& m) {
                                             double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                                             for (const auto& [w, comp] : m.components) {
                                                 if (u < w) return draw_simple(comp);
                                                 u -= w;
                                             }
                                             return draw_simple(m.components.back().second);
                                         }},
                      law);
}

// ---------------------------------------------------------------------------
// Spectrally negative Levy process with finite-activity jumps.
// ---------------------------------------------------------------------------

enum class Variation { Finite, Infinite };

/// psi(lambda) = sigma2 lambda^2 / 2 + drift lambda + intensity (E[e^{lambda jump}] - 1).
///
/// With sigma2 == 0 the drift is the finite-variation drift `d` (must be > 0);
/// with sigma2 > 0 it is the linear coefficient, the small-jump compensator
/// being folded in since the jumps have finite activity.
class LevyModel {
public:
    LevyModel(double sigma2, double drift, JumpSpec jumps)
        : sigma2_(sigma2), drift_(drift), jumps_(std::move(jumps)) {
        if (!(sigma2_ >= 0.0) || !std::isfinite(sigma2_)) throw ModelError("sigma2 must be finite and >= 0");
        if (!std::isfinite(drift_)) throw ModelError("drift must be finite");
        if (!(jumps_.intensity >= 0.0) || !std::isfinite(jumps_.intensity))
            throw ModelError("jump intensity must be finite and >= 0");
        validate(jumps_.size_law);
        if (sigma2_ == 0.0) {
            if (jumps_.intensity == 0.0)
                throw ModelError("sigma2 = 0 with no jumps gives monotone paths");
            if (!(drift_ > 0.0))
                throw ModelError("finite-variation model needs drift d > 0 (otherwise paths are monotone)");
        }
    }

    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] double drift() const noexcept { return drift_; }
    [[nodiscard]] const JumpSpec& jumps() const noexcept { return jumps_; }
    [[nodiscard]] Variation variation() const noexcept {
        return sigma2_ == 0.0 ? Variation::Finite : Variation::Infinite;
    }

private:
    double sigma2_;
    double drift_;
    JumpSpec jumps_;
};

/// psi and psi' in a wider floating type T, used where long series amplify the error in psi.
template <class T>
T psi_as(const LevyModel& m, const T& lambda) {
    using std::exp;
    T v = T(0.5) * T(m.sigma2()) * lambda * lambda + T(m.drift()) * lambda;
    const auto& jumps = m.jumps();
    if (jumps.intensity == 0.0) return v;
    auto simple = [&lambda](const SimpleJumpLaw& s) -> T {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) -> T { return T(e.rate) / (T(e.rate) + lambda); },
                                             [&](const PointMassJumps& c) -> T { return T(exp(-lambda * T(c.size))); }},
                          s);
    };
    T transform = 0;
    std::visit(detail::overloaded{[&](const ExponentialJumps& e) { transform = simple(e); },
                                  [&](const PointMassJumps& c) { transform = simple(c); },
                                  [&](const MixtureJumps& mix) {
                                      for (const auto& [w, comp] : mix.components) transform += T(w) * simple(comp);
                                  }},
               jumps.size_law);
    return v + T(jumps.intensity) * (transform - T(1));
}

template <class T>
T psi_prime_as(const LevyModel& m, const T& lambda) {
    using std::exp;
    T v = T(m.sigma2()) * lambda + T(m.drift());
    const auto& jumps = m.jumps();
    if (jumps.intensity == 0.0) return v;
    auto simple = [&lambda](const SimpleJumpLaw& s) -> T {
        return std::visit(detail::overloaded{[&](const ExponentialJumps& e) -> T {
                                                 const T d = T(e.rate) + lambda;
                                                 return -T(e.rate) / (d * d);
                                             },
                                             [&](const PointMassJumps& c) -> T {
                                                 return T(-T(c.size) * exp(-lambda * T(c.size)));
                                             }},
                          s);
    };
    T derivative = 0;
    std::visit(detail::overloaded{[&](const ExponentialJumps& e) { derivative = simple(e); },
                                  [&](const PointMassJumps& c) { derivative = simple(c); },
                                  [&](const MixtureJumps& mix) {
                                      for (const auto& [w, comp] : mix.components) derivative += T(w) * simple(comp);
                                  }},
               jumps.size_law);
    return v + T(jumps.intensity) * derivative;
}

inline double psi(const LevyModel& m, double lambda) {
    double v = 0.5 * m.sigma2() * lambda * lambda + m.drift() * lambda;
    if (m.jumps().intensity > 0.0) v += m.jumps().intensity * (jump_transform(m.jumps().size_law, lambda) - 1.0);
    return v;
}

inline double psi_prime(const LevyModel& m, double lambda) {
    double v = m.sigma2() * lambda + m.drift();
    if (m.jumps().intensity > 0.0) v += m.jumps().intensity * jump_transform_prime(m.jumps().size_law, lambda);
    return v;
}

inline Variation variation_class(const LevyModel& m) { return m.variation(); }

inline constexpr int kRootIterationCap = 200;

/// Minimiser of psi on [0, inf): zero when psi'(0+) >= 0.
inline double psi_argmin(const LevyModel& m) {
    if (psi_prime(m, 0.0) >= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    int guard = 0;
    while (psi_prime(m, hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > kRootIterationCap) throw NoConvergence("psi' never becomes positive");
    }
    for (int it = 0; it < kRootIterationCap; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return mid;
        (psi_prime(m, mid) > 0.0 ? hi : lo) = mid;
        if (hi - lo <= 1e-16 * hi) return 0.5 * (lo + hi);
    }
    return 0.5 * (lo + hi);
}

/// Right-continuous inverse of psi: the largest root of psi(lambda) = q.
inline double phi(const LevyModel& m, double q) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("phi: q must be finite and >= 0");
    const double floor = psi_argmin(m);
    if (psi(m, floor) >= q) return floor;

    double lo = floor;
    double hi = floor + 1.0;
    int iterations = 0;
    while (psi(m, hi) <= q) {
        lo = hi;
        hi = floor + 2.0 * (hi - floor);
        if (++iterations > kRootIterationCap) throw NoConvergence("phi: cannot bracket root");
    }
    // Newton from the right on a convex increasing branch decreases monotonically
    // towards the root; bisection is the fallback if an iterate escapes [lo, hi].
    const double tol = 1e-12 * std::max(1.0, q);
    double x = hi;
    for (; iterations < kRootIterationCap; ++iterations) {
        const double f = psi(m, x) - q;
        if (f == 0.0) return x;
        (f > 0.0 ? hi : lo) = x;
        const double slope = psi_prime(m, x);
        double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
            (std::abs(f) <= tol && step <= 1e-14 * std::max(1.0, x)))
            return x;
    }
    throw NoConvergence("phi: iteration cap reached");
}

/// E_x[exp(-q tau_a^+); tau_a^+ < inf] = exp(-Phi(q) (a - x)).
inline double first_passage_lt(const LevyModel& m, double x, double a, double q) {
    if (x > a) throw DomainError("first_passage_lt: need x <= a");
    return std::exp(-phi(m, q) * (a - x));
}

// ---------------------------------------------------------------------------
// Positive self-similar Markov process via the Lamperti transform.
// ---------------------------------------------------------------------------

inline constexpr double kDegeneracyTol = 1e-9;

class PssmpModel {
public:
    PssmpModel(LevyModel levy, double p, double alpha) : levy_(std::move(levy)), p_(p), alpha_(alpha) {
        if (!(p_ >= 0.0) || !std::isfinite(p_)) throw ModelError("killing rate p must be finite and >= 0");
        if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw ModelError("alpha must be finite and > 0");
        phi_p_ = phi(levy_, p_);
        if (!(phi_p_ > 0.0))
            throw ModelError("Phi(p) must be > 0: with p = 0 the process must drift to -infinity");
        const double ratio = phi_p_ / alpha_;
        const double m = std::round(ratio);
        if (m >= 1.0 && std::abs(phi_p_ - m * alpha_) < kDegeneracyTol * std::max(1.0, phi_p_))
            degeneracy_ = static_cast<int>(m);
    }

    [[nodiscard]] const LevyModel& levy() const noexcept { return levy_; }
    [[nodiscard]] double p() const noexcept { return p_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double phi_p() const noexcept { return phi_p_; }
    /// m with Phi(p) = m * alpha, when the model sits on the degeneracy seam.
    [[nodiscard]] std::optional<int> degeneracy() const noexcept { return degeneracy_; }
    [[nodiscard]] bool degenerate() const noexcept { return degeneracy_.has_value(); }
    [[nodiscard]] Variation variation() const noexcept { return levy_.variation(); }

    /// Same process with a different self-similarity index.
    [[nodiscard]] PssmpModel with_alpha(double alpha) const { return {levy_, p_, alpha}; }

private:
    LevyModel levy_;
    double p_;
    double alpha_;
    double phi_p_ = 0.0;
    std::optional<int> degeneracy_;
};

/// P(sup X = X at the killing time) = p / (Phi(p) d) for finite variation, else 0.
inline double at_sup_atom(const PssmpModel& m) {
    if (m.variation() == Variation::Infinite) return 0.0;
    return m.p() / (m.phi_p() * m.levy().drift());
}

/// Laplace exponent of the ascending ladder process: Phi(gamma) + delta.
inline double ladder_kappa(const PssmpModel& m, double gamma, double delta) {
    return phi(m.levy(), gamma) + delta;
}

/// Laplace exponent of the descending ladder process: (gamma - psi(delta)) / (Phi(gamma) - delta),
/// replaced by its limit psi'(Phi(gamma)) when delta sits on Phi(gamma).
inline double ladder_kappa_hat(const PssmpModel& m, double gamma, double delta) {
    const double root = phi(m.levy(), gamma);
    if (std::abs(root - delta) < kDegeneracyTol * std::max(1.0, root)) return psi_prime(m.levy(), root);
    return (gamma - psi(m.levy(), delta)) / (root - delta);
}

}  // namespace pssmp
