#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pssmp/errors.hpp"
#include "pssmp/levy_model.hpp"

namespace pssmp::mc {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for replication `index` of a run keyed by `seed`.
[[nodiscard]] inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

struct SimulationOptions {
    /// Euler step for infinite-variation models.
    double step = 1e-3;
    /// Worker threads; 0 means hardware concurrency.
    unsigned workers = 0;
    /// p = 0: stop once the path sits this many multiples of 1/Phi(0) below its maximum ...
    double barrier_scale = 40.0;
    /// ... and the expected remaining exponential functional is below this fraction of the total.
    double tail_tol = 1e-12;
    std::size_t max_points = 20'000'000;
};

/// One point of a simulated path: time, left limit and value after any jump.
struct SkeletonPoint {
    double t;
    double left;
    double value;
};

/// Killed Levy path, linear between skeleton points (exact for finite variation).
struct PathSample {
    std::vector<SkeletonPoint> skeleton;
    double kill_time = std::numeric_limits<double>::infinity();
    /// Truncation time used when p = 0.
    double horizon = std::numeric_limits<double>::infinity();
};

namespace detail {

// Expected remaining exponential functional from level x when p = 0 and psi(alpha) < 0.
inline double tail_bound(double x, double alpha, double psi_alpha) { return std::exp(alpha * x) / -psi_alpha; }

// int_0^dt exp(power (x0 + (x1 - x0) u / dt)) du
inline double segment_exp_integral(double dt, double x0, double x1, double power) {
    const double delta = power * (x1 - x0);
    const double base = dt * std::exp(power * x0);
    if (std::abs(delta) < 1e-12) return base * (1.0 + 0.5 * delta);
    return base * std::expm1(delta) / delta;
}

}  // namespace detail

/// Simulates X from x0 up to the killing time: exact compound-Poisson skeleton with linear
/// drift for finite variation, Euler grid with exact Gaussian increments and exact jump
/// times for infinite variation. For p = 0 the path is truncated once a new maximum is
/// practically impossible and the remaining exponential functional is negligible.
template <class R>
PathSample simulate_path(const PssmpModel& model, double x0, R& rng, const SimulationOptions& opt = {}) {
    const auto& levy = model.levy();
    const double p = model.p();
    const double alpha = model.alpha();
    const bool finite = model.variation() == Variation::Finite;
    const double psi_alpha = psi(levy, alpha);
    if (p == 0.0 && !(psi_alpha < 0.0))
        throw Unsupported("simulation with p = 0 needs psi(alpha) < 0 to control the tail of the exponential functional");
    if (!finite && !(opt.step > 0.0)) throw DomainError("simulation step must be positive");

    PathSample path;
    std::exponential_distribution<double> unit_exp(1.0);
    path.kill_time = p > 0.0 ? unit_exp(rng) / p : std::numeric_limits<double>::infinity();
    const double intensity = levy.jumps().intensity;
    const double sigma = std::sqrt(levy.sigma2());
    const double drift = levy.drift();
    std::normal_distribution<double> normal(0.0, 1.0);

    double t = 0.0;
    double x = x0;
    double running_max = x0;
    double functional = 0.0;
    double next_jump = intensity > 0.0 ? unit_exp(rng) / intensity : std::numeric_limits<double>::infinity();
    const double barrier = p == 0.0 ? opt.barrier_scale / model.phi_p() : 0.0;
    path.skeleton.push_back({0.0, x0, x0});

    for (;;) {
        if (path.skeleton.size() > opt.max_points) throw NoConvergence("simulate_path: point budget exhausted");
        const double target = finite ? next_jump : std::min(next_jump, t + opt.step);
        const double end = std::min(target, path.kill_time);
        const double dt = end - t;
        double left = x + drift * dt;
        if (!finite && dt > 0.0) left += sigma * std::sqrt(dt) * normal(rng);
        if (p == 0.0) functional += detail::segment_exp_integral(dt, x, left, alpha);
        t = end;
        x = left;
        running_max = std::max(running_max, x);
        if (t >= path.kill_time) {
            path.skeleton.push_back({t, x, x});
            return path;
        }
        if (t == next_jump) {
            x += sample_jump(levy.jumps().size_law, rng);
            next_jump = t + unit_exp(rng) / intensity;
        }
        path.skeleton.push_back({t, left, x});
        if (p == 0.0 && running_max - x >= barrier &&
            detail::tail_bound(x, alpha, psi_alpha) < opt.tail_tol * functional) {
            path.horizon = t;
            return path;
        }
    }
}

/// Functionals at the overall maximum of the self-similar process Y = exp(X o phi).
struct FunctionalSample {
    double sup;  // overall supremum of Y
    double G;    // last time X is at its supremum
    double L;    // I_G
    double T0;   // absorption time I_e
    double J;    // exp(X_G - sup X)
};

/// A simulated path together with its Lamperti clock I_t = int_0^t exp(alpha X_u) du.
class LampertiPath {
public:
    LampertiPath(PathSample path, double alpha) : path_(std::move(path)), alpha_(alpha) {
        const auto& pts = path_.skeleton;
        if (pts.empty()) throw DomainError("LampertiPath: empty skeleton");
        clock_.assign(pts.size(), 0.0);
        prefix_max_.assign(pts.size(), 0.0);
        double best = pts[0].value;
        std::size_t best_index = 0;
        bool best_at_left = false;
        prefix_max_[0] = std::max(pts[0].left, pts[0].value);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            clock_[i] = clock_[i - 1] + segment(i - 1, alpha_);
            if (pts[i].left >= best) {
                best = pts[i].left;
                best_index = i;
                best_at_left = true;
            }
            if (pts[i].value >= best && pts[i].value > pts[i].left) {
                best = pts[i].value;
                best_index = i;
                best_at_left = false;
            }
            prefix_max_[i] = std::max({prefix_max_[i - 1], pts[i].left, pts[i].value});
        }
        const auto& g = pts[best_index];
        sample_.sup = std::exp(best);
        sample_.G = g.t;
        sample_.L = clock_[best_index];
        sample_.T0 = clock_.back();
        sample_.J = best_at_left ? std::exp(g.value - g.left) : 1.0;
        at_maximum_jump_ = best_at_left && g.value < g.left;
    }

    [[nodiscard]] const PathSample& path() const noexcept { return path_; }
    [[nodiscard]] const FunctionalSample& functionals() const noexcept { return sample_; }
    [[nodiscard]] double start() const { return std::exp(path_.skeleton.front().value); }
    /// True when the overall maximum is a left limit before a jump (J < 1).
    [[nodiscard]] bool max_before_jump() const noexcept { return at_maximum_jump_; }

    /// Y at Lamperti time s (0 once absorbed).
    [[nodiscard]] double Y_at(double s) const {
        if (s >= sample_.T0) return 0.0;
        return std::exp(locate(s).second);
    }

    /// sup_{u <= s} Y_u.
    [[nodiscard]] double sup_until(double s) const {
        if (s >= sample_.T0) return sample_.sup;
        const auto [i, x] = locate(s);
        return std::exp(std::max(prefix_max_[i], x));
    }

    /// Lamperti time of the first passage of Y above d (infinity when it never happens).
    [[nodiscard]] double first_passage(double d) const {
        const double level = std::log(d);
        const auto& pts = path_.skeleton;
        if (pts[0].value >= level) return 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i + 1].left >= level) {
                const double dt = pts[i + 1].t - pts[i].t;
                const double frac = (level - pts[i].value) / (pts[i + 1].left - pts[i].value);
                return clock_[i] + detail::segment_exp_integral(frac * dt, pts[i].value, level, alpha_);
            }
            if (pts[i + 1].value >= level) return clock_[i + 1];
        }
        return std::numeric_limits<double>::infinity();
    }

    /// int_0^{phi_s ^ e} exp(power X_t) dt, phi the inverse of the Lamperti clock.
    [[nodiscard]] double exp_integral_until(double s, double power) const {
        const auto& pts = path_.skeleton;
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double dt = pts[i + 1].t - pts[i].t;
            if (clock_[i + 1] <= s) {
                total += detail::segment_exp_integral(dt, pts[i].value, pts[i + 1].left, power);
                continue;
            }
            const double u = invert_segment(i, s - clock_[i]);
            const double x = pts[i].value + (pts[i + 1].left - pts[i].value) * (u / dt);
            total += detail::segment_exp_integral(u, pts[i].value, x, power);
            break;
        }
        return total;
    }

private:
    [[nodiscard]] double segment(std::size_t i, double power) const {
        const auto& a = path_.skeleton[i];
        const auto& b = path_.skeleton[i + 1];
        return detail::segment_exp_integral(b.t - a.t, a.value, b.left, power);
    }

    // Elapsed X-time u in segment i at which the clock has advanced by `rem`.
    [[nodiscard]] double invert_segment(std::size_t i, double rem) const {
        const auto& a = path_.skeleton[i];
        const auto& b = path_.skeleton[i + 1];
        const double dt = b.t - a.t;
        const double slope = (b.left - a.value) / dt;
        const double scaled = rem * std::exp(-alpha_ * a.value);
        const double k = alpha_ * slope;
        if (std::abs(k * scaled) < 1e-12) return std::min(dt, scaled);
        return std::clamp(std::log1p(k * scaled) / k, 0.0, dt);
    }

    // Segment index and X value at Lamperti time s < T0.
    [[nodiscard]] std::pair<std::size_t, double> locate(double s) const {
        const auto it = std::upper_bound(clock_.begin(), clock_.end(), s);
        const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - clock_.begin() - 1, 0));
        const auto& pts = path_.skeleton;
        if (i + 1 >= pts.size()) return {i, pts.back().value};
        const double dt = pts[i + 1].t - pts[i].t;
        const double u = invert_segment(i, s - clock_[i]);
        return {i, pts[i].value + (pts[i + 1].left - pts[i].value) * (u / dt)};
    }

    PathSample path_;
    double alpha_;
    std::vector<double> clock_;
    std::vector<double> prefix_max_;
    FunctionalSample sample_{};
    bool at_maximum_jump_ = false;
};

/// Path functional evaluated per replication; the generator allows auxiliary draws.
struct Functional {
    std::string name;
    std::function<double(const LampertiPath&, Rng&)> eval;
};

struct EstimatorReport {
    std::string functional;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::optional<double> analytic;
    std::optional<double> z;

    /// Attaches the analytic value and, with `bias_allowance`, the z-score of the excess gap.
    EstimatorReport& compare(double value, double bias_allowance = 0.0) {
        analytic = value;
        const double gap = std::max(0.0, std::abs(estimate - value) - bias_allowance);
        if (std_error > 0.0)
            z = std::copysign(gap / std_error, estimate - value);
        else
            z = gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate - value);
        return *this;
    }
    [[nodiscard]] bool within(double z_max) const { return z && std::abs(*z) < z_max; }
};

namespace detail {

// Pairwise sum over a fixed index order: the result does not depend on how the values were produced.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline std::pair<double, double> mean_stderr(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) return {0.0, 0.0};
    const double mean = pairwise_sum(values.data(), n) / double(n);
    if (n < 2) return {mean, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
    const double var = pairwise_sum(sq.data(), n) / double(n - 1);
    return {mean, std::sqrt(var / double(n))};
}

template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = std::min(n, w * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Evaluates every functional on the same n replications started at Y_0 = y. Replication i
/// uses substream(seed, i), so results are bit-identical for any worker count.
inline std::vector<EstimatorReport> estimate_many(const PssmpModel& model, double y,
                                                  const std::vector<Functional>& functionals, std::size_t n,
                                                  std::uint64_t seed, const SimulationOptions& opt = {}) {
    if (!(y > 0.0)) throw DomainError("estimate: start y must be positive");
    const std::size_t k = functionals.size();
    std::vector<std::vector<double>> values(k, std::vector<double>(n, 0.0));
    const double x0 = std::log(y);
    detail::parallel_for(n, opt.workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = substream(seed, i);
            const LampertiPath path(simulate_path(model, x0, rng, opt), model.alpha());
            for (std::size_t f = 0; f < k; ++f) {
                Rng aux = substream(seed ^ 0x5bd1e995u, i * k + f);
                values[f][i] = functionals[f].eval(path, aux);
            }
        }
    });
    std::vector<EstimatorReport> reports;
    for (std::size_t f = 0; f < k; ++f) {
        const auto [mean, se] = detail::mean_stderr(values[f]);
        reports.push_back({functionals[f].name, mean, se, n, seed, std::nullopt, std::nullopt});
    }
    return reports;
}

inline EstimatorReport estimate(const PssmpModel& model, double y, const Functional& functional, std::size_t n,
                                std::uint64_t seed, const SimulationOptions& opt = {}) {
    return estimate_many(model, y, {functional}, n, seed, opt).front();
}

/// The overall-maximum functionals of n replications.
inline std::vector<FunctionalSample> sample_functionals(const PssmpModel& model, double y, std::size_t n,
                                                        std::uint64_t seed, const SimulationOptions& opt = {}) {
    std::vector<FunctionalSample> out(n);
    const double x0 = std::log(y);
    detail::parallel_for(n, opt.workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = substream(seed, i);
            out[i] = LampertiPath(simulate_path(model, x0, rng, opt), model.alpha()).functionals();
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Functional menu.
// ---------------------------------------------------------------------------

namespace functionals {

inline Functional constant(double c = 1.0) {
    return {"const", [c](const LampertiPath&, Rng&) { return c; }};
}
/// e^{-beta T0}
inline Functional lt_T0(double beta) {
    return {"exp(-beta*T0)", [beta](const LampertiPath& p, Rng&) { return std::exp(-beta * p.functionals().T0); }};
}
/// e^{-gamma L} g(sup)
inline Functional lt_L(double gamma, std::function<double(double)> g, std::string label = "1") {
    return {"exp(-gamma*L)*" + label, [gamma, g = std::move(g)](const LampertiPath& p, Rng&) {
                const auto& f = p.functionals();
                return std::exp(-gamma * f.L) * g(f.sup);
            }};
}
/// e^{-beta (T0 - L)} h(sup, J)
inline Functional lt_residual(double beta, std::function<double(double, double)> h, std::string label = "1") {
    return {"exp(-beta*(T0-L))*" + label, [beta, h = std::move(h)](const LampertiPath& p, Rng&) {
                const auto& f = p.functionals();
                return std::exp(-beta * (f.T0 - f.L)) * h(f.sup, f.J);
            }};
}
/// g(J)
inline Functional of_J(std::function<double(double)> g, std::string label) {
    return {label, [g = std::move(g)](const LampertiPath& p, Rng&) { return g(p.functionals().J); }};
}
/// e^{-beta T0} 1{sup < d}
inline Functional lt_T0_below(double beta, double d) {
    return {"exp(-beta*T0);sup<d", [beta, d](const LampertiPath& p, Rng&) {
                const auto& f = p.functionals();
                return f.sup < d ? std::exp(-beta * f.T0) : 0.0;
            }};
}
/// e^{-gamma T_d^+} 1{T_d^+ < inf}
inline Functional lt_first_passage(double gamma, double d) {
    return {"exp(-gamma*T_d)", [gamma, d](const LampertiPath& p, Rng&) {
                const double t = p.first_passage(d);
                return std::isfinite(t) ? std::exp(-gamma * t) : 0.0;
            }};
}
/// sup_{u <= S} Y_u^k with S ~ exponential(gamma) independent
inline Functional sup_moment(double k, double gamma) {
    return {"sup_{u<=S} Y_u^k", [k, gamma](const LampertiPath& p, Rng& aux) {
                const double s = std::exponential_distribution<double>(gamma)(aux);
                return std::pow(p.sup_until(s), k);
            }};
}
/// payoff(sup) e^{-r T0}
inline Functional discounted_payoff(double r, std::function<double(double)> payoff, std::string label = "f") {
    return {"exp(-r*T0)*" + label, [r, payoff = std::move(payoff)](const LampertiPath& p, Rng&) {
                const auto& f = p.functionals();
                return std::exp(-r * f.T0) * payoff(f.sup);
            }};
}

}  // namespace functionals

// ---------------------------------------------------------------------------
// Martingale and moment checks.
// ---------------------------------------------------------------------------

/// E[e^{-beta (s ^ T0)} J(beta Y_s^alpha)] at each s; `series_J` evaluates J. The analytic
/// value J(beta y^alpha) is attached.
inline std::vector<EstimatorReport> martingale_check(const PssmpModel& model, double y, double beta,
                                                     const std::vector<double>& times,
                                                     const std::function<double(double)>& series_J, std::size_t n,
                                                     std::uint64_t seed, const SimulationOptions& opt = {}) {
    const double alpha = model.alpha();
    std::vector<Functional> fs;
    for (double s : times) {
        fs.push_back({"J-martingale s=" + std::to_string(s), [=, &series_J](const LampertiPath& p, Rng&) {
                          const double T0 = p.functionals().T0;
                          const double ys = p.Y_at(s);
                          return std::exp(-beta * std::min(s, T0)) * series_J(beta * std::pow(ys, alpha));
                      }});
    }
    auto reports = estimate_many(model, y, fs, n, seed, opt);
    for (auto& r : reports) r.compare(series_J(beta * std::pow(y, alpha)));
    return reports;
}

/// E[e^{-gamma (s ^ T_d^+)} Y^{Phi(p)} I(gamma Y^alpha)] with Y stopped at T_d^+ and 0 after
/// absorption; `series_I` evaluates I. The analytic value y^{Phi(p)} I(gamma y^alpha) is attached.
inline std::vector<EstimatorReport> martingale_check_I(const PssmpModel& model, double y, double d, double gamma,
                                                       const std::vector<double>& times,
                                                       const std::function<double(double)>& series_I,
                                                       std::size_t n, std::uint64_t seed,
                                                       const SimulationOptions& opt = {}) {
    if (!(y <= d)) throw DomainError("martingale_check_I: need y <= d");
    const double alpha = model.alpha();
    const double phi_p = model.phi_p();
    std::vector<Functional> fs;
    for (double s : times) {
        fs.push_back({"I-martingale s=" + std::to_string(s), [=, &series_I](const LampertiPath& p, Rng&) {
                          const double stop = std::min(s, p.first_passage(d));
                          const double ys = stop < s ? d : p.Y_at(s);
                          if (ys == 0.0) return 0.0;
                          return std::exp(-gamma * stop) * std::pow(ys, phi_p) *
                                 series_I(gamma * std::pow(ys, alpha));
                      }});
    }
    auto reports = estimate_many(model, y, fs, n, seed, opt);
    for (auto& r : reports) r.compare(std::pow(y, phi_p) * series_I(gamma * std::pow(y, alpha)));
    return reports;
}

/// Pathwise form of Q_y[Y_s^{alpha n}] = y^{alpha n} + (psi(alpha n) - p) int_0^s Q_y[Y_v^{alpha(n-1)}; v < T0] dv:
/// the difference of the two sides is averaged and compared with 0.
inline EstimatorReport moment_recursion_check(const PssmpModel& model, double y, int n_mom, double s,
                                              std::size_t n, std::uint64_t seed, const SimulationOptions& opt = {}) {
    if (n_mom < 1) throw DomainError("moment_recursion_check: n_mom must be >= 1");
    const double alpha = model.alpha();
    const double power = alpha * n_mom;
    const double coef = psi(model.levy(), power) - model.p();
    const double start = std::pow(y, power);
    Functional f{"moment recursion n=" + std::to_string(n_mom), [=](const LampertiPath& p, Rng&) {
                     const double lhs = std::pow(p.Y_at(s), power);
                     return lhs - start - coef * p.exp_integral_until(s, power);
                 }};
    auto report = estimate(model, y, f, n, seed, opt);
    report.compare(0.0);
    return report;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov test against an exponential law.
// ---------------------------------------------------------------------------

struct KsResult {
    double statistic;
    double critical;
    [[nodiscard]] bool passed() const { return statistic < critical; }
};

/// One-sample KS test of `samples` against exponential(rate) at significance `level`
/// (asymptotic critical value sqrt(-log(level / 2) / 2) / sqrt(n)).
inline KsResult ks_exponential(std::vector<double> samples, double rate, double level = 1e-3) {
    if (samples.empty()) throw DomainError("ks_exponential: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = -std::expm1(-rate * std::max(samples[i], 0.0));
        d = std::max({d, double(i + 1) / n - cdf, cdf - double(i) / n});
    }
    return {d, std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(n)};
}

}  // namespace pssmp::mc
