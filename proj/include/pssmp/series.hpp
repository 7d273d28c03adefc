#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "pssmp/errors.hpp"
#include "pssmp/levy_model.hpp"

namespace pssmp {

/// Working precision of the power series. Differences such as J(y) - C y^{Phi/alpha} I(y)
/// cancel terms that grow like exp(c y), so the series carry guard digits beyond double.
using extended = long double;

/// Precision of the tail constant and the extension formula, where the cancellation is
/// steepest.
using precise = boost::multiprecision::cpp_bin_float_quad;

struct SeriesOptions {
    /// Relative truncation tolerance on individual terms (extended evaluations).
    extended tol = std::numeric_limits<extended>::epsilon() / 4;
    std::size_t k_max = 10000;
    /// Stabilisation tolerance for the tail-matching constant.
    double tol_C = 1e-10;
    int max_doublings = 60;
};

namespace detail {

/// Successive coefficient ratios of the three series in scalar type T.
template <class T>
struct SeriesCoefficients {
    std::vector<T> a_ratio;
    std::vector<T> b_ratio;
    std::vector<T> log_weight;  // S_k = sum_{l<=k} psi'(Phi + l alpha) / (psi(Phi + l alpha) - p)
    T phi;

    SeriesCoefficients(const PssmpModel& model, std::size_t n, std::size_t a_usable) {
        const auto& levy = model.levy();
        const T alpha = T(model.alpha());
        const T p = T(model.p());
        // Newton steps in T sharpen the double root.
        phi = T(model.phi_p());
        for (int i = 0; i < 2; ++i) phi -= (psi_as<T>(levy, phi) - p) / psi_prime_as<T>(levy, phi);
        a_ratio.assign(n, T(0));
        b_ratio.assign(n, T(0));
        log_weight.assign(n, T(0));
        for (std::size_t k = 1; k < n; ++k) {
            if (k < a_usable) a_ratio[k] = T(1) / (psi_as<T>(levy, T(k) * alpha) - p);
            const T arg = phi + T(k) * alpha;
            const T denom = psi_as<T>(levy, arg) - p;
            b_ratio[k] = T(1) / denom;
            log_weight[k] = log_weight[k - 1] + psi_prime_as<T>(levy, arg) / denom;
        }
    }
};

}  // namespace detail

/// Coefficient sequences of the three power series attached to (psi, p, alpha):
///   J(x) = sum a_k x^k,  a_k = 1 / prod_{l<=k} (psi(l alpha) - p)
///   I(x) = sum b_k x^k,  b_k = 1 / prod_{l<=k} (psi(Phi(p) + l alpha) - p)
///   K(x) = sum c_k x^k,  c_k = b_k sum_{l<=k} psi'(Phi(p) + l alpha) / (psi(Phi(p) + l alpha) - p)
/// The coefficients are stored as successive ratios so that terms are built by
/// multiplication and never need factorial-sized intermediates.
class SeriesTable {
public:
    explicit SeriesTable(const PssmpModel& model, SeriesOptions options = {})
        : model_(model),
          options_(options),
          a_usable_(model.degeneracy() ? static_cast<std::size_t>(*model.degeneracy()) : options.k_max + 1),
          ext_(model, options.k_max + 1, a_usable_) {
        // Beyond this index |a_{k+1} / a_k| decreases monotonically.
        a_monotone_from_ = static_cast<std::size_t>(std::floor(model_.phi_p() / model_.alpha())) + 1;
        if (!model_.degenerate()) {
            precise_.emplace(model_, options_.k_max + 1, a_usable_);
            compute_constant();
        }
    }

    [[nodiscard]] const PssmpModel& model() const noexcept { return model_; }
    [[nodiscard]] const SeriesOptions& options() const noexcept { return options_; }
    /// Phi(p) refined to extended precision.
    [[nodiscard]] extended phi_extended() const noexcept { return ext_.phi; }

    [[nodiscard]] extended a(std::size_t k) const {
        require_a(k + 1);
        extended v = 1.0L;
        for (std::size_t l = 1; l <= k; ++l) v *= ext_.a_ratio.at(l);
        return v;
    }
    [[nodiscard]] extended b(std::size_t k) const {
        extended v = 1.0L;
        for (std::size_t l = 1; l <= k; ++l) v *= ext_.b_ratio.at(l);
        return v;
    }
    [[nodiscard]] extended c(std::size_t k) const { return b(k) * ext_.log_weight.at(k); }

    /// Number of leading a-coefficients that are defined (all, unless degenerate).
    [[nodiscard]] std::size_t a_defined() const noexcept { return a_usable_; }

    [[nodiscard]] extended eval_J(extended x) const {
        require_a(options_.k_max + 1);
        return sum(ext_, ext_.a_ratio, x, a_monotone_from_, Weight::One, std::nullopt, options_.tol);
    }
    [[nodiscard]] extended eval_I(extended x) const {
        return sum(ext_, ext_.b_ratio, x, 1, Weight::One, std::nullopt, options_.tol);
    }
    [[nodiscard]] extended eval_K(extended x) const {
        return sum(ext_, ext_.b_ratio, x, 1, Weight::Log, std::nullopt, options_.tol);
    }
    [[nodiscard]] extended eval_kJ(extended x) const {
        require_a(options_.k_max + 1);
        return sum(ext_, ext_.a_ratio, x, a_monotone_from_, Weight::Index, std::nullopt, options_.tol);
    }
    [[nodiscard]] extended eval_kI(extended x) const {
        return sum(ext_, ext_.b_ratio, x, 1, Weight::Index, std::nullopt, options_.tol);
    }
    [[nodiscard]] extended eval_kK(extended x) const {
        return sum(ext_, ext_.b_ratio, x, 1, Weight::IndexLog, std::nullopt, options_.tol);
    }

    /// sum_{k < terms} a_k x^k and sum_{k < terms} k a_k x^k; defined on the degeneracy seam for terms <= m.
    [[nodiscard]] extended eval_J_head(extended x, std::size_t terms) const {
        require_a(terms);
        return sum(ext_, ext_.a_ratio, x, 0, Weight::One, terms, options_.tol);
    }
    [[nodiscard]] extended eval_kJ_head(extended x, std::size_t terms) const {
        require_a(terms);
        return sum(ext_, ext_.a_ratio, x, 0, Weight::Index, terms, options_.tol);
    }

    /// J(x) - C x^{Phi(p)/alpha} I(x), evaluated in `precise` arithmetic.
    [[nodiscard]] double eval_extension(double x) const {
        if (x < 0.0) throw DomainError("series argument must be >= 0");
        const precise C = const_C_precise();
        const precise xp(x);
        const precise v = eval_precise(precise_->a_ratio, xp, a_monotone_from_) -
                          C * pow(xp, precise_->phi / precise(model_.alpha())) * eval_precise(precise_->b_ratio, xp, 1);
        return static_cast<double>(v);
    }

    /// The constant C with J(y) - C y^{Phi(p)/alpha} I(y) -> 0 as y -> inf.
    [[nodiscard]] double const_C() const { return static_cast<double>(const_C_precise()); }
    [[nodiscard]] precise const_C_precise() const {
        if (model_.degenerate()) throw Degenerate("const_C: Phi(p) is an integer multiple of alpha");
        if (!constant_) throw NoConvergence(constant_error_);
        return *constant_;
    }

    /// Successive ratios J(2^n) / (2^{n Phi/alpha} I(2^n)) produced while computing const_C.
    [[nodiscard]] const std::vector<double>& const_C_history() const noexcept { return constant_history_; }

private:
    enum class Weight { One, Index, Log, IndexLog };

    void require_a(std::size_t terms) const {
        if (terms > a_usable_)
            throw Degenerate("coefficient a_" + std::to_string(a_usable_) +
                             " is undefined: Phi(p) is an integer multiple of alpha");
    }

    template <class T>
    static T weight(const detail::SeriesCoefficients<T>& c, Weight w, std::size_t k) {
        switch (w) {
            case Weight::One: return T(1);
            case Weight::Index: return T(k);
            case Weight::Log: return c.log_weight[k];
            case Weight::IndexLog: return T(k) * c.log_weight[k];
        }
        return T(1);
    }

    // Neumaier-compensated sum of weight(k) * x^k * prod_{l<=k} ratio[l]. Truncates once two
    // consecutive terms are below tol * (1 + |partial|), but never before `monotone_from`
    // (coefficients may change sign and shrink/grow erratically before that index).
    template <class T>
    T sum(const detail::SeriesCoefficients<T>& c, const std::vector<T>& ratio, const T& x,
          std::size_t monotone_from, Weight w, std::optional<std::size_t> exact_terms, const T& tol) const {
        using std::abs;
        using std::isfinite;
        if (x < 0) throw DomainError("series argument must be >= 0");
        const std::size_t limit = exact_terms ? *exact_terms : ratio.size();
        T power = 1;
        T total = 0;
        T compensation = 0;
        bool previous_small = false;
        for (std::size_t k = 0; k < limit; ++k) {
            if (k > 0) power *= x * ratio[k];
            const T term = weight(c, w, k) * power;
            if (!isfinite(term))
                throw NoConvergence("series term overflow at x = " + std::to_string(static_cast<double>(x)));
            const T t = total + term;
            compensation += (abs(total) >= abs(term)) ? T((total - t) + term) : T((term - t) + total);
            total = t;
            if (exact_terms) continue;
            const bool small = abs(term) <= tol * (1 + abs(total + compensation));
            if (small && previous_small && k >= monotone_from) return total + compensation;
            previous_small = small;
            if (power == 0 && k >= monotone_from) return total + compensation;
        }
        if (exact_terms) return total + compensation;
        throw NoConvergence("series did not converge within k_max = " + std::to_string(options_.k_max) +
                            " terms at x = " + std::to_string(static_cast<double>(x)));
    }

    [[nodiscard]] precise eval_precise(const std::vector<precise>& ratio, const precise& x,
                                       std::size_t monotone_from) const {
        return sum(*precise_, ratio, x, monotone_from, Weight::One, std::nullopt,
                   precise(std::numeric_limits<precise>::epsilon()) / 4);
    }

    void compute_constant() {
        const precise exponent = precise_->phi / precise(model_.alpha());
        auto ratio_at = [&](const precise& y) {
            return precise(eval_precise(precise_->a_ratio, y, a_monotone_from_) /
                           (pow(y, exponent) * eval_precise(precise_->b_ratio, y, 1)));
        };
        try {
            precise prev = ratio_at(precise(1));
            constant_history_.push_back(static_cast<double>(prev));
            for (int n = 1; n <= options_.max_doublings; ++n) {
                const precise cur = ratio_at(ldexp(precise(1), n));
                constant_history_.push_back(static_cast<double>(cur));
                if (abs(cur - prev) < precise(options_.tol_C) * abs(prev)) {
                    // The residual decays faster than exponentially, so one more doubling pushes it
                    // far below tol_C when the series can still be summed there.
                    try {
                        const precise next = ratio_at(ldexp(precise(1), n + 1));
                        constant_history_.push_back(static_cast<double>(next));
                        constant_ = next;
                    } catch (const NoConvergence&) {
                        constant_ = cur;
                    }
                    return;
                }
                prev = cur;
            }
            constant_error_ = "const_C: ratio did not stabilise within 2^" + std::to_string(options_.max_doublings);
        } catch (const NoConvergence& e) {
            constant_error_ = std::string("const_C: ") + e.what();
        }
    }

    PssmpModel model_;
    SeriesOptions options_;
    std::size_t a_usable_;
    std::size_t a_monotone_from_ = 1;
    detail::SeriesCoefficients<extended> ext_;
    std::optional<detail::SeriesCoefficients<precise>> precise_;
    std::optional<precise> constant_;
    std::string constant_error_ = "const_C unavailable";
    std::vector<double> constant_history_;
};

}  // namespace pssmp
