#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pssmp/pssmp.hpp"

namespace {

using namespace pssmp;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Outcome from(const verify::CheckResult& c) { return {c.passed, c.name + ": " + c.detail}; }

Outcome join(const std::vector<verify::CheckResult>& checks) {
    Outcome out{true, ""};
    for (const auto& c : checks) {
        out.passed = out.passed && c.passed;
        out.detail += (out.detail.empty() ? "" : "; ") + c.name + " " + c.detail;
    }
    return out;
}

std::string z_list(const std::vector<mc::EstimatorReport>& reports) {
    std::string s;
    for (const auto& r : reports)
        s += "\n      " + r.functional + ": estimate " + fmt(r.estimate) + " analytic " +
             (r.analytic ? fmt(*r.analytic) : "-") + " z " + (r.z ? fmt(*r.z) : "-");
    return s;
}

verify::Options mc_options() {
    verify::Options o;
    o.y = 1.0;
    o.beta = 1.0;
    o.gamma = 1.0;
    o.n = 200000;
    o.seed = 1;
    return o;
}

Outcome zero_rate_reductions() {
    const std::vector<double> ys{0.25, 0.5, 1.0, 2.0, 4.0};
    const std::vector<double> ds{0.5, 1.0, 2.0, 4.0, 8.0};
    return join({verify::check_reductions(Factorization(reference::model_F()), ys, ds),
                 verify::check_reductions(Factorization(reference::model_B()), ys, ds)});
}

Outcome golden_ratio() {
    const Factorization f(reference::model_F());
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    const auto law = f.jump_law();
    const double e_phi = std::abs(f.model().phi_p() - golden);
    const double e_atom = std::abs(at_sup_atom(f.model()) - (std::sqrt(5.0) - 1.0) / 2.0);
    const double e_cont = std::abs(law.continuous_mass() - 1.0 / (golden * golden));
    const double e_total = std::abs(law.integrate([](double) { return 1.0; }) - 1.0);
    const bool ok = e_phi < 1e-10 && e_atom < 1e-10 && e_cont < 1e-9 && e_total < 1e-9;
    return {ok, "|Phi err| " + fmt(e_phi) + ", |atom err| " + fmt(e_atom) + ", |continuous err| " + fmt(e_cont) +
                    ", |mass err| " + fmt(e_total)};
}

Outcome two_route() {
    const auto start = Clock::now();
    const std::vector<double> ys{0.5, 1.0, 2.0};
    const std::vector<double> betas{0.1, 1.0, 10.0};
    auto out = join({verify::check_two_route(Factorization(reference::model_F()), ys, betas),
                     verify::check_two_route(Factorization(reference::model_B()), ys, betas)});
    const double t = seconds_since(start);
    out.passed = out.passed && t < 10.0;
    out.detail += "; runtime " + fmt(t) + " s";
    return out;
}

Outcome mc_transforms() {
    const auto start = Clock::now();
    const auto c = verify::check_mc_transforms(Factorization(reference::model_F()), mc_options());
    const double t = seconds_since(start);
    return {c.passed && t < 180.0, c.detail + ", runtime " + fmt(t) + " s" + z_list(c.reports)};
}

Outcome martingales() {
    const auto c = verify::check_martingales(Factorization(reference::model_F()), mc_options());
    return {c.passed, c.detail + z_list(c.reports)};
}

Outcome moment_recursion() {
    const auto c = verify::check_moment_recursion(Factorization(reference::model_F()), mc_options(), 1, 1.0);
    return {c.passed, c.detail + z_list(c.reports)};
}

Outcome sup_moments() {
    const auto c = verify::check_sup_moments(Factorization(reference::model_F()), mc_options());
    return {c.passed, c.detail + z_list(c.reports)};
}

Outcome seam() { return from(verify::check_seam(reference::model_B(1.0, 1.0), 0.5, 1.0, 1.0)); }

Outcome sup_law() { return from(verify::check_sup_law(reference::model_F(), mc_options(), 100000)); }

Outcome infinite_variation() {
    const auto model = reference::model_B();
    auto o = mc_options();
    o.n = 50000;
    o.sim.step = 1e-3;
    const Factorization f(model);
    auto reports = mc::estimate_many(
        model, o.y, {mc::functionals::lt_T0(1.0), mc::functionals::of_J([](double j) { return j; }, "J")}, o.n,
        o.seed, o.sim);
    reports[0].compare(f.laplace_T0(o.y, 1.0, T0Method::Integrated), verify::bias_allowance(model, o.sim));
    const bool ok = reports[0].within(o.z_max) && reports[1].estimate > 0.99;
    return {ok, "E[exp(-T0)] estimate " + fmt(reports[0].estimate) + " analytic " + fmt(*reports[0].analytic) +
                    " stderr " + fmt(reports[0].std_error) + " excess z " + fmt(std::abs(*reports[0].z)) + " (allowance " +
                    fmt(verify::bias_allowance(model, o.sim)) + "), mean J " + fmt(reports[1].estimate)};
}

Outcome figure_csv() {
    const std::string command = std::string("\"") + PSSMP_CLI_PATH + "\" figure1";
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return {false, "cannot run " + command};
    std::string text;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) text.append(buf, got);
    const int status = pclose(pipe);
    if (status != 0) return {false, "figure1 exited with status " + std::to_string(status)};
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "j,value") return {false, "unexpected header \"" + line + "\""};
    std::vector<double> values;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) return {false, "malformed row \"" + line + "\""};
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    bool bounded = !values.empty();
    double max_step = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        bounded = bounded && values[i] >= 0.0 && values[i] <= 1.0;
        if (i) max_step = std::max(max_step, std::abs(values[i] - values[i - 1]));
    }
    return {bounded && max_step < 0.05, std::to_string(values.size()) + " rows, all in [0,1]: " +
                                            (bounded ? "yes" : "no") + ", max adjacent difference " + fmt(max_step)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"zero-rate reductions on F and B", zero_rate_reductions},
        {"golden-ratio spot values on F", golden_ratio},
        {"two-route absorption transform", two_route},
        {"MC agreement of factorization transforms on F", mc_transforms},
        {"martingale checks on F", martingales},
        {"moment recursion on F", moment_recursion},
        {"supremum-moment transform on F", sup_moments},
        {"degeneracy seam continuity on B with alpha = 1", seam},
        {"exponential supremum law (KS) on F", sup_law},
        {"infinite-variation sanity on B", infinite_variation},
        {"figure CSV bounds and smoothness", figure_csv},
    };
    int failures = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        const auto start = Clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        failures += out.passed ? 0 : 1;
        std::cout << "criterion " << index << " [" << (out.passed ? "PASS" : "FAIL") << "] " << c.name << " ("
                  << fmt(seconds_since(start)) << " s): " << out.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
