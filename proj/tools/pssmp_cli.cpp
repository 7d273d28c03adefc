#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pssmp/pssmp.hpp"

namespace {

using pssmp::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

/// Rounds to 15 significant digits so that JSON output matches the CSV rendering.
double round15(double v) { return std::isfinite(v) ? std::stod(fmt(v)) : v; }

/// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw pssmp::DomainError("--" + flag + ": cannot parse \"" + s + "\"");
        }
        if (used != s.size() || !std::isfinite(v)) throw pssmp::DomainError("--" + flag + ": cannot parse \"" + s + "\"");
        return v;
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw pssmp::DomainError("--" + flag + ": range syntax is a:b:step");
        const double a = number(parts[0]);
        const double b = number(parts[1]);
        const double step = number(parts[2]);
        if (!(step > 0.0) || b < a) throw pssmp::DomainError("--" + flag + ": need step > 0 and b >= a");
        const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
        if (count > 10'000'000) throw pssmp::DomainError("--" + flag + ": grid too large");
        for (long i = 0; i <= count; ++i) out.push_back(a + double(i) * step);
    } else {
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
    }
    if (out.empty()) throw pssmp::DomainError("--" + flag + ": empty grid");
    return out;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_text(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) throw pssmp::DomainError("cannot open output file " + out);
    file << text;
}

std::string render(const Table& t, const std::string& format) {
    std::ostringstream os;
    if (format == "csv") {
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
            os << '\n';
        }
        return os.str();
    }
    json arr = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            obj[t.columns[i]] = std::isfinite(row[i]) ? json(round15(row[i])) : json(nullptr);
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

/// Cartesian product of the named grids, calling `fn` with one value per grid.
void for_each_point(const std::vector<std::vector<double>>& grids, const std::function<void(const std::vector<double>&)>& fn) {
    std::vector<double> point(grids.size());
    std::function<void(std::size_t)> rec = [&](std::size_t level) {
        if (level == grids.size()) {
            fn(point);
            return;
        }
        for (double v : grids[level]) {
            point[level] = v;
            rec(level + 1);
        }
    };
    rec(0);
}

struct Common {
    std::string model_path;
    std::string out;
    std::string format = "csv";
};

struct Grids {
    std::string y = "1", d = "1", beta = "1", gamma = "1", j = "0.5", sup = "1", k = "1", lambda = "1", q = "1", x = "1";
};

void add_output_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out, "Output file (default: stdout)");
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

Table run_eval(const std::string& op, const pssmp::PssmpModel& model, const Grids& g) {
    using namespace pssmp;
    const auto& levy = model.levy();
    auto grid = [&](const std::string& text, const char* flag) { return parse_grid(text, flag); };
    Table t;
    auto sweep = [&](std::vector<std::string> names, std::vector<std::vector<double>> grids,
                     std::vector<std::string> outputs, const std::function<std::vector<double>(const std::vector<double>&)>& f) {
        t.columns = names;
        t.columns.insert(t.columns.end(), outputs.begin(), outputs.end());
        for_each_point(grids, [&](const std::vector<double>& p) {
            auto row = p;
            const auto values = f(p);
            row.insert(row.end(), values.begin(), values.end());
            t.rows.push_back(row);
        });
    };
    if (op == "psi")
        sweep({"lambda"}, {grid(g.lambda, "lambda")}, {"value"}, [&](auto& p) { return std::vector{psi(levy, p[0])}; });
    else if (op == "psi_prime")
        sweep({"lambda"}, {grid(g.lambda, "lambda")}, {"value"}, [&](auto& p) { return std::vector{psi_prime(levy, p[0])}; });
    else if (op == "phi")
        sweep({"q"}, {grid(g.q, "q")}, {"value"}, [&](auto& p) { return std::vector{phi(levy, p[0])}; });
    else if (op == "at_sup_atom")
        sweep({}, {}, {"value"}, [&](auto&) { return std::vector{at_sup_atom(model)}; });
    else {
        const Factorization f(model);
        const auto& s = f.series();
        if (op == "eval_J")
            sweep({"x"}, {grid(g.x, "x")}, {"value"}, [&](auto& p) { return std::vector{double(s.eval_J(p[0]))}; });
        else if (op == "eval_I")
            sweep({"x"}, {grid(g.x, "x")}, {"value"}, [&](auto& p) { return std::vector{double(s.eval_I(p[0]))}; });
        else if (op == "eval_K")
            sweep({"x"}, {grid(g.x, "x")}, {"value"}, [&](auto& p) { return std::vector{double(s.eval_K(p[0]))}; });
        else if (op == "eval_kJ")
            sweep({"x"}, {grid(g.x, "x")}, {"value"}, [&](auto& p) { return std::vector{double(s.eval_kJ(p[0]))}; });
        else if (op == "eval_kI")
            sweep({"x"}, {grid(g.x, "x")}, {"value"}, [&](auto& p) { return std::vector{double(s.eval_kI(p[0]))}; });
        else if (op == "const_C")
            sweep({}, {}, {"value"}, [&](auto&) { return std::vector{s.const_C()}; });
        else if (op == "big_M")
            sweep({"y", "d", "beta"}, {grid(g.y, "y"), grid(g.d, "d"), grid(g.beta, "beta")}, {"value"},
                  [&](auto& p) { return std::vector{f.big_M(p[0], p[1], p[2])}; });
        else if (op == "big_N")
            sweep({"y", "beta"}, {grid(g.y, "y"), grid(g.beta, "beta")}, {"value"},
                  [&](auto& p) { return std::vector{f.big_N(p[0], p[1])}; });
        else if (op == "exit_lt_Y")
            sweep({"y", "d", "gamma"}, {grid(g.y, "y"), grid(g.d, "d"), grid(g.gamma, "gamma")}, {"value"},
                  [&](auto& p) { return std::vector{f.exit_lt_Y(p[0], p[1], p[2])}; });
        else if (op == "laplace_L_given_sup")
            sweep({"y", "sup", "gamma"}, {grid(g.y, "y"), grid(g.sup, "sup"), grid(g.gamma, "gamma")}, {"value"},
                  [&](auto& p) { return std::vector{f.laplace_L_given_sup(p[0], p[1], p[2])}; });
        else if (op == "laplace_residual_given")
            sweep({"sup", "j", "beta"}, {grid(g.sup, "sup"), grid(g.j, "j"), grid(g.beta, "beta")}, {"value"},
                  [&](auto& p) { return std::vector{f.laplace_residual_given(p[0], p[1], p[2])}; });
        else if (op == "laplace_T0_given")
            sweep({"y", "sup", "j", "beta"},
                  {grid(g.y, "y"), grid(g.sup, "sup"), grid(g.j, "j"), grid(g.beta, "beta")}, {"value"},
                  [&](auto& p) { return std::vector{f.laplace_T0_given(p[0], p[1], p[2], p[3])}; });
        else if (op == "laplace_T0") {
            double worst = 0.0;
            sweep({"y", "beta"}, {grid(g.y, "y"), grid(g.beta, "beta")}, {"extension", "integrated", "rel_gap"},
                  [&](auto& p) {
                      const double e = f.laplace_T0(p[0], p[1], T0Method::Extension);
                      const double i = f.laplace_T0(p[0], p[1], T0Method::Integrated);
                      const double gap = std::abs(e - i) / std::abs(e);
                      worst = std::max(worst, gap);
                      return std::vector{e, i, gap};
                  });
            std::cerr << "max relative gap between methods: " << fmt(worst) << '\n';
        } else if (op == "sup_moment_transform")
            sweep({"y", "k", "gamma"}, {grid(g.y, "y"), grid(g.k, "k"), grid(g.gamma, "gamma")}, {"value"},
                  [&](auto& p) { return std::vector{f.sup_moment_transform(p[0], p[1], p[2])}; });
        else if (op == "jump_law")
            sweep({}, {}, {"atom", "continuous", "total"}, [&](auto&) {
                const auto law = f.jump_law();
                return std::vector{law.atom_mass(), law.continuous_mass(), law.integrate([](double) { return 1.0; })};
            });
        else
            throw DomainError("unknown operation " + op);
    }
    return t;
}

const std::vector<std::string> kOperations{
    "psi",       "psi_prime", "phi",         "at_sup_atom", "eval_J",    "eval_I",
    "eval_K",    "eval_kJ",   "eval_kI",     "const_C",     "big_M",     "big_N",
    "exit_lt_Y", "laplace_L_given_sup",      "laplace_residual_given",   "laplace_T0_given",
    "laplace_T0", "sup_moment_transform",    "jump_law"};

pssmp::Payoff make_payoff(const std::string& kind, double value, double exponent, double strike, const std::string& table) {
    using namespace pssmp;
    if (kind == "constant") return ConstantPayoff{value};
    if (kind == "power") return PowerPayoff{exponent};
    if (kind == "call") return CallPayoff{strike};
    if (kind == "digital") return DigitalPayoff{strike};
    TabulatedPayoff t;
    std::stringstream ss(table);
    for (std::string node; std::getline(ss, node, ',');) {
        const auto colon = node.find(':');
        if (colon == std::string::npos) throw DomainError("--table: nodes are s:v pairs separated by commas");
        t.s.push_back(parse_grid(node.substr(0, colon), "table").front());
        t.v.push_back(parse_grid(node.substr(colon + 1), "table").front());
    }
    return t;
}

json check_to_json(const pssmp::verify::CheckResult& c) {
    json reports = json::array();
    for (const auto& r : c.reports) reports.push_back(pssmp::io::to_json(r));
    return json{{"check", c.name}, {"passed", c.passed}, {"applicable", c.applicable}, {"detail", c.detail},
                {"reports", reports}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional Wiener-Hopf factorization at the maximum for spectrally negative "
                 "positive self-similar Markov processes"};
    app.require_subcommand(1);

    Common common;
    Grids grids;
    std::string op;
    auto* eval = app.add_subcommand("eval", "Evaluate one operation over a grid of arguments");
    eval->add_option("--model", common.model_path, "Model file (JSON)")->required();
    eval->add_option("--op", op, "Operation")->required()->check(CLI::IsMember(kOperations));
    eval->add_option("--y", grids.y, "Start value grid (a:b:step or comma list)")->capture_default_str();
    eval->add_option("--d", grids.d, "Upper level grid")->capture_default_str();
    eval->add_option("--beta", grids.beta, "Laplace variable of T0 / T0 - L")->capture_default_str();
    eval->add_option("--gamma", grids.gamma, "Laplace variable of L / T_d^+")->capture_default_str();
    eval->add_option("--j", grids.j, "Jump-at-maximum grid in (0, 1]")->capture_default_str();
    eval->add_option("--sup", grids.sup, "Supremum grid")->capture_default_str();
    eval->add_option("--k", grids.k, "Moment order grid")->capture_default_str();
    eval->add_option("--lambda", grids.lambda, "Argument of psi")->capture_default_str();
    eval->add_option("--q", grids.q, "Argument of Phi")->capture_default_str();
    eval->add_option("--x", grids.x, "Series argument grid")->capture_default_str();
    add_output_flags(eval, common);

    std::string fig_beta = "1";
    std::string fig_j = "0.005:0.995:0.005";
    auto* figure = app.add_subcommand("figure1", "Residual-time transform j -> M(j, 1) / (1 - j^Phi) for the reference model F");
    figure->add_option("--beta", fig_beta, "Laplace variable")->capture_default_str();
    figure->add_option("--j", fig_j, "Grid of j")->capture_default_str();
    add_output_flags(figure, common);

    pssmp::verify::Options vopt;
    std::size_t workers = 0;
    auto* verify = app.add_subcommand("verify", "Run the analytic-vs-Monte-Carlo verification suite");
    verify->add_option("--model", common.model_path, "Model file (JSON)")->required();
    verify->add_option("--n", vopt.n, "Replications")->capture_default_str()->check(CLI::Range(std::size_t{100}, std::size_t{1'000'000'000}));
    verify->add_option("--seed", vopt.seed, "Seed")->capture_default_str();
    verify->add_option("--step", vopt.sim.step, "Euler step (infinite variation)")->capture_default_str();
    verify->add_option("--y", vopt.y, "Start value")->capture_default_str();
    verify->add_option("--beta", vopt.beta, "Laplace variable of T0")->capture_default_str();
    verify->add_option("--gamma", vopt.gamma, "Laplace variable of L")->capture_default_str();
    verify->add_option("--workers", workers, "Worker threads (0: all cores)")->capture_default_str();
    add_output_flags(verify, common);

    double price_y = 1.0, rate = 0.05, value = 1.0, exponent = 1.0, strike = 1.5;
    std::string payoff_kind = "call", table;
    std::size_t price_n = 0;
    std::uint64_t price_seed = 1;
    double price_step = 1e-3;
    auto* price = app.add_subcommand("price", "Lookback payoff on the overall maximum, discounted to absorption");
    price->add_option("--model", common.model_path, "Model file (JSON)")->required();
    price->add_option("--y", price_y, "Start value")->capture_default_str();
    price->add_option("--r", rate, "Discount rate")->capture_default_str();
    price->add_option("--payoff", payoff_kind, "Payoff")
        ->check(CLI::IsMember({"constant", "power", "call", "digital", "table"}))
        ->capture_default_str();
    price->add_option("--value", value, "Constant payoff value")->capture_default_str();
    price->add_option("--exponent", exponent, "Power payoff exponent")->capture_default_str();
    price->add_option("--strike", strike, "Call / digital strike")->capture_default_str();
    price->add_option("--table", table, "Tabulated payoff nodes s:v,s:v,...");
    price->add_option("--n", price_n, "Monte Carlo replications for a cross-estimate (0: none, else >= 100)")->capture_default_str();
    price->add_option("--seed", price_seed, "Seed")->capture_default_str();
    price->add_option("--step", price_step, "Euler step (infinite variation)")->capture_default_str();
    add_output_flags(price, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*eval) {
            const auto model = pssmp::io::load_model(common.model_path);
            write_text(render(run_eval(op, model, grids), common.format), common.out);
            return kExitOk;
        }
        if (*figure) {
            const pssmp::Factorization f(pssmp::reference::model_F());
            Table t{{"j", "value"}, {}};
            for (double beta : parse_grid(fig_beta, "beta")) {
                if (!(beta >= 0.0)) throw pssmp::DomainError("--beta must be >= 0");
                for (double j : parse_grid(fig_j, "j")) t.rows.push_back({j, f.laplace_residual_given(1.0, j, beta)});
            }
            write_text(render(t, common.format), common.out);
            return kExitOk;
        }
        if (*verify) {
            const auto model = pssmp::io::load_model(common.model_path);
            vopt.sim.workers = static_cast<unsigned>(workers);
            const auto checks = pssmp::verify::run_all(model, vopt);
            bool ok = true;
            for (const auto& c : checks) ok = ok && c.passed;
            std::ostringstream os;
            if (common.format == "json") {
                json arr = json::array();
                for (const auto& c : checks) arr.push_back(check_to_json(c));
                os << json{{"model", pssmp::io::to_json(model)}, {"n", vopt.n}, {"seed", vopt.seed}, {"passed", ok},
                           {"checks", arr}}
                          .dump(2)
                   << '\n';
            } else {
                os << "check,status,detail\n";
                for (const auto& c : checks)
                    os << c.name << ',' << (!c.applicable ? "n/a" : c.passed ? "pass" : "FAIL") << ",\"" << c.detail
                       << "\"\n";
            }
            write_text(os.str(), common.out);
            return ok ? kExitOk : kExitVerification;
        }
        if (*price) {
            const auto model = pssmp::io::load_model(common.model_path);
            const auto payoff = make_payoff(payoff_kind, value, exponent, strike, table);
            const pssmp::Factorization f(model);
            const double analytic = f.lookback_price(price_y, rate, payoff);
            Table t{{"y", "r", "price"}, {{price_y, rate, analytic}}};
            if (price_n > 0) {
                if (price_n < 100) throw pssmp::DomainError("--n must be >= 100 for a Monte Carlo estimate");
                pssmp::mc::SimulationOptions sim;
                sim.step = price_step;
                auto report = pssmp::mc::estimate(
                    model, price_y,
                    pssmp::mc::functionals::discounted_payoff(
                        rate, [&](double s) { return pssmp::payoff_value(payoff, s); }, payoff_kind),
                    price_n, price_seed, sim);
                report.compare(analytic, pssmp::verify::bias_allowance(model, sim));
                t.columns.insert(t.columns.end(), {"mc_estimate", "mc_stderr", "z"});
                t.rows[0].insert(t.rows[0].end(), {report.estimate, report.std_error, *report.z});
            }
            write_text(render(t, common.format), common.out);
            return kExitOk;
        }
    } catch (const pssmp::ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitInput;
    } catch (const pssmp::DomainError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const pssmp::Unsupported& e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return kExitInput;
    } catch (const pssmp::NotFiniteVariation& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const pssmp::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
