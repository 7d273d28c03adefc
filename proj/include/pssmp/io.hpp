#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pssmp/errors.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/montecarlo.hpp"

namespace pssmp::io {

using json = nlohmann::json;

namespace detail {

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ModelError(where + ": expected an object");
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ModelError(where + ": unknown field \"" + key + "\"");
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ModelError(where + ": missing field \"" + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ModelError(where + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

inline SimpleJumpLaw parse_simple(const json& j, const std::string& where) {
    require_object(j, where);
    if (!j.contains("type") || !j.at("type").is_string()) throw ModelError(where + ": missing string field \"type\"");
    const auto type = j.at("type").get<std::string>();
    if (type == "exp_neg") {
        reject_unknown(j, {"type", "rate", "weight"}, where);
        return ExponentialJumps{number(j, "rate", where)};
    }
    if (type == "point_neg") {
        reject_unknown(j, {"type", "size", "weight"}, where);
        return PointMassJumps{number(j, "size", where)};
    }
    throw ModelError(where + ": unknown jump type \"" + type + "\" (expected exp_neg, point_neg or mixture)");
}

inline JumpSizeLaw parse_size_law(const json& j) {
    const std::string where = "jumps.size_law";
    require_object(j, where);
    if (j.contains("type") && j.at("type") == "mixture") {
        reject_unknown(j, {"type", "components"}, where);
        if (!j.contains("components") || !j.at("components").is_array())
            throw ModelError(where + ": mixture needs an array \"components\"");
        MixtureJumps mix;
        std::size_t i = 0;
        for (const auto& c : j.at("components")) {
            const std::string cw = where + ".components[" + std::to_string(i++) + "]";
            require_object(c, cw);
            mix.components.emplace_back(number(c, "weight", cw), parse_simple(c, cw));
        }
        return mix;
    }
    reject_unknown(j, {"type", "rate", "size"}, where);
    return std::visit([](const auto& s) -> JumpSizeLaw { return s; }, parse_simple(j, where));
}

inline json simple_to_json(const SimpleJumpLaw& law) {
    return std::visit(pssmp::detail::overloaded{
                          [](const ExponentialJumps& e) { return json{{"type", "exp_neg"}, {"rate", e.rate}}; },
                          [](const PointMassJumps& c) { return json{{"type", "point_neg"}, {"size", c.size}}; }},
                      law);
}

}  // namespace detail

/// Builds a model from the schema
/// {"sigma2", "drift", "jumps": {"intensity", "size_law"}, "p", "alpha"};
/// `size_law` may be omitted when the intensity is zero. Unknown fields are rejected.
inline PssmpModel parse_model(const json& j) {
    detail::require_object(j, "model");
    detail::reject_unknown(j, {"sigma2", "drift", "jumps", "p", "alpha"}, "model");
    const double sigma2 = detail::number(j, "sigma2", "model");
    const double drift = detail::number(j, "drift", "model");
    const double p = detail::number(j, "p", "model");
    const double alpha = detail::number(j, "alpha", "model");
    if (!j.contains("jumps")) throw ModelError("model: missing field \"jumps\"");
    const auto& jj = j.at("jumps");
    detail::require_object(jj, "jumps");
    detail::reject_unknown(jj, {"intensity", "size_law"}, "jumps");
    JumpSpec spec;
    spec.intensity = detail::number(jj, "intensity", "jumps");
    if (jj.contains("size_law"))
        spec.size_law = detail::parse_size_law(jj.at("size_law"));
    else if (spec.intensity != 0.0)
        throw ModelError("jumps: \"size_law\" is required when the intensity is positive");
    return PssmpModel(LevyModel(sigma2, drift, spec), p, alpha);
}

inline PssmpModel parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("model file is not valid JSON: ") + e.what());
    }
    return parse_model(j);
}

inline PssmpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

inline json to_json(const PssmpModel& m) {
    const auto& levy = m.levy();
    json jumps{{"intensity", levy.jumps().intensity}};
    if (levy.jumps().intensity > 0.0) {
        jumps["size_law"] = std::visit(
            pssmp::detail::overloaded{[](const ExponentialJumps& e) { return detail::simple_to_json(e); },
                                      [](const PointMassJumps& c) { return detail::simple_to_json(c); },
                                      [](const MixtureJumps& mix) {
                                          json comps = json::array();
                                          for (const auto& [w, comp] : mix.components) {
                                              json c = detail::simple_to_json(comp);
                                              c["weight"] = w;
                                              comps.push_back(c);
                                          }
                                          return json{{"type", "mixture"}, {"components", comps}};
                                      }},
            levy.jumps().size_law);
    }
    return json{{"sigma2", levy.sigma2()}, {"drift", levy.drift()}, {"jumps", jumps}, {"p", m.p()}, {"alpha", m.alpha()}};
}

/// {functional, estimate, stderr, n, seed, analytic, z}; absent values are null.
inline json to_json(const mc::EstimatorReport& r) {
    json j{{"functional", r.functional}, {"estimate", r.estimate}, {"stderr", r.std_error}, {"n", r.n},
           {"seed", r.seed}, {"analytic", nullptr}, {"z", nullptr}};
    if (r.analytic) j["analytic"] = *r.analytic;
    if (r.z && std::isfinite(*r.z)) j["z"] = *r.z;
    return j;
}

}  // namespace pssmp::io
