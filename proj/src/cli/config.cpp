#include "robustqm/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace robustqm::cli {

namespace {

enum class Kind { number, integer, string, boolean, number_list };

struct ParamSpec {
    std::string name;
    Kind kind;
    Json fallback;  // null: required unless `optional`
    std::vector<std::string> choices = {};
    bool optional = false;
};

const char* kind_name(Kind k) {
    switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::string: return "a string";
    case Kind::boolean: return "true or false";
    case Kind::number_list: return "an array of numbers";
    }
    return "?";
}

std::vector<ParamSpec> units(bool electromagnetic) {
    std::vector<ParamSpec> u{{"hbar", Kind::number, 1.0},
                             {"mass", Kind::number, 1.0},
                             {"lambda", Kind::number, nullptr, {}, true},
                             {"default_units", Kind::boolean, true}};
    if (electromagnetic) {
        u.push_back({"charge", Kind::number, 1.0});
        u.push_back({"light_speed", Kind::number, 1.0});
    }
    return u;
}

std::vector<ParamSpec> model_params() {
    return {{"model", Kind::string, "singlet", {"singlet", "triplet_z0", "general"}},
            {"K", Kind::integer, 1},
            {"phi", Kind::number, std::numbers::pi}};
}

const std::map<std::string, std::vector<ParamSpec>>& schemas() {
    static const auto table = [] {
        std::map<std::string, std::vector<ParamSpec>> s;
        auto join = [](std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        };
        s["eprb-scan"] = join(model_params(), {{"theta_min", Kind::number, 0.0},
                                               {"theta_max", Kind::number, std::numbers::pi},
                                               {"steps", Kind::integer, 64},
                                               {"N", Kind::integer, 100000}});
        s["eprb-simulate"] =
            join(model_params(), {{"theta", Kind::number, nullptr}, {"N", Kind::integer, nullptr}});
        s["sg-scan"] = {{"theta_min", Kind::number, 0.0},
                        {"theta_max", Kind::number, std::numbers::pi},
                        {"steps", Kind::integer, 64},
                        {"N", Kind::integer, 100000},
                        {"branch", Kind::integer, 1}};
        s["evidence"] = join(model_params(),
                             {{"theta", Kind::number, nullptr},
                              {"N", Kind::number, 1e6},
                              {"epsilons", Kind::number_list, Json::array({1e-2, 5e-3, 2.5e-3})}});
        s["appendix-a"] = {{"m_values", Kind::number_list, Json::array({2, 3})},
                           {"N_max", Kind::integer, 12},
                           {"tables", Kind::integer, 100}};
        const std::vector<ParamSpec> stationary_grid{
            {"potential", Kind::string, "harmonic", {"harmonic", "well"}},
            {"omega", Kind::number, 1.0},
            {"x_min", Kind::number, -10.0},
            {"x_max", Kind::number, 10.0},
            {"n_points", Kind::integer, 1001}};
        s["tise-solve"] = join(join(stationary_grid, {{"n_states", Kind::integer, 5}}), units(false));
        s["tise-minimize"] = join(join(stationary_grid, {{"energy", Kind::number, nullptr, {}, true},
                                                         {"max_iter", Kind::integer, 20000},
                                                         {"tol", Kind::number, 1e-11}}),
                                  units(false));
        s["tdse-run"] = join({{"potential", Kind::string, "free", {"free", "harmonic"}},
                              {"omega", Kind::number, 1.0},
                              {"x_min", Kind::number, -20.0},
                              {"x_max", Kind::number, 20.0},
                              {"n_points", Kind::integer, 2001},
                              {"dt", Kind::number, 1e-3},
                              {"t_final", Kind::number, 2.0},
                              {"x0", Kind::number, 0.0},
                              {"sigma", Kind::number, 1.0},
                              {"k0", Kind::number, 0.0},
                              {"sample_stride", Kind::integer, 100}},
                             units(true));
        s["gauge-check"] = join({{"x_min", Kind::number, -20.0},
                                 {"x_max", Kind::number, 20.0},
                                 {"h", Kind::number, 0.01},
                                 {"dt", Kind::number, 1e-3},
                                 {"t_final", Kind::number, 1.0},
                                 {"sigma", Kind::number, 1.0},
                                 {"k0", Kind::number, 0.0},
                                 {"chi_amplitude", Kind::number, 1.0},
                                 {"chi_frequency", Kind::number, 1.0},
                                 {"levels", Kind::integer, 3}},
                                units(true));
        return s;
    }();
    return table;
}

bool integral(const Json& v) {
    if (v.is_number_integer()) return true;
    if (!v.is_number_float()) return false;
    const double d = v.get<double>();
    return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15;
}

bool matches(const Json& v, Kind k) {
    switch (k) {
    case Kind::number: return v.is_number() && std::isfinite(v.get<double>());
    case Kind::integer: return integral(v);
    case Kind::string: return v.is_string();
    case Kind::boolean: return v.is_boolean();
    case Kind::number_list:
        return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) {
                   return e.is_number() && std::isfinite(e.get<double>());
               });
    }
    return false;
}

void check_units(Json& p, std::vector<Diagnostic>& diags) {
    if (!p.contains("hbar")) return;
    const double hbar = p["hbar"].get<double>();
    const double mass = p["mass"].get<double>();
    if (!(hbar > 0.0)) diags.push_back({"parameters.hbar", "must be positive"});
    if (!(mass > 0.0)) diags.push_back({"parameters.mass", "must be positive"});
    if (p.contains("light_speed") && !(p["light_speed"].get<double>() > 0.0))
        diags.push_back({"parameters.light_speed", "must be positive"});
    if (!(hbar > 0.0)) return;
    const double rule = 4.0 / (hbar * hbar);
    if (!p.contains("lambda")) {
        p["lambda"] = rule;
        return;
    }
    const double lambda = p["lambda"].get<double>();
    if (!(lambda > 0.0)) {
        diags.push_back({"parameters.lambda", "must be positive"});
    } else if (p["default_units"].get<bool>() && std::abs(lambda - rule) > 1e-12 * rule) {
        std::ostringstream msg;
        msg << "lambda = " << lambda << " breaks the rule lambda = 4/hbar^2 (= " << rule
            << " for hbar = " << hbar << ") required while default_units is true";
        diags.push_back({"parameters.lambda", msg.str()});
    }
}

void check_ranges(const std::string& experiment, const Json& p, std::vector<Diagnostic>& diags) {
    auto positive = [&](const char* key) {
        if (p.contains(key) && !(p[key].get<double>() > 0.0))
            diags.push_back({std::string("parameters.") + key, "must be positive"});
    };
    for (const char* key : {"N", "steps", "n_points", "n_states", "max_iter", "tables", "N_max",
                            "dt", "sigma", "h", "tol", "sample_stride", "levels", "omega"})
        positive(key);
    if (p.contains("n_points") && p["n_points"].get<double>() < 3)
        diags.push_back({"parameters.n_points", "needs at least 3 nodes"});
    if (p.contains("x_min") && p.contains("x_max") &&
        !(p["x_max"].get<double>() > p["x_min"].get<double>()))
        diags.push_back({"parameters.x_max", "must exceed x_min"});
    if (p.contains("theta_min") && p.contains("theta_max") &&
        p["theta_max"].get<double>() < p["theta_min"].get<double>())
        diags.push_back({"parameters.theta_max", "must not be below theta_min"});
    if (p.contains("branch") && std::abs(p["branch"].get<double>()) != 1.0)
        diags.push_back({"parameters.branch", "must be +1 or -1"});
    if (p.contains("K") && p["K"].get<double>() < 1)
        diags.push_back({"parameters.K", "must be at least 1"});
    if (experiment == "appendix-a") {
        for (std::size_t i = 0; i < p["m_values"].size(); ++i) {
            const Json& m = p["m_values"][i];
            if (!integral(m) || m.get<double>() < 2)
                diags.push_back({"parameters.m_values[" + std::to_string(i) + "]",
                                 "must be an integer >= 2"});
        }
    }
    if (experiment == "evidence" && p["epsilons"].empty())
        diags.push_back({"parameters.epsilons", "must not be empty"});
    if (p.contains("t_final") && !(p["t_final"].get<double>() >= 0.0))
        diags.push_back({"parameters.t_final", "must be nonnegative"});
}

} // namespace

bool is_stochastic(const std::string& experiment) {
    return experiment == "eprb-scan" || experiment == "eprb-simulate" || experiment == "sg-scan" ||
           experiment == "appendix-a";
}

std::string RunConfig::canonical() const {
    Json j;
    j["experiment"] = experiment;
    j["parameters"] = parameters;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    return j.dump();
}

std::string to_string(const Diagnostic& d) {
    return d.path.empty() ? d.message : d.path + ": " + d.message;
}

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
          std::string s = "invalid config";
          for (const auto& d : diagnostics) s += "\n  " + to_string(d);
          return s;
      }()),
      diagnostics_(std::move(diagnostics)) {}

RunConfig validate_config(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        // locate the byte offset as line and column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(std::vector<Diagnostic>{{"", "line " + std::to_string(line) + " column " +
                                    std::to_string(col) + ": malformed JSON (" + e.what() + ")"}});
    }

    std::vector<Diagnostic> diags;
    if (!doc.is_object()) throw ConfigError(std::vector<Diagnostic>{{"", "top level must be a JSON object"}});

    for (const auto& [key, value] : doc.items())
        if (key != "experiment" && key != "seed" && key != "output_dir" && key != "parameters")
            diags.push_back({key, "unknown key"});

    RunConfig cfg;
    if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
        diags.push_back({"experiment", "required string naming the experiment"});
    } else {
        cfg.experiment = doc["experiment"].get<std::string>();
        if (!schemas().contains(cfg.experiment)) {
            std::string known;
            for (const auto& k : experiment_kinds()) known += (known.empty() ? "" : ", ") + k;
            diags.push_back({"experiment", "unknown experiment '" + cfg.experiment +
                                               "' (expected one of " + known + ")"});
        }
    }

    if (doc.contains("seed")) {
        const Json& s = doc["seed"];
        if (s.is_number_unsigned())
            cfg.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<std::int64_t>() >= 0)
            cfg.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
        else
            diags.push_back({"seed", "must be a nonnegative 64-bit integer"});
    }
    if (doc.contains("output_dir")) {
        if (doc["output_dir"].is_string())
            cfg.output_dir = doc["output_dir"].get<std::string>();
        else
            diags.push_back({"output_dir", "must be a string"});
    }

    Json given = Json::object();
    if (doc.contains("parameters")) {
        if (doc["parameters"].is_object())
            given = doc["parameters"];
        else
            diags.push_back({"parameters", "must be an object"});
    }

    const auto schema = schemas().find(cfg.experiment);
    if (schema != schemas().end()) {
        if (is_stochastic(cfg.experiment) && !cfg.seed && !doc.contains("seed"))
            diags.push_back({"seed", "required for the stochastic experiment " + cfg.experiment});
        for (const auto& [key, value] : given.items()) {
            const bool known = std::any_of(schema->second.begin(), schema->second.end(),
                                           [&](const ParamSpec& s) { return s.name == key; });
            if (!known) diags.push_back({"parameters." + key, "unknown key"});
        }
        Json filled = Json::object();
        for (const auto& spec : schema->second) {
            const std::string path = "parameters." + spec.name;
            if (given.contains(spec.name)) {
                const Json& v = given[spec.name];
                if (!matches(v, spec.kind)) {
                    diags.push_back({path, std::string("must be ") + kind_name(spec.kind)});
                    continue;
                }
                if (!spec.choices.empty() &&
                    std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) ==
                        spec.choices.end()) {
                    std::string list;
                    for (const auto& c : spec.choices) list += (list.empty() ? "" : ", ") + c;
                    diags.push_back({path, "must be one of " + list});
                    continue;
                }
                filled[spec.name] =
                    spec.kind == Kind::integer ? Json(static_cast<std::int64_t>(v.get<double>())) : v;
            } else if (!spec.fallback.is_null()) {
                filled[spec.name] = spec.fallback;
            } else if (!spec.optional) {
                diags.push_back({path, "required parameter is missing"});
            }
        }
        if (diags.empty()) {
            check_units(filled, diags);
            check_ranges(cfg.experiment, filled, diags);
        }
        cfg.parameters = std::move(filled);
    }

    if (!diags.empty()) throw ConfigError(std::move(diags));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::vector<Diagnostic>{{"", "cannot read config file " + path}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return validate_config(buf.str());
}

} // namespace robustqm::cli
