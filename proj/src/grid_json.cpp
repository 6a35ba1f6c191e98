#include "cbbl/grid_json.hpp"

#include "cbbl/errors.hpp"

#include <cmath>

namespace cbbl {

GridSpec grid_from_json(const nlohmann::json& j, const GridSpec& defaults) {
    if (!j.is_object()) throw ConfigError("grid config must be a JSON object");

    double alpha = defaults.alpha();
    int n = defaults.n();
    GridMode mode = defaults.mode();
    double beta = defaults.in_beta();
    bool literal = defaults.paper_literal();

    for (const auto& [key, value] : j.items()) {
        if (key == "alpha") {
            if (!value.is_number()) throw ConfigError("grid.alpha must be a number");
            alpha = value.get<double>();
        } else if (key == "n") {
            if (!value.is_number_integer()) throw ConfigError("grid.n must be an integer");
            n = value.get<int>();
        } else if (key == "mode") {
            if (!value.is_string()) throw ConfigError("grid.mode must be a string");
            mode = grid_mode_from_string(value.get<std::string>());
        } else if (key == "in_beta") {
            if (!value.is_number()) throw ConfigError("grid.in_beta must be a number");
            beta = value.get<double>();
        } else if (key == "paper_literal") {
            if (!value.is_boolean()) throw ConfigError("grid.paper_literal must be a boolean");
            literal = value.get<bool>();
        } else {
            throw ConfigError("unknown grid field '" + key + "'");
        }
    }
    return GridSpec(alpha, n, mode, beta, literal);
}

nlohmann::json grid_to_json(const GridSpec& spec) {
    nlohmann::json j = {
        {"alpha", spec.alpha()},
        {"n", spec.n()},
        {"mode", std::string(to_string(spec.mode()))},
        {"in_beta", spec.in_beta()},
    };
    if (spec.paper_literal()) j["paper_literal"] = true;
    return j;
}

GridSpec grid_from_json_string(const std::string& text, const GridSpec& defaults) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("grid config is not valid JSON: ") + e.what());
    }
    return grid_from_json(j, defaults);
}

} // namespace cbbl
