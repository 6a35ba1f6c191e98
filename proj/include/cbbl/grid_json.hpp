#ifndef CBBL_GRID_JSON_HPP
#define CBBL_GRID_JSON_HPP

#include "cbbl/grid.hpp"

#include <json.hpp>

#include <string>

namespace cbbl {

// GridSpec <-> {"alpha": 2, "n": 10, "mode": "uniform", "in_beta": 1.0}
// "paper_literal" (bool) is optional. Unknown keys and wrong types throw
// ConfigError; missing keys fall back to `defaults`.
GridSpec grid_from_json(const nlohmann::json& j, const GridSpec& defaults = GridSpec::uniform(2.0, 10));
nlohmann::json grid_to_json(const GridSpec& spec);

GridSpec grid_from_json_string(const std::string& text,
                               const GridSpec& defaults = GridSpec::uniform(2.0, 10));

} // namespace cbbl

#endif // CBBL_GRID_JSON_HPP
