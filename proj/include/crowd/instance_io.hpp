#pragma once

#include <string>

#include <json.hpp>

#include "crowd/core.hpp"

namespace crowd {

// Instance file:
//   { "classes": [ { "name": "...", "price": 2.5, "confusion": [[c00, c01], [c10, c11]] } ],
//     "prior": [w0, w1], "pricing": "explicit" | "P1" }
// Matrices are column-stochastic: column j is the true label, so c(j) = confusion[j][j].
// Under "P1" the price fields are ignored and recomputed.

/// Throws ConfigError naming `source` on any schema violation.
Instance instance_from_json(const nlohmann::json& doc, const std::string& source = "<json>",
                            std::string name = {});
Instance load_instance(const std::string& path);

/// Always written with explicit prices so a round trip preserves them exactly.
nlohmann::json instance_to_json(const Instance& instance);
void save_instance(const Instance& instance, const std::string& path);

/// The five confusion matrices of the bundled case study, P1 prices, uniform prior.
Instance bundled_p1_asym();

/// Diagonals averaged per class, repriced under P1.
Instance symmetrize(const Instance& instance, std::string name = {});

inline Instance bundled_p1_sym() { return symmetrize(bundled_p1_asym(), "P1-Sym"); }

/// Copy of `classes` repriced with p1_price.
Instance reprice_p1(const Instance& instance);

}  // namespace crowd
