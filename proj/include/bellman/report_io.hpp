#pragma once

#include <string>

#include <json.hpp>

#include "bellman/diagnostics.hpp"
#include "bellman/problem.hpp"

namespace bellman {

nlohmann::json to_json(const RegularityReport& r);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const EllipticLimitReport& r);
nlohmann::json to_json(const ObstacleResiduals& r);
nlohmann::json to_json(const ValidationReport& r);

/// Aligned-column text rendering for humans.
std::string to_text(const RegularityReport& r);
std::string to_text(const ConvergenceReport& r);

/// Plot-ready CSV with columns h, tau, sup_error, order_pairwise.
std::string convergence_csv(const ConvergenceReport& r);

/// Writes `j` (report plus embedded resolved config) to path as JSON.
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bellman
