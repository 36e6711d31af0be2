#pragma once

#include "json.hpp"

#include <string>
#include <vector>

#include "sosr/grounding.hpp"
#include "sosr/learner.hpp"
#include "sosr/oracle.hpp"
#include "sosr/partial.hpp"

namespace sosr {

using nlohmann::json;

constexpr int kReportSchema = 1;

// Rounded to 12 significant digits so reports are byte-stable.
json number(double x);

json to_json(const GroundConstraintSet& gnd);
json to_json(const std::vector<LiftClass>& classes);
json to_json(const MomentIntervalTable& table);
json to_json(const DecisionReport& rep, bool timings);
json to_json(const OracleVerdict& v);
json to_json(const PartialModel& rho);

// {"schema": 1, "subcommand": ..., "config": ..., "result": ..., "warnings": [...]}
json envelope(const std::string& subcommand, json config, json result, const std::vector<std::string>& warnings = {});

// Two-space indentation, trailing newline; keys come out sorted.
std::string dump(const json& j);

}  // namespace sosr
