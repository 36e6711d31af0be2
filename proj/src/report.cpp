#include "sosr/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace sosr {

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  double r = std::strtod(buf, nullptr);
  if (r == 0) r = 0;  // no "-0.0"
  return r;
}

json to_json(const GroundConstraintSet& gnd) {
  json j;
  json logical = json::array(), expectation = json::array(), rules = json::array();
  for (const auto& g : gnd.logical) logical.push_back(g.str());
  for (const auto& g : gnd.expectation) expectation.push_back(g.str());
  for (const auto& r : gnd.rules)
    rules.push_back({{"label", r.label}, {"premise", r.premise.str()}, {"conclusion", r.conclusion.str()}});
  json universe = json::array();
  for (const auto& n : gnd.universe) universe.push_back(n.str());
  j["logical"] = logical;
  j["expectation"] = expectation;
  j["rules"] = rules;
  j["universe"] = universe;
  j["k"] = gnd.k;
  j["constants"] = gnd.constants;
  j["atoms"] = gnd.atoms().size();
  j["count"] = gnd.logical.size() + gnd.expectation.size() + gnd.rules.size();
  return j;
}

json to_json(const std::vector<LiftClass>& classes) {
  json out = json::array();
  for (const auto& c : classes) {
    json members = json::array();
    for (const auto& m : c.members) members.push_back(m.str());
    out.push_back({{"representative", c.representative.str()}, {"members", members}});
  }
  return out;
}

json to_json(const MomentIntervalTable& table) {
  json entries = json::array();
  for (const auto& e : table.entries)
    entries.push_back({{"monomial", e.representative.str()},
                       {"members", e.members},
                       {"lower", number(e.lower)},
                       {"upper", number(e.upper)},
                       {"global", {to_string(e.global.lo), to_string(e.global.hi)}},
                       {"widened", {to_string(e.widened.lo), to_string(e.widened.hi)}}});
  return {{"entries", entries},
          {"slack", number(table.slack)},
          {"m", table.m},
          {"distinct_examples", table.distinct_examples}};
}

json to_json(const DecisionReport& rep, bool timings) {
  json j;
  j["verdict"] = verdict_name(rep.verdict);
  j["query"] = rep.query;
  j["mode"] = rep.mode == DecideMode::Hypothesis ? "hypothesis" : "prove";
  j["k"] = rep.k;
  j["degree"] = rep.degree;
  j["atoms"] = rep.atoms;
  j["lift_classes"] = rep.lift_classes;
  j["constants"] = rep.constants;
  j["refuted_by"] = rep.refuted_by;
  j["certificate"] = rep.certificate ? to_json(*rep.certificate) : json(nullptr);
  json goals = json::array();
  for (const auto& g : rep.goals)
    goals.push_back({{"label", g.label}, {"verdict", feasibility_name(g.verdict)}, {"stage", g.stage}, {"t", number(g.t)}});
  j["goals"] = goals;
  json rules = json::array();
  for (const auto& r : rep.rules) {
    json o = {{"label", r.label}, {"premise", r.premise}, {"conclusion", r.conclusion}, {"proved", r.proved}};
    if (r.certificate) o["certificate"] = to_json(*r.certificate);
    rules.push_back(std::move(o));
  }
  j["rules"] = rules;
  j["moment_table"] = rep.table ? to_json(*rep.table) : json(nullptr);
  j["slack"] = {{"printed", number(rep.slack_printed)},
                {"textbook", number(rep.slack_textbook)},
                {"used", rep.table ? number(rep.table->slack) : json(nullptr)}};
  j["sample_complexity_log10"] = number(rep.sample_complexity_log10);
  if (rep.witnessing) {
    json per = json::array();
    for (const auto& [label, f] : rep.witnessing->per_constraint) per.push_back({{"constraint", label}, {"fraction", number(f)}});
    j["witnessing"] = {{"joint", number(rep.witnessing->joint)}, {"per_constraint", per}};
  } else {
    j["witnessing"] = nullptr;
  }
  if (timings) {
    json t;
    for (const auto& [k, v] : rep.timings) t[k] = number(v);
    j["timings"] = t;
  }
  return j;
}

json to_json(const PartialModel& rho) {
  json j = json::object();
  for (const auto& [a, v] : rho.values) j[a.str()] = v ? json(to_string(*v)) : json(nullptr);
  return j;
}

json to_json(const OracleVerdict& v) {
  json dist = json::array();
  for (const auto& [p, w] : v.distribution) {
    json world = json::object();
    for (const auto& [a, x] : w) world[a.str()] = to_string(x);
    dist.push_back({{"probability", to_string(p)}, {"world", world}});
  }
  return {{"satisfiable", v.satisfiable}, {"exact", v.exact}, {"worlds", v.worlds}, {"distribution", dist}};
}

json envelope(const std::string& subcommand, json config, json result, const std::vector<std::string>& warnings) {
  return {{"schema", kReportSchema},
          {"subcommand", subcommand},
          {"config", std::move(config)},
          {"result", std::move(result)},
          {"warnings", warnings}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace sosr
