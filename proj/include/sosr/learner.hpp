#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sosr/bounds.hpp"
#include "sosr/certificate.hpp"
#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"
#include "sosr/partial.hpp"
#include "sosr/sos.hpp"

namespace sosr {

enum class SlackVariant : std::uint8_t { Printed, Textbook, Max };
enum class DecideMode : std::uint8_t { Hypothesis, Prove };

std::string slack_variant_name(SlackVariant v);
SlackVariant parse_slack_variant(const std::string& s);

struct LearnerConfig {
  int degree = 2;
  int k = -1;  // -1: quantifier rank of the KB and query
  double delta = 0.01;
  double norm_bound = 1;  // S
  double eps_q = 1e-6;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;
  SlackVariant slack = SlackVariant::Max;
  DecideMode mode = DecideMode::Hypothesis;

  void validate() const;
};

// ln sum_{i<=d} C(2n, i).
double log_monomial_count(std::size_t n, int d);
// S sqrt(ln(C/delta)) / (2m)
double hoeffding_slack_printed(double s, double delta, std::size_t n, int d, std::size_t m);
// S sqrt(ln(2C/delta) / (2m))
double hoeffding_slack_textbook(double s, double delta, std::size_t n, int d, std::size_t m);
double hoeffding_slack(const LearnerConfig& cfg, std::size_t n, std::size_t m);

struct MomentInterval {
  Monomial representative;
  std::size_t members = 0;
  double lower = 0;  // average of per-example lower bounds, clamped
  double upper = 0;
  Interval global;
  Interval widened;  // [lower - slack, upper + slack], rounded outward
};

struct MomentIntervalTable {
  std::vector<MomentInterval> entries;  // graded order of representatives
  double slack = 0;
  std::size_t m = 0;
  std::size_t distinct_examples = 0;

  const MomentInterval* find(const Monomial& representative) const;
  // Widened intervals that are tighter than the global bounds.
  std::map<Monomial, Interval> informative() const;
};

// Per-example bounds for each class representative, averaged over the data,
// clamped to the global bounds and widened by `slack`. Examples are processed
// in parallel over cfg.threads workers; the fold is in example order.
MomentIntervalTable learn_moment_bounds(const std::vector<PartialModel>& data,
                                        const std::vector<GroundConstraint>& logical,
                                        const std::vector<LiftClass>& classes, const BoundsTable& table,
                                        const LearnerConfig& cfg, double slack);

enum class Verdict : std::uint8_t { Consistent, Refuted, Proved, Unproved, Unknown };
std::string verdict_name(Verdict v);

struct RuleOutcome {
  std::string label;
  std::string premise;
  std::string conclusion;
  bool proved = false;
  std::optional<Certificate> certificate;
};

struct GoalOutcome {
  std::string label;
  Feasibility verdict = Feasibility::Unknown;
  std::string stage;  // "instance", "query", "restricted" or "full"
  double t = 0;
};

struct WitnessStats {
  double joint = 0;
  std::vector<std::pair<std::string, double>> per_constraint;
};

struct DecisionReport {
  Verdict verdict = Verdict::Unknown;
  std::string query;
  DecideMode mode = DecideMode::Hypothesis;
  int k = 0;
  int degree = 2;
  std::size_t atoms = 0;
  std::size_t lift_classes = 0;
  std::set<std::string> constants;
  std::optional<Certificate> certificate;
  std::string refuted_by;
  std::vector<GoalOutcome> goals;
  std::vector<RuleOutcome> rules;
  std::optional<MomentIntervalTable> table;
  double slack_printed = 0;
  double slack_textbook = 0;
  double sample_complexity_log10 = 0;
  std::optional<WitnessStats> witnessing;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings;
};

// Grounding, bounds table and lift classes shared by learn and decide. Names
// in the data and the query become constants of the grounding.
struct PreparedRun {
  GroundConstraintSet gnd;
  int k = 0;
  std::set<std::string> lift_constants;
  std::vector<std::pair<std::string, GroundConstraint>> instances;  // hypothesis mode
  std::vector<RefutationGoal> goals;                                // prove mode
  std::set<Atom> atoms;
  BoundsTable bounds;
  std::vector<LiftClass> classes;
  std::vector<std::string> warnings;
};

PreparedRun prepare_run(const KnowledgeBase& kb, const std::optional<Query>& query,
                        const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                        const std::optional<std::vector<std::string>>& names = std::nullopt);

// Algorithm 1 with the rule pre-phase. Without a query the KB (plus data)
// itself is tested: Consistent or Refuted. `names` replaces the generic
// names by the given ones (used by the grounding sweep).
DecisionReport decide_consistency(const KnowledgeBase& kb, const std::optional<Query>& query,
                                  const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                                  const std::optional<std::vector<std::string>>& names = std::nullopt);

struct SweepEntry {
  std::vector<std::string> names;
  DecisionReport report;
};

// One run per size-k subset of `pool`, in lexicographic order.
std::vector<SweepEntry> sweep_groundings(const KnowledgeBase& kb, const std::optional<Query>& query,
                                         const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                                         const std::vector<std::string>& pool);

// Ground constraints reachable from `seed` through shared atoms.
struct Restriction {
  std::vector<GroundConstraint> logical;
  std::vector<GroundConstraint> expectation;
  std::set<Atom> atoms;
};
Restriction restrict_to(const std::set<Atom>& seed, const std::vector<GroundConstraint>& logical,
                        const std::vector<GroundConstraint>& expectation);

}  // namespace sosr
