#include "CLI11.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "sosr/certificate.hpp"
#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"
#include "sosr/learner.hpp"
#include "sosr/oracle.hpp"
#include "sosr/partial.hpp"
#include "sosr/report.hpp"

using namespace sosr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConflict = 2, kSolver = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

int default_threads() {
  if (const char* env = std::getenv("SOSR_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u));
}

struct Options {
  std::string kb_path, data_path, query_text, out_path, mixture_path, mask_text = "0", cert_path, cert_out;
  std::string slack = "max", mode = "hypothesis", sweep;
  int degree = 2, rank = -1, threads = 0, grid_resolution = 2;
  double delta = 0.01, norm_bound = 1, tol = 1e-8, eps_q = 1e-6, verify_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t m = 1000;
  bool timings = false;
};

LearnerConfig learner_config(const Options& o) {
  LearnerConfig cfg;
  cfg.degree = o.degree;
  cfg.k = o.rank;
  cfg.delta = o.delta;
  cfg.norm_bound = o.norm_bound;
  cfg.eps_q = o.eps_q;
  cfg.tol = o.tol;
  cfg.seed = o.seed;
  cfg.threads = o.threads > 0 ? o.threads : default_threads();
  cfg.slack = parse_slack_variant(o.slack);
  if (o.mode == "hypothesis")
    cfg.mode = DecideMode::Hypothesis;
  else if (o.mode == "prove")
    cfg.mode = DecideMode::Prove;
  else
    throw UsageError("--mode must be 'hypothesis' or 'prove'");
  return cfg;
}

json config_echo(const Options& o, const std::string& sub) {
  json c;
  if (!o.kb_path.empty()) c["kb"] = o.kb_path;
  if (!o.data_path.empty()) c["data"] = o.data_path;
  if (!o.query_text.empty()) c["query"] = o.query_text;
  if (sub == "learn" || sub == "decide" || sub == "oracle" || sub == "lift") {
    c["degree"] = o.degree;
    c["rank"] = o.rank;
  }
  if (sub == "ground") c["rank"] = o.rank;
  if (sub == "learn" || sub == "decide") {
    c["delta"] = number(o.delta);
    c["norm_bound"] = number(o.norm_bound);
    c["tol"] = number(o.tol);
    c["slack_variant"] = o.slack;
    c["seed"] = o.seed;
  }
  if (sub == "decide") {
    c["mode"] = o.mode;
    c["eps_q"] = number(o.eps_q);
    if (!o.sweep.empty()) c["sweep_groundings"] = o.sweep;
  }
  if (sub == "oracle") {
    c["grid_resolution"] = o.grid_resolution;
    c["eps_q"] = number(o.eps_q);
  }
  if (sub == "simulate") {
    c["mixture"] = o.mixture_path;
    c["mask"] = o.mask_text;
    c["m"] = o.m;
    c["seed"] = o.seed;
  }
  if (sub == "verify-cert") {
    c["cert"] = o.cert_path;
    c["tol"] = number(o.verify_tol);
  }
  return c;
}

KnowledgeBase load_kb(const Options& o) {
  if (o.kb_path.empty()) throw UsageError("--kb is required");
  return parse_kb(read_file(o.kb_path));
}

std::optional<Query> load_query(const Options& o, const KnowledgeBase& kb) {
  if (o.query_text.empty()) return std::nullopt;
  return parse_query(o.query_text, kb);
}

std::vector<PartialModel> load_data(const Options& o, const KnowledgeBase& kb) {
  if (o.data_path.empty()) return {};
  return load_partial_models(o.data_path, &kb);
}

int run_parse(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  json r;
  r["constraints"] = kb.constraints.size();
  json rendered = json::array();
  for (const auto& c : kb.constraints) rendered.push_back(render_constraint(c));
  r["rendered"] = rendered;
  r["constants"] = kb.constants;
  r["signature"] = kb.signature;
  r["quantifier_rank"] = quantifier_rank(kb);
  r["bounds"] = kb.bounds.size();
  if (auto q = load_query(o, kb)) {
    r["query"] = render_query(*q);
    r["query_rank"] = quantifier_rank(*q);
  }
  write_output(o.out_path, dump(envelope("parse", config_echo(o, "parse"), r)));
  return kOk;
}

int run_ground(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  auto q = load_query(o, kb);
  int k = o.rank >= 0 ? o.rank : std::max(quantifier_rank(kb), q ? quantifier_rank(*q) : 0);
  auto gnd = ground(kb, k, q ? query_constants(*q) : std::set<std::string>{});
  write_output(o.out_path, dump(envelope("ground", config_echo(o, "ground"), to_json(gnd))));
  return kOk;
}

int run_lift(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  auto q = load_query(o, kb);
  auto run = prepare_run(kb, q, load_data(o, kb), learner_config(o));
  json r;
  r["atoms"] = run.atoms.size();
  r["k"] = run.k;
  r["constants"] = run.lift_constants;
  r["classes"] = to_json(run.classes);
  r["class_count"] = run.classes.size();
  std::size_t monomials = 0;
  for (const auto& c : run.classes) monomials += c.members.size();
  r["monomials"] = monomials;
  write_output(o.out_path, dump(envelope("lift", config_echo(o, "lift"), r, run.warnings)));
  return kOk;
}

int run_simulate(const Options& o) {
  if (o.mixture_path.empty()) throw UsageError("--mixture is required");
  std::optional<KnowledgeBase> kb;
  if (!o.kb_path.empty()) kb = load_kb(o);
  WorldMixture mix = load_mixture(o.mixture_path, kb ? &*kb : nullptr);
  MaskSpec mask = parse_mask(o.mask_text, o.seed);
  auto data = simulate(mix, mask, o.m);
  std::ostringstream lines;
  write_partial_models(lines, data);
  if (o.out_path.empty()) throw UsageError("--out is required for simulate");
  write_output(o.out_path, lines.str());

  std::map<std::string, std::size_t> hidden;
  for (const auto& rho : data)
    for (const auto& [a, v] : rho.values)
      if (!v) ++hidden[a.str()];
  json frac = json::object();
  for (const auto& [a, n] : hidden) frac[a] = number(static_cast<double>(n) / static_cast<double>(data.size()));
  json r = {{"examples", data.size()}, {"hidden_fraction", frac}, {"out", o.out_path}};
  std::cout << dump(envelope("simulate", config_echo(o, "simulate"), r));
  return kOk;
}

int run_learn(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  auto q = load_query(o, kb);
  auto data = load_data(o, kb);
  if (data.empty()) throw UsageError("--data is required for learn");
  LearnerConfig cfg = learner_config(o);
  auto run = prepare_run(kb, q, data, cfg);
  double slack = hoeffding_slack(cfg, run.atoms.size(), data.size());
  auto table = learn_moment_bounds(data, run.gnd.logical, run.classes, run.bounds, cfg, slack);
  json r = to_json(table);
  r["atoms"] = run.atoms.size();
  r["slack_printed"] = number(hoeffding_slack_printed(cfg.norm_bound, cfg.delta, run.atoms.size(), cfg.degree, data.size()));
  r["slack_textbook"] =
      number(hoeffding_slack_textbook(cfg.norm_bound, cfg.delta, run.atoms.size(), cfg.degree, data.size()));
  write_output(o.out_path, dump(envelope("learn", config_echo(o, "learn"), r, run.warnings)));
  return kOk;
}

int exit_for(Verdict v) { return v == Verdict::Unknown ? kSolver : kOk; }

int run_decide(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  auto q = load_query(o, kb);
  auto data = load_data(o, kb);
  LearnerConfig cfg = learner_config(o);
  if (!o.sweep.empty()) {
    std::vector<std::string> pool;
    std::stringstream ss(o.sweep);
    for (std::string name; std::getline(ss, name, ',');) {
      name.erase(0, name.find_first_not_of(' '));
      name.erase(name.find_last_not_of(' ') + 1);
      if (!name.empty()) pool.push_back(name);
    }
    auto entries = sweep_groundings(kb, q, data, cfg, pool);
    json list = json::array();
    int code = kOk;
    for (const auto& e : entries) {
      list.push_back({{"names", e.names}, {"report", to_json(e.report, o.timings)}});
      code = std::max(code, exit_for(e.report.verdict));
    }
    write_output(o.out_path, dump(envelope("decide", config_echo(o, "decide"), {{"sweep", list}})));
    return code;
  }
  DecisionReport rep = decide_consistency(kb, q, data, cfg);
  if (!o.cert_out.empty()) {
    if (!rep.certificate) throw UsageError("no certificate to write: verdict is " + verdict_name(rep.verdict));
    write_output(o.cert_out, dump(to_json(*rep.certificate)));
  }
  write_output(o.out_path, dump(envelope("decide", config_echo(o, "decide"), to_json(rep, o.timings), rep.warnings)));
  return exit_for(rep.verdict);
}

int run_oracle(const Options& o) {
  KnowledgeBase kb = load_kb(o);
  auto q = load_query(o, kb);
  std::vector<std::string> warnings;
  if (!o.data_path.empty()) warnings.push_back("the oracle decides the KB and query only; --data is ignored");
  int k = o.rank >= 0 ? o.rank : std::max(quantifier_rank(kb), q ? quantifier_rank(*q) : 0);
  auto gnd = ground(kb, k, q ? query_constants(*q) : std::set<std::string>{});
  std::vector<GroundConstraint> extra;
  if (q)
    for (auto& [label, g] : query_instances(*q, gnd.universe)) extra.push_back(std::move(g));
  std::set<Atom> atoms = gnd.atoms();
  for (const auto& g : extra) {
    auto a = g.poly.atoms();
    atoms.insert(a.begin(), a.end());
  }
  BoundsTable table = build_bounds_table(kb, atoms, gnd.logical);
  ValueGrid grid = default_grid(atoms, gnd.logical, table, o.grid_resolution);
  OracleVerdict v = brute_force_consistency(gnd, extra, grid, from_double(o.eps_q));
  json r = to_json(v);
  r["verdict"] = v.satisfiable ? "Consistent" : "Refuted";
  r["atoms"] = atoms.size();
  if (!v.exact) warnings.push_back("grid semantics: verdict is approximate for non-Boolean atoms");
  write_output(o.out_path, dump(envelope("oracle", config_echo(o, "oracle"), r, warnings)));
  return kOk;
}

int run_verify(const Options& o) {
  if (o.cert_path.empty()) throw UsageError("--cert is required");
  json j;
  try {
    j = json::parse(read_file(o.cert_path));
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("malformed certificate: ") + e.what());
  }
  // A decide report carries its certificate under result.certificate.
  if (j.contains("result") && j["result"].contains("certificate")) j = j["result"]["certificate"];
  if (j.is_null()) throw UsageError("the report has no certificate");
  Certificate cert = certificate_from_json(j);
  std::vector<std::string> warnings;
  if (!o.kb_path.empty()) {
    KnowledgeBase kb = load_kb(o);
    std::set<std::string> unknown;
    auto check = [&](const Polynomial& p) {
      for (const auto& a : p.atoms()) {
        auto it = kb.signature.find(a.predicate);
        if (it == kb.signature.end() || it->second != a.args.size()) unknown.insert(a.str());
      }
    };
    for (const auto& b : cert.blocks) check(b.g);
    for (const auto& r : cert.rows) check(r.b);
    for (const auto& e : cert.equalities) check(e.h);
    for (const auto& a : unknown) warnings.push_back("atom " + a + " does not match the knowledge base signature");
  }
  VerifyReport rep = verify_certificate(cert, o.verify_tol);
  json r = {{"verified", rep.ok},
            {"exact", rep.exact},
            {"constant", to_string(rep.constant)},
            {"max_residual", number(rep.max_residual)},
            {"min_eigenvalue", number(rep.min_eigenvalue)},
            {"message", rep.message},
            {"blocks", cert.blocks.size()},
            {"rows", cert.rows.size()},
            {"equalities", cert.equalities.size()}};
  write_output(o.out_path, dump(envelope("verify-cert", config_echo(o, "verify-cert"), r, warnings)));
  return rep.ok ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sum-of-squares reasoning over first-order probabilistic knowledge bases with partial data"};
  app.require_subcommand(1);
  Options o;

  auto add_kb = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--kb", o.kb_path, "knowledge base file");
    if (required) opt->required();
  };
  auto add_common = [&](CLI::App* s) {
    s->add_option("--out", o.out_path, "report file (default stdout)");
    s->add_option("--threads", o.threads, "worker threads (default $SOSR_THREADS)")->check(CLI::PositiveNumber);
  };
  auto add_solver = [&](CLI::App* s) {
    s->add_option("--degree", o.degree, "SOS degree (even, >= 2)");
    s->add_option("--rank", o.rank, "grounding width k (default: quantifier rank)")->check(CLI::NonNegativeNumber);
    s->add_option("--query", o.query_text, "query constraint");
    s->add_option("--data", o.data_path, "partial models, one JSON object per line");
    s->add_option("--seed", o.seed, "random seed");
  };
  auto add_learning = [&](CLI::App* s) {
    s->add_option("--delta", o.delta, "confidence parameter");
    s->add_option("--norm-bound", o.norm_bound, "naive norm bound S");
    s->add_option("--tol", o.tol, "solver tolerance");
    s->add_option("--slack", o.slack, "slack formula: printed, textbook or max");
  };

  auto* parse = app.add_subcommand("parse", "parse and validate a knowledge base");
  add_kb(parse, true);
  add_common(parse);
  parse->add_option("--query", o.query_text, "query to validate");

  auto* grd = app.add_subcommand("ground", "print GND(kb, k)");
  add_kb(grd, true);
  add_common(grd);
  grd->add_option("--rank", o.rank, "grounding width k")->check(CLI::NonNegativeNumber);
  grd->add_option("--query", o.query_text, "query whose constants join the grounding");

  auto* lift = app.add_subcommand("lift", "print the lift classes of the grounding");
  add_kb(lift, true);
  add_common(lift);
  add_solver(lift);

  auto* sim = app.add_subcommand("simulate", "sample masked examples from a world mixture");
  add_kb(sim, false);
  sim->add_option("--mixture", o.mixture_path, "world mixture file")->required();
  sim->add_option("--mask", o.mask_text, "hide probabilities, e.g. 'shrunk=0.2'");
  sim->add_option("--m", o.m, "number of examples")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "random seed");
  sim->add_option("--out", o.out_path, "output data file")->required();

  auto* learn = app.add_subcommand("learn", "learn averaged moment bounds");
  add_kb(learn, true);
  add_common(learn);
  add_solver(learn);
  add_learning(learn);

  auto* decide = app.add_subcommand("decide", "decide a query against the knowledge base and data");
  add_kb(decide, true);
  add_common(decide);
  add_solver(decide);
  add_learning(decide);
  decide->add_option("--mode", o.mode, "hypothesis (test consistency) or prove");
  decide->add_option("--eps-q", o.eps_q, "strictness margin for negated constraints");
  decide->add_option("--cert-out", o.cert_out, "write the certificate here");
  decide->add_option("--sweep-groundings", o.sweep, "comma-separated name pool; one run per size-k subset");
  decide->add_flag("--timings", o.timings, "include wall-clock timings in the report");

  auto* oracle = app.add_subcommand("oracle", "brute-force consistency on a value grid");
  add_kb(oracle, true);
  add_common(oracle);
  add_solver(oracle);
  add_learning(oracle);
  oracle->add_option("--grid-resolution", o.grid_resolution, "grid points per unit range")->check(CLI::PositiveNumber);
  oracle->add_option("--eps-q", o.eps_q, "strictness margin for failed rule premises");

  auto* verify = app.add_subcommand("verify-cert", "check a certificate");
  add_kb(verify, false);
  add_common(verify);
  verify->add_option("--cert", o.cert_path, "certificate or decide report")->required();
  verify->add_option("--tol", o.verify_tol, "tolerance for non-exact certificates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*parse) return run_parse(o);
    if (*grd) return run_ground(o);
    if (*lift) return run_lift(o);
    if (*sim) return run_simulate(o);
    if (*learn) return run_learn(o);
    if (*decide) return run_decide(o);
    if (*oracle) return run_oracle(o);
    if (*verify) return run_verify(o);
  } catch (const DataConflict& e) {
    std::cerr << "data/KB conflict: " << e.what() << "\n";
    return kConflict;
  } catch (const CompactnessError& e) {
    std::cerr << "knowledge base is not explicitly compact: " << e.what() << "\n";
    return kConflict;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DegreeError& e) {
    std::cerr << "degree error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedQuery& e) {
    std::cerr << "unsupported query: " << e.what() << "\n";
    return kUsage;
  } catch (const SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
