// teamsem: command-line front end.
//
// Exit codes: 0 satisfied (or success), 1 refuted, 2 unknown, 3 certificate
// rejected; 10 and above are errors with a message on stderr.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "teamsem/eval_esof.hpp"
#include "teamsem/eval_multi.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"
#include "teamsem/harness.hpp"
#include "teamsem/io.hpp"
#include "teamsem/transform.hpp"

using namespace teamsem;

namespace {

enum Exit : int {
  kSatisfied = 0,
  kRefuted = 1,
  kUnknown = 2,
  kRejected = 3,
  kUsage = 10,
  kInput = 11,
  kSyntax = 12,
  kRefused = 13,
};

int exit_of(VerdictKind k) {
  switch (k) {
    case VerdictKind::Satisfied: return kSatisfied;
    case VerdictKind::Refuted: return kRefuted;
    default: return kUnknown;
  }
}

// Inline text when it starts with '(', otherwise a file name.
std::string formula_text(const std::string& arg) {
  const auto start = arg.find_first_not_of(" \t\n");
  if (start != std::string::npos && arg[start] == '(') return arg;
  return io::read_text(arg);
}

io::Json read_json(const std::string& path) {
  const std::string text = io::read_text(path);
  try {
    return io::Json::parse(text);
  } catch (const io::Json::exception& e) {
    throw DomainError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const io::Json& j) {
  if (path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << j.dump(2) << "\n";
}

VarList split_vars(const std::string& csv) {
  VarList out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

struct Common {
  std::string formula;
  std::string team = "-";
  std::string structure;
  std::string certificate;
  std::string verify;
  int resolution = 1;
  int max_domain = 0;
  std::uint64_t budget = 0;
};

// Structure from the file, or the bare domain of the team file.
Structure load_structure(const Common& c, const io::Json* team) {
  if (!c.structure.empty()) return io::structure_from_json(read_json(c.structure));
  if (team && team->contains("domain")) return Structure{io::domain_from_json(team->at("domain")), {}, {}};
  throw DomainError("no domain: give --structure or a team file with a \"domain\"");
}

void same_domain(const Structure& A, const Domain& d) {
  if (!(A.domain == d)) throw DomainError("team and structure use different domains");
}

int cmd_parse(const std::string& arg, bool esof) {
  const std::string text = formula_text(arg);
  if (esof) {
    EsofPtr f = parse_esof(text);
    std::cout << print(f) << "\n";
    const auto fv = free_vars(*f);
    const auto ff = free_functions(*f);
    std::cout << "free variables:";
    for (const auto& v : fv) std::cout << " " << v;
    std::cout << "\nfree functions:";
    for (const auto& v : ff) std::cout << " " << v;
    std::cout << "\n";
    return 0;
  }
  FormulaPtr f = parse_formula(text);
  std::cout << print(f) << "\nfree variables:";
  for (const auto& v : free_vars(*f)) std::cout << " " << v;
  std::cout << "\n";
  return 0;
}

int cmd_eval_prob(const Common& c) {
  const io::Json tj = read_json(c.team);
  const Structure A = load_structure(c, &tj);
  Domain d;
  const ProbabilisticTeam X = io::team_from_json(tj, d, &A.domain);
  same_domain(A, d);
  const FormulaPtr phi = parse_formula(formula_text(c.formula));

  if (!c.verify.empty()) {
    const Certificate cert = io::certificate_from_json(read_json(c.verify), d);
    const bool ok = verify_certificate(A, X, *phi, cert);
    std::cout << (ok ? "certificate accepted" : "certificate rejected") << "\n";
    return ok ? kSatisfied : kRejected;
  }
  ProbOptions o;
  o.resolution = c.resolution;
  if (c.max_domain > 0) o.max_domain = c.max_domain;
  if (c.budget > 0) o.node_budget = c.budget;
  const Verdict v = eval_prob(A, X, phi, o);
  std::cout << to_string(v.kind) << " (resolution " << v.resolution << ", " << v.nodes << " nodes)\n";
  if (v.satisfied() && !c.certificate.empty()) write_json(c.certificate, io::to_json(*v.certificate, d));
  return exit_of(v.kind);
}

int cmd_eval_multi(const Common& c) {
  const io::Json tj = read_json(c.team);
  const Structure A = load_structure(c, &tj);
  Domain d;
  const Multiteam mX = io::multiteam_from_json(tj, d, &A.domain);
  same_domain(A, d);
  const FormulaPtr phi = parse_formula(formula_text(c.formula));

  if (!c.verify.empty()) {
    const MultiCertificate cert = io::multi_certificate_from_json(read_json(c.verify), d);
    const bool ok = verify_multi_certificate(A, mX, *phi, cert);
    std::cout << (ok ? "certificate accepted" : "certificate rejected") << "\n";
    return ok ? kSatisfied : kRejected;
  }
  MultiOptions o;
  o.max_domain = c.max_domain > 0 ? c.max_domain : std::max(o.max_domain, A.size());
  if (c.budget > 0) o.node_budget = c.budget;
  const auto cert = eval_multi_with_witness(A, mX, phi, o);
  std::cout << (cert ? "satisfied" : "refuted") << "\n";
  if (cert && !c.certificate.empty()) write_json(c.certificate, io::to_json(*cert, d));
  return cert ? kSatisfied : kRefuted;
}

int cmd_eval_esof(const Common& c) {
  const Structure A = load_structure(c, nullptr);
  const EsofPtr phi = parse_esof(formula_text(c.formula));
  if (!c.verify.empty()) {
    const EsofWitnesses w = io::witnesses_from_json(read_json(c.verify), A.domain);
    const bool ok = verify_esof_certificate(A, *phi, {}, w);
    std::cout << (ok ? "certificate accepted" : "certificate rejected") << "\n";
    return ok ? kSatisfied : kRejected;
  }
  EsofOptions o;
  o.resolution = c.resolution;
  if (c.max_domain > 0) o.max_domain = c.max_domain;
  if (c.budget > 0) o.node_budget = c.budget;
  const EsofResult r = eval_esof(A, *phi, {}, o);
  std::cout << to_string(r.kind) << " (resolution " << r.resolution << ", " << r.nodes << " nodes)\n";
  if (r.satisfied() && !c.certificate.empty()) write_json(c.certificate, io::to_json(r.witnesses, A.domain));
  return exit_of(r.kind);
}

int cmd_reduce(const std::string& kind, const std::string& path) {
  if (kind == "exact-cover") {
    const auto enc = gen_exact_cover(io::exact_cover_from_json(read_json(path)));
    std::cout << io::to_json(enc.team, enc.domain).dump(2) << "\n";
    return 0;
  }
  if (kind == "bayes") {
    const BayesSpec spec = io::bayes_spec_from_json(read_json(path));
    std::cout << io::to_json(gen_bayes_joint(spec), spec.domain).dump(2) << "\n";
    return 0;
  }
  throw DomainError("unknown instance kind '" + kind + "' (exact-cover or bayes)");
}

int run(int argc, char** argv) {
  CLI::App app{"Probabilistic and multiteam semantics: model checking and translations"};
  app.require_subcommand(1);
  Common c;

  auto add_eval = [&](CLI::App* sub, bool team) {
    sub->add_option("--formula", c.formula, "formula file, or inline text starting with '('")->required();
    if (team) sub->add_option("--team", c.team, "team file (default: stdin)");
    sub->add_option("--structure", c.structure, "structure file");
    sub->add_option("--certificate", c.certificate, "write the certificate here on success ('-' for stdout)");
    sub->add_option("--verify", c.verify, "check this certificate instead of searching");
    sub->add_option("--max-domain", c.max_domain, "refuse larger domains");
    sub->add_option("--budget", c.budget, "search node budget");
  };

  auto* parse = app.add_subcommand("parse", "parse and print a formula");
  std::string parse_arg;
  bool parse_esof_flag = false;
  parse->add_option("formula", parse_arg, "formula file or inline text")->required();
  parse->add_flag("--esof", parse_esof_flag, "parse as a two-sorted sentence");

  auto* eval_prob_cmd = app.add_subcommand("eval-prob", "probabilistic team semantics");
  add_eval(eval_prob_cmd, true);
  eval_prob_cmd->add_option("--resolution", c.resolution, "grid resolution N")->check(CLI::PositiveNumber);

  auto* eval_multi_cmd = app.add_subcommand("eval-multi", "multiteam semantics");
  add_eval(eval_multi_cmd, true);

  auto* eval_esof_cmd = app.add_subcommand("eval-esof", "two-sorted sentences over a structure");
  add_eval(eval_esof_cmd, false);
  eval_esof_cmd->add_option("--resolution", c.resolution, "grid resolution")->check(CLI::PositiveNumber);
  eval_esof_cmd->get_option("--structure")->required();

  auto* translate = app.add_subcommand("translate", "first-order formula to a two-sorted sentence");
  std::string vars_csv, fn_name = "f";
  bool translate_nf = false;
  translate->add_option("--formula", c.formula, "formula file or inline text")->required();
  translate->add_option("--vars", vars_csv, "team variables, comma separated")->required();
  translate->add_option("--fn", fn_name, "name of the team's distribution symbol");
  translate->add_flag("--normalize", translate_nf, "also bring the result into normal form");

  auto* normalize = app.add_subcommand("normalize", "normal form of a two-sorted sentence, or cindep normal form");
  bool check_only = false, cindep = false;
  normalize->add_option("--formula", c.formula, "formula file or inline text")->required();
  normalize->add_flag("--check", check_only, "only report whether the sentence is in normal form");
  normalize->add_flag("--cindep", cindep, "normalize the independence atoms of a first-order formula");

  auto* back = app.add_subcommand("from-esof", "normal-form sentence to a first-order formula");
  back->add_option("--formula", c.formula, "sentence file or inline text")->required();
  back->add_option("--fn", fn_name, "free distribution symbol")->required();
  back->add_option("--vars", vars_csv, "team variables, comma separated")->required();

  auto* reduce = app.add_subcommand("reduce", "build the team of an instance file");
  std::string reduce_kind, reduce_path;
  reduce->add_option("kind", reduce_kind, "exact-cover or bayes")->required();
  reduce->add_option("file", reduce_path, "instance file ('-' for stdin)")->required();

  auto* roundtrip = app.add_subcommand("roundtrip", "random agreement check of direct and translated evaluation");
  RoundtripOptions ro;
  int rows = static_cast<int>(ro.rows);
  roundtrip->add_option("--trials", ro.trials)->check(CLI::NonNegativeNumber);
  roundtrip->add_option("--domain", ro.domain)->check(CLI::PositiveNumber);
  roundtrip->add_option("--rows", rows)->check(CLI::PositiveNumber);
  roundtrip->add_option("--resolution", ro.resolution)->check(CLI::PositiveNumber);
  roundtrip->add_option("--vars", ro.max_vars, "maximum number of team variables")->check(CLI::PositiveNumber);
  roundtrip->add_option("--depth", ro.depth)->check(CLI::NonNegativeNumber);
  roundtrip->add_option("--seed", ro.seed);
  roundtrip->add_option("--threads", ro.threads, "0 for one per core");
  roundtrip->add_option("--budget", ro.esof_node_budget, "node budget of the two-sorted search");
  bool verbose = false;
  roundtrip->add_flag("-v,--verbose", verbose, "print every trial");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  if (parse->parsed()) return cmd_parse(parse_arg, parse_esof_flag);
  if (eval_prob_cmd->parsed()) return cmd_eval_prob(c);
  if (eval_multi_cmd->parsed()) return cmd_eval_multi(c);
  if (eval_esof_cmd->parsed()) return cmd_eval_esof(c);
  if (translate->parsed()) {
    EsofPtr psi = to_esof(parse_formula(formula_text(c.formula)), split_vars(vars_csv), fn_name);
    std::cout << print(translate_nf ? normalize_esof(psi) : psi) << "\n";
    return 0;
  }
  if (normalize->parsed()) {
    const std::string text = formula_text(c.formula);
    if (cindep) {
      std::cout << print(normalize_cindep(parse_formula(text))) << "\n";
      return 0;
    }
    EsofPtr phi = parse_esof(text);
    if (check_only) {
      const auto why = check_normal_form(*phi);
      std::cout << (why ? "not in normal form: " + *why : std::string("in normal form")) << "\n";
      return why ? 1 : 0;
    }
    std::cout << print(normalize_esof(phi)) << "\n";
    return 0;
  }
  if (back->parsed()) {
    std::cout << print(from_esof(parse_esof(formula_text(c.formula)), fn_name, split_vars(vars_csv))) << "\n";
    return 0;
  }
  if (reduce->parsed()) return cmd_reduce(reduce_kind, reduce_path);
  if (roundtrip->parsed()) {
    ro.rows = static_cast<std::size_t>(rows);
    const RoundtripReport r = run_roundtrip(ro);
    if (verbose)
      for (const auto& t : r.trials)
        std::cout << t.index << "\t" << to_string(t.prob) << "\t" << to_string(t.esof) << "\t" << t.team << "\t"
                  << t.formula << (t.error.empty() ? "" : "\terror: " + t.error) << "\n";
    std::cout << "trials " << r.trials.size() << "\nboth decided " << r.both_decided << "\nagreements "
              << r.agreements << "\ndisagreements " << r.disagreements << "\nunknown (direct) " << r.prob_unknown
              << "\nunknown (translated) " << r.esof_unknown << "\nerrors " << r.errors << "\nunknown rate "
              << r.unknown_rate() << "\nseconds " << r.seconds << "\n";
    return r.disagreements == 0 && r.errors == 0 ? 0 : 1;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const SyntaxError& e) {
    std::cerr << "teamsem: syntax error: " << e.what() << "\n";
    return kSyntax;
  } catch (const RefusedInput& e) {
    std::cerr << "teamsem: refused: " << e.what() << "\n";
    return kRefused;
  } catch (const std::exception& e) {
    std::cerr << "teamsem: " << e.what() << "\n";
    return kInput;
  }
}
