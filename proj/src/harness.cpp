#include "teamsem/harness.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <thread>

#include "teamsem/transform.hpp"

namespace teamsem {

namespace {

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

const std::string& any_of(Rng& rng, const VarList& vs) { return vs[pick(rng, 0, static_cast<int>(vs.size()) - 1)]; }

VarList tuple_of(Rng& rng, const VarList& vs, int len) {
  VarList out;
  for (int i = 0; i < len; ++i) out.push_back(any_of(rng, vs));
  return out;
}

VarList subset_of(Rng& rng, const VarList& vs, bool nonempty) {
  VarList out;
  for (const auto& v : vs)
    if (pick(rng, 0, 2) == 0) out.push_back(v);
  if (nonempty && out.empty()) out.push_back(any_of(rng, vs));
  return out;
}

FormulaPtr random_atom(Rng& rng, const VarList& vars) {
  auto t = [&] { return Term::var(any_of(rng, vars)); };
  switch (pick(rng, 0, 5)) {
    case 0: return fo::eq(t(), t());
    case 1: return fo::neq(t(), t());
    case 2: return fo::rel("R", {t()});
    case 3: return fo::nrel("R", {t()});
    case 4: {
      const int k = pick(rng, 1, 2);
      return fo::approx(tuple_of(rng, vars, k), tuple_of(rng, vars, k));
    }
    default: return fo::cindep(subset_of(rng, vars, false), subset_of(rng, vars, true), subset_of(rng, vars, true));
  }
}

FormulaPtr random_tree(Rng& rng, VarList vars, int depth, int& quantifiers_left, int& next_fresh) {
  const int choice = depth <= 0 ? 0 : pick(rng, 0, quantifiers_left > 0 ? 4 : 2);
  switch (choice) {
    case 0: return random_atom(rng, vars);
    case 1: {
      auto l = random_tree(rng, vars, depth - 1, quantifiers_left, next_fresh);
      return fo::conj(l, random_tree(rng, vars, depth - 1, quantifiers_left, next_fresh));
    }
    case 2: {
      auto l = random_tree(rng, vars, depth - 1, quantifiers_left, next_fresh);
      return fo::disj(l, random_tree(rng, vars, depth - 1, quantifiers_left, next_fresh));
    }
    default: {
      --quantifiers_left;
      const std::string q = "q" + std::to_string(next_fresh++);
      vars.push_back(q);
      auto body = random_tree(rng, vars, depth - 1, quantifiers_left, next_fresh);
      return choice == 3 ? fo::exists(q, body) : fo::forall(q, body);
    }
  }
}

}  // namespace

Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

ProbabilisticTeam random_team(Rng& rng, const VarList& vars, int domain_size, std::size_t max_rows,
                              int max_denominator) {
  const int den = pick(rng, 1, max_denominator);
  const int rows = pick(rng, 1, static_cast<int>(max_rows));
  std::vector<Values> tuples;
  for (int r = 0; r < rows; ++r) {
    Values v;
    for (std::size_t i = 0; i < vars.size(); ++i) v.push_back(pick(rng, 0, domain_size - 1));
    tuples.push_back(v);
  }
  std::vector<long> units(rows, 0);
  for (int u = 0; u < den; ++u) ++units[pick(rng, 0, rows - 1)];
  std::vector<std::pair<Values, Rational>> weighted;
  for (int r = 0; r < rows; ++r) weighted.emplace_back(tuples[r], Rational(units[r]) / den);
  return ProbabilisticTeam(vars, domain_size, weighted);
}

Structure random_structure(Rng& rng, int domain_size) {
  Structure A = Structure::plain(domain_size);
  Relation R{1, {}};
  for (int a = 0; a < domain_size; ++a)
    if (pick(rng, 0, 1)) R.tuples.insert({a});
  A.relations["R"] = R;
  return A;
}

FormulaPtr random_qf_formula(Rng& rng, const VarList& vars, int depth) {
  int none = 0, fresh = 0;
  return random_tree(rng, vars, depth, none, fresh);
}

FormulaPtr random_formula(Rng& rng, const VarList& vars, int depth, int max_quantifiers) {
  int left = max_quantifiers, fresh = 0;
  return random_tree(rng, vars, depth, left, fresh);
}

Distribution team_distribution(const ProbabilisticTeam& X) {
  const int arity = static_cast<int>(X.vars().size());
  Distribution f(arity, X.domain_size(), std::vector<Rational>(tuple_count(X.domain_size(), arity), 0));
  for (const auto& [row, w] : X.rows()) f.table[f.index(row)] = w;
  return f;
}

Structure with_team_function(Structure A, const ProbabilisticTeam& X, const std::string& f) {
  A.functions[f] = team_distribution(X);
  return A;
}

double RoundtripReport::unknown_rate() const {
  const int n = static_cast<int>(trials.size()) - errors;
  return n <= 0 ? 0.0 : static_cast<double>(n - both_decided) / n;
}

void parallel_for(int n, unsigned threads, const std::function<void(int)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max(1, n));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

RoundtripReport run_roundtrip(const RoundtripOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RoundtripReport report;
  report.trials.resize(opts.trials);

  parallel_for(opts.trials, opts.threads, [&](int i) {
    Rng rng = trial_rng(opts.seed, i);
    RoundtripTrial& t = report.trials[i];
    t.index = i;
    VarList vars;
    const int k = pick(rng, 1, opts.max_vars);
    for (int v = 0; v < k; ++v) vars.push_back("x" + std::to_string(v));
    const ProbabilisticTeam X = random_team(rng, vars, opts.domain, opts.rows, 4);
    const Structure A = random_structure(rng, opts.domain);
    const FormulaPtr phi = random_qf_formula(rng, vars, opts.depth);
    t.formula = print(phi);
    for (const auto& [row, w] : X.rows()) {
      t.team += t.team.empty() ? "" : " ";
      for (Element e : row) t.team += std::to_string(e);
      t.team += ":" + to_string(w);
    }
    try {
      ProbOptions po;
      po.resolution = opts.resolution;
      t.prob = eval_prob(A, X, phi, po).kind;

      const EsofPtr psi = to_esof(phi, X.vars());
      const Structure B = with_team_function(A, X);
      EsofOptions eo;
      eo.resolution = opts.resolution;
      eo.node_budget = opts.esof_node_budget;
      const EsofResult r = eval_esof(B, *psi, {}, eo);
      t.esof = r.kind;
      if (r.satisfied() && !verify_esof_certificate(B, *psi, {}, r.witnesses)) t.error = "witnesses failed verification";
    } catch (const std::exception& e) {
      t.error = e.what();
    }
  });

  for (const auto& t : report.trials) {
    if (!t.error.empty()) {
      ++report.errors;
      continue;
    }
    if (t.prob == VerdictKind::Unknown) ++report.prob_unknown;
    if (t.esof == VerdictKind::Unknown) ++report.esof_unknown;
    if (t.prob == VerdictKind::Unknown || t.esof == VerdictKind::Unknown) continue;
    ++report.both_decided;
    if (t.prob == t.esof)
      ++report.agreements;
    else
      ++report.disagreements;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace teamsem
